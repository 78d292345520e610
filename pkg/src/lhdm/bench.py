"""Instance generation, dataset I/O, timing runs and report emission.

Random numbers come from NumPy's PCG64 generator (``numpy.random.default_rng``)
seeded per instance, so a seed reproduces the same instance on every
platform.
"""
import csv
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from .dense import read_dmat, write_dmat
from .errors import ErcUnreachable
from .recovery import (coherence_uniqueness, erc_value, l1_nnls_solve,
                       mutual_coherence, omp_solve, positivity_trick_solve)
from .solvers import SolverConfig, lh_solve, lhdm_solve

ERC_RESAMPLE_ROUNDS = 50
ERC_SHRINK_ROUNDS = 10
ERC_SHRINK_FACTOR = 0.1


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for one random test instance.

    ``sparsity`` is a planted support size when >= 1 and a density
    fraction of ``n`` when in (0, 1).  ``frame`` chooses the matrix
    ensemble: ``"gaussian"`` columns, or ``"incoherent"`` (a low-coherence
    frame shared by all seeds of a shape, randomized per instance by an
    orthogonal row rotation, a column permutation and column signs).
    """

    m: int
    n: int
    sparsity: float = 1
    condition_target: tuple | None = None
    sign_mode: str = "signed"
    require_erc: bool = False
    seed: int = 0
    frame: str = "gaussian"
    family: str = ""

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("dimensions must be positive")
        if self.sign_mode not in ("signed", "nonnegative"):
            raise ValueError(f"sign_mode must be 'signed' or 'nonnegative', got {self.sign_mode!r}")
        if self.frame not in ("gaussian", "incoherent"):
            raise ValueError(f"unknown frame {self.frame!r}")
        if not self.sparsity > 0:
            raise ValueError("sparsity must be positive")
        s = self.support_size
        if s > self.n:
            raise ValueError("support larger than n")
        if self.require_erc:
            if self.m >= self.n:
                raise ValueError("recovery instances must be underdetermined (m < n)")
            if s > self.m:
                raise ValueError("planted support larger than m")
            if self.condition_target is not None:
                raise ValueError("ERC repair would destroy the prescribed conditioning")
        if self.condition_target is not None:
            lo, hi = self.condition_target
            if not 1.0 <= lo <= hi:
                raise ValueError("condition_target must satisfy 1 <= lo <= hi")

    @property
    def support_size(self):
        if self.sparsity >= 1:
            return int(self.sparsity)
        return max(1, int(round(self.sparsity * self.n)))


@dataclass
class Instance:
    instance_id: str
    A: np.ndarray
    b: np.ndarray
    x_planted: np.ndarray
    spec: InstanceSpec
    erc_value: float | None = None
    coherence: float | None = None

    @property
    def support(self):
        return [int(i) for i in np.flatnonzero(self.x_planted)]

    @property
    def family(self):
        return self.spec.family or _default_family(self.spec)

    @property
    def erc_holds(self):
        return self.erc_value is not None and self.erc_value < 1.0

    @property
    def certified_unique(self):
        """Planted solution certified unique by both ERC and coherence."""
        if not self.erc_holds or self.coherence is None:
            return False
        return coherence_uniqueness(self.coherence, max(len(self.support), 1))


def _default_family(spec):
    parts = [spec.sign_mode]
    if spec.condition_target is not None:
        parts.append(f"cond{spec.condition_target[0]:.0e}")
    if spec.require_erc:
        parts.append("erc")
    parts.append(f"{spec.m}x{spec.n}")
    return "-".join(parts)


def random_orthogonal(rng, rows, cols):
    """``rows x cols`` matrix with orthonormal columns (Haar distributed)."""
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))


def conditioned_matrix(rng, m, n, kappa):
    """``U diag(sigma) V^T`` with log-spaced singular values from 1 to 1/kappa."""
    r = min(m, n)
    sigma = np.logspace(0.0, -math.log10(kappa), r)
    U = random_orthogonal(rng, m, r)
    V = random_orthogonal(rng, n, r)
    return np.asfortranarray((U * sigma) @ V.T)


def welch_bound(m, n):
    if n <= m:
        return 0.0
    return math.sqrt((n - m) / (m * (n - 1)))


@lru_cache(maxsize=8)
def _incoherent_frame_cached(m, n, seed, target, iterations):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0)
    off = ~np.eye(n, dtype=bool)
    for _ in range(iterations):
        G = A.T @ A
        G[off] = np.clip(G[off], -target, target)
        vals, vecs = np.linalg.eigh(G)
        vals = np.maximum(vals[-m:], 0.0)
        A = (vecs[:, -m:] * np.sqrt(vals)).T
        A /= np.linalg.norm(A, axis=0)
    A.flags.writeable = False
    return A


def incoherent_frame(m, n, seed=0, target=None, iterations=2000):
    """Unit-norm ``m x n`` frame with small mutual coherence.

    Alternates between clipping the off-diagonal Gram entries to
    ``target`` (default 1.2 times the Welch bound) and projecting back to
    rank ``m``.
    """
    if target is None:
        target = 1.2 * welch_bound(m, n)
    return _incoherent_frame_cached(m, n, seed, float(target), iterations).copy()


def _normalized_gaussian(rng, m, k):
    G = rng.standard_normal((m, k))
    return G / np.linalg.norm(G, axis=0)


def _erc_per_column(A, S):
    off = np.setdiff1d(np.arange(A.shape[1]), S)
    coef = np.linalg.lstsq(A[:, S], A[:, off], rcond=None)[0]
    return off, np.abs(coef).sum(axis=0)


def repair_erc(A, S, rng):
    """Perturb ``A`` until the exact recovery condition holds on ``S``.

    Off-support columns violating the condition are resampled for up to
    ``ERC_RESAMPLE_ROUNDS`` rounds; then the support columns are pulled
    towards their orthonormal basis by ``ERC_SHRINK_FACTOR`` per round.
    """
    A = np.array(A, order="F")
    m = A.shape[0]
    for _ in range(ERC_RESAMPLE_ROUNDS):
        off, vals = _erc_per_column(A, S)
        bad = off[vals >= 1.0]
        if bad.size == 0:
            return A
        A[:, bad] = _normalized_gaussian(rng, m, bad.size)
    for _ in range(ERC_SHRINK_ROUNDS):
        Q, R = np.linalg.qr(A[:, S])
        Q = Q * np.sign(np.diag(R))
        AS = (1.0 - ERC_SHRINK_FACTOR) * A[:, S] + ERC_SHRINK_FACTOR * Q
        A[:, S] = AS / np.linalg.norm(AS, axis=0)
        off, vals = _erc_per_column(A, S)
        bad = off[vals >= 1.0]
        if bad.size == 0:
            return A
        A[:, bad] = _normalized_gaussian(rng, m, bad.size)
    if erc_value(A, S) < 1.0:
        return A
    raise ErcUnreachable(f"ERC still fails on support of size {len(S)}")


def generate_instance(spec, instance_id=None):
    """Draw ``(A, b, x_planted)`` following ``spec``; ``b = A x_planted``."""
    rng = np.random.default_rng(spec.seed)
    m, n = spec.m, spec.n
    if spec.condition_target is not None:
        lo, hi = spec.condition_target
        kappa = 10.0 ** rng.uniform(math.log10(lo), math.log10(hi))
        A = conditioned_matrix(rng, m, n, kappa)
    elif spec.frame == "incoherent":
        F = incoherent_frame(m, n)
        U = random_orthogonal(rng, m, m)
        perm = rng.permutation(n)
        signs = rng.choice([-1.0, 1.0], size=n)
        A = np.asfortranarray((U @ F[:, perm]) * signs)
    else:
        A = np.asfortranarray(_normalized_gaussian(rng, m, n))
    s = spec.support_size
    S = np.sort(rng.choice(n, size=s, replace=False))
    values = rng.standard_normal(s)
    if spec.sign_mode == "nonnegative":
        values = np.abs(values)
    x = np.zeros(n)
    x[S] = values
    erc = coh = None
    if spec.require_erc:
        A = repair_erc(A, S, rng)
        erc = erc_value(A, S)
        coh = mutual_coherence(A)
    b = A @ x
    iid = instance_id or f"{spec.family or _default_family(spec)}-{spec.seed}"
    return Instance(iid, np.asfortranarray(A), b, x, spec, erc, coh)


def generate_family(spec, count, first_seed=None):
    first = spec.seed if first_seed is None else first_seed
    out = []
    for t in range(count):
        sp = InstanceSpec(**{**asdict(spec), "seed": first + t})
        out.append(generate_instance(sp))
    return out


# -- dataset directories ---------------------------------------------------------

def save_dataset(directory, instances):
    """Write each instance to ``directory/<id>/`` (DMAT files plus meta.json)."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    ids = []
    for inst in instances:
        d = root / inst.instance_id
        d.mkdir(exist_ok=True)
        write_dmat(d / "A.dmat", inst.A)
        write_dmat(d / "b.dmat", inst.b)
        write_dmat(d / "x.dmat", inst.x_planted)
        spec = asdict(inst.spec)
        meta = {"instance_id": inst.instance_id, "spec": spec,
                "erc_value": inst.erc_value, "coherence": inst.coherence}
        (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        ids.append(inst.instance_id)
    (root / "manifest.json").write_text(json.dumps({"instances": ids}, indent=2))
    return root


def load_dataset(directory):
    root = Path(directory)
    ids = json.loads((root / "manifest.json").read_text())["instances"]
    out = []
    for iid in ids:
        d = root / iid
        meta = json.loads((d / "meta.json").read_text())
        spec = meta["spec"]
        if spec.get("condition_target") is not None:
            spec["condition_target"] = tuple(spec["condition_target"])
        out.append(Instance(iid, read_dmat(d / "A.dmat"), read_dmat(d / "b.dmat").ravel(),
                            read_dmat(d / "x.dmat").ravel(), InstanceSpec(**spec),
                            meta.get("erc_value"), meta.get("coherence")))
    return out


# -- benchmark runs --------------------------------------------------------------

@dataclass
class BenchRecord:
    instance_id: str
    family: str
    solver_name: str
    wall_time: float
    outer_iterations: int
    inner_iterations: int
    distance_to_optimum: float | None
    residual_norm: float
    erc_holds: bool
    status: str
    sign_flips: int = 0

    @property
    def ok(self):
        return self.status in ("Converged", "IterationCapReached")


RECORD_COLUMNS = [f.name for f in fields(BenchRecord)]


def _nnls_runner(method, flip):
    solve = {"lh": lh_solve, "lhdm": lhdm_solve}[method]

    def run(inst, cfg):
        if inst.spec.sign_mode == "signed":
            res = positivity_trick_solve(inst.A, inst.b, cfg, method=method, sign_flip=flip)
            return res.x_signed, res.nnls_report
        rep = solve(inst.A, inst.b, cfg)
        return rep.x_star, rep
    return run


def _omp_runner(inst, cfg):
    res = omp_solve(inst.A, inst.b)
    return res.x_signed, res


def _l1nnls_runner(lam):
    def run(inst, cfg):
        res = l1_nnls_solve(inst.A, inst.b, lam, cfg)
        return res.x_signed, res.nnls_report
    return run


def solver_registry(lam=1e3):
    return {
        "lh": _nnls_runner("lh", False),
        "lhdm": _nnls_runner("lhdm", False),
        "lh-flip": _nnls_runner("lh", True),
        "lhdm-flip": _nnls_runner("lhdm", True),
        "omp": _omp_runner,
        "l1nnls": _l1nnls_runner(lam),
    }


def run_benchmark(dataset, solvers, repetitions=3, cfg=None, lam=1e3):
    """Time every solver on every instance; one record per pair.

    ``solvers`` holds registry names or ``(name, callable)`` pairs where the
    callable maps ``(instance, cfg)`` to ``(x, report)``.  ``wall_time`` is
    the minimum over ``repetitions`` runs.  A solver exception becomes an
    ``Error: ...`` status instead of aborting the batch.
    """
    if not dataset or not solvers:
        raise ValueError("need at least one instance and one solver")
    cfg = cfg or SolverConfig()
    registry = solver_registry(lam)
    pairs = [(s, registry[s]) if isinstance(s, str) else tuple(s) for s in solvers]
    records = []
    for inst in dataset:
        for name, fn in pairs:
            best = math.inf
            x = rep = None
            try:
                for _ in range(max(1, repetitions)):
                    t0 = time.perf_counter()
                    x, rep = fn(inst, cfg)
                    best = min(best, time.perf_counter() - t0)
            except Exception as exc:  # isolate failures per record
                records.append(BenchRecord(inst.instance_id, inst.family, name, math.nan,
                                           0, 0, None, math.nan, inst.erc_holds,
                                           f"Error: {type(exc).__name__}: {exc}"))
                continue
            status = getattr(rep, "status", "Converged")
            status = getattr(status, "value", status)
            dist = (float(np.linalg.norm(inst.x_planted - x))
                    if inst.certified_unique else None)
            records.append(BenchRecord(
                inst.instance_id, inst.family, name, best,
                int(getattr(rep, "outer_iterations", getattr(rep, "iterations", 0))),
                int(getattr(rep, "inner_iterations", 0)), dist,
                float(np.linalg.norm(inst.A @ x - inst.b)), inst.erc_holds, str(status),
                int(getattr(rep, "sign_flips", 0))))
    return records


def speedups(records, baseline="lh", target="lhdm"):
    """``{instance_id: (family, time_baseline / time_target)}`` over successful pairs."""
    base = {r.instance_id: r for r in records if r.solver_name == baseline and r.ok}
    out = {}
    for r in records:
        if r.solver_name == target and r.ok and r.instance_id in base and r.wall_time > 0:
            out[r.instance_id] = (r.family, base[r.instance_id].wall_time / r.wall_time)
    return out


def summarize(records, pairs=(("lh", "lhdm"),)):
    """Median and mean speedup per family for each (baseline, target) pair."""
    rows = []
    for baseline, target in pairs:
        by_family = {}
        for family, ratio in speedups(records, baseline, target).values():
            by_family.setdefault(family, []).append(ratio)
        for family in sorted(by_family):
            vals = by_family[family]
            rows.append({"family": family, "baseline": baseline, "target": target,
                         "count": len(vals), "median_speedup": statistics.median(vals),
                         "mean_speedup": statistics.fmean(vals)})
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def emit_report(records, path, format="csv", pairs=None):
    """Write records as CSV or JSON lines and a summary next to them.

    The summary goes to ``<stem>.summary.<ext>``.  Returns the summary rows,
    or ``None`` (and writes no summary) when no record succeeded.
    """
    path = Path(path)
    if not records:
        raise ValueError("no records to emit")
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RECORD_COLUMNS)
            for r in records:
                writer.writerow([_cell(getattr(r, c)) for c in RECORD_COLUMNS])
    elif format == "json":
        with open(path, "w") as fh:
            for r in records:
                fh.write(json.dumps(_json_safe(asdict(r)), sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")
    if not any(r.ok for r in records):
        return None
    if pairs is None:
        names = {r.solver_name for r in records}
        pairs = [(a, b) for a, b in (("lh", "lhdm"), ("lh", "lh-flip"), ("lhdm", "lhdm-flip"),
                                     ("lh-flip", "lhdm-flip"))
                 if a in names and b in names]
    summary = summarize(records, pairs)
    spath = path.with_name(path.stem + ".summary" + path.suffix)
    if format == "csv":
        with open(spath, "w", newline="") as fh:
            writer = csv.DictWriter(fh, ["family", "baseline", "target", "count",
                                         "median_speedup", "mean_speedup"])
            writer.writeheader()
            writer.writerows(summary)
    else:
        with open(spath, "w") as fh:
            for row in summary:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    return summary


def _json_safe(d):
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


_CASTS = {"wall_time": float, "outer_iterations": int, "inner_iterations": int,
          "distance_to_optimum": float, "residual_norm": float, "sign_flips": int}


def read_report(path, format="csv"):
    """Parse a file written by :func:`emit_report` back into records."""
    records = []
    if format == "csv":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    else:
        with open(path) as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
    for row in rows:
        kw = {}
        for name in RECORD_COLUMNS:
            v = row[name]
            if name == "erc_holds":
                v = v if isinstance(v, bool) else v == "True"
            elif name in _CASTS:
                if v in ("", None):
                    v = None if name == "distance_to_optimum" else math.nan
                else:
                    v = _CASTS[name](v)
            kw[name] = v
        records.append(BenchRecord(**kw))
    return records
