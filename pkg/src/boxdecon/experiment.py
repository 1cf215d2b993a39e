"""Empirical recovery-rate ("phase transition") experiments.

Each trial draws a random sparse signal, measures it with the box operator
and runs basis pursuit.  Trial seeds come from a splitmix64 hash of the root
seed and ``(n, k, sparsity, trial)``, so any trial can be rerun on its own and
the output does not depend on execution order or parallelism.

CSV schema (one row per trial, rows ordered by ``n, k, sparsity, trial``)::

    n,k,mode,sparsity,trial,seed,recovered,l1_objective,linf_error,verdict,status

``recovered`` is 1 when ``||xhat - x||_inf <= 1e-6``.  ``status`` is ``ok``,
``adversarial`` for rows built from the equal-norm residue-class pair, or
the error reason of a failed solve.  With ``timing=True`` a trailing
``wall_time`` column is added (and the file is no longer reproducible
byte-for-byte).
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boxconv import BoxOperator, Mode
from .exceptions import BoxDeconError
from .recovery import RecoveryConfig, basis_pursuit, recovery_bound, tightness_pair

__all__ = [
    "ExperimentSpec",
    "TrialRecord",
    "splitmix64",
    "trial_seed",
    "random_sparse_signal",
    "run_trial",
    "run_experiment",
    "records_to_csv",
    "summarize",
    "summary_to_csv",
    "RECOVERY_TOL",
]

RECOVERY_TOL = 1e-6
_MASK = (1 << 64) - 1
CSV_FIELDS = [
    "n", "k", "mode", "sparsity", "trial", "seed",
    "recovered", "l1_objective", "linf_error", "verdict", "status",
]


def splitmix64(x: int) -> int:
    """One splitmix64 output step applied to ``x`` (64-bit wraparound)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def trial_seed(root: int, n: int, k: int, sparsity: int, trial: int) -> int:
    """Fold ``(n, k, sparsity, trial)`` into the root seed with splitmix64."""
    h = splitmix64(root & _MASK)
    for v in (n, k, sparsity, trial):
        h = splitmix64(h ^ (v & _MASK))
    return h


def random_sparse_signal(n, sparsity, rng, low=1.0, high=10.0):
    """Signal with a uniformly random support and magnitudes in ``[low, high]``, random signs."""
    x = np.zeros(n)
    idx = rng.choice(n, size=sparsity, replace=False)
    x[idx] = rng.choice([-1.0, 1.0], size=sparsity) * rng.uniform(low, high, size=sparsity)
    return x


@dataclass(frozen=True)
class ExperimentSpec:
    n_list: tuple
    k_list: tuple
    sparsities: tuple
    trials: int = 100
    seed: int = 0
    mode: Mode = Mode.VALID
    adversarial: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(s < 0 for s in self.sparsities):
            raise ValueError("sparsity values must be non-negative")

    def cells(self):
        """Valid ``(n, k, sparsity)`` cells in output order; skips ``k > n`` and ``sparsity > n``."""
        for n in self.n_list:
            for k in self.k_list:
                if k > n:
                    continue
                for s in self.sparsities:
                    if s <= n:
                        yield n, k, s


@dataclass
class TrialRecord:
    n: int
    k: int
    mode: str
    sparsity: int
    trial: int
    seed: int
    recovered: bool
    l1_objective: float
    linf_error: float
    verdict: str
    status: str = "ok"
    wall_time: float = field(default=0.0, compare=False)


def run_trial(n, k, sparsity, trial, root_seed, mode=Mode.VALID, adversarial=False, cfg=None):
    seed = trial_seed(root_seed, n, k, sparsity, trial)
    rng = np.random.default_rng(seed)
    op = BoxOperator(k, n, mode)
    status = "ok"
    if adversarial and k >= 2 and n % k == 0 and sparsity == n // k:
        # same measurement and l1 norm as its shifted copy, so l1 cannot single it out
        x = tightness_pair(k, n)[0].astype(np.float64) * rng.uniform(1.0, 10.0)
        status = "adversarial"
    else:
        x = random_sparse_signal(n, sparsity, rng)
    start = time.perf_counter()
    try:
        res = basis_pursuit(op, op.apply(x), cfg)
    except BoxDeconError as err:
        return TrialRecord(n, k, Mode(mode).value, sparsity, trial, seed, False,
                           float("nan"), float("nan"), "Unknown", err.reason,
                           time.perf_counter() - start)
    err = float(np.max(np.abs(res.xhat - x)))
    return TrialRecord(
        n, k, Mode(mode).value, sparsity, trial, seed,
        recovered=err <= RECOVERY_TOL,
        l1_objective=res.l1_norm,
        linf_error=err,
        verdict=res.unique.value,
        status=status,
        wall_time=time.perf_counter() - start,
    )


def _run_task(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec, jobs=1, cfg=None):
    """Run every trial of ``spec``; records come back in deterministic cell/trial order."""
    tasks = [
        (n, k, s, t, spec.seed, spec.mode, spec.adversarial, cfg)
        for n, k, s in spec.cells()
        for t in range(spec.trials)
    ]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_task, tasks, chunksize=16))
    return [_run_task(t) for t in tasks]


def _fmt(v):
    return format(v, ".12g") if isinstance(v, float) else str(v)


def records_to_csv(records, timing=False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS + (["wall_time"] if timing else []))
    for r in records:
        row = [r.n, r.k, r.mode, r.sparsity, r.trial, r.seed, int(r.recovered),
               _fmt(r.l1_objective), _fmt(r.linf_error), r.verdict, r.status]
        if timing:
            row.append(f"{r.wall_time:.6f}")
        writer.writerow(row)
    return buf.getvalue()


def summarize(records):
    """Recovery rate per ``(n, k, mode, sparsity)`` cell with the two sparsity thresholds.

    ``bound_floor_n_over_k`` is ``n // k`` (exact recovery guaranteed below
    it); ``bound_n_over_2km1`` is ``n / (2 (k - 1))``, the weaker bound from
    the generic uncertainty-principle argument (infinite for ``k = 1``).
    """
    cells = {}
    for r in records:
        cells.setdefault((r.n, r.k, r.mode, r.sparsity), []).append(r)
    rows = []
    for (n, k, mode, s), group in cells.items():
        rows.append({
            "n": n,
            "k": k,
            "mode": mode,
            "sparsity": s,
            "trials": len(group),
            "recovered": sum(r.recovered for r in group),
            "rate": sum(r.recovered for r in group) / len(group),
            "ties": sum(r.verdict == "TieDetected" for r in group),
            "bound_floor_n_over_k": recovery_bound(n, k),
            "bound_n_over_2km1": n / (2 * (k - 1)) if k > 1 else float("inf"),
        })
    return rows


def summary_to_csv(rows) -> str:
    buf = io.StringIO()
    fields = ["n", "k", "mode", "sparsity", "trials", "recovered", "rate", "ties",
              "bound_floor_n_over_k", "bound_n_over_2km1"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()
