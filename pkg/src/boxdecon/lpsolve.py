"""Dense linear programming in standard form.

Solves::

    minimize    c @ u
    subject to  E @ u == f,  u >= 0

with a homogeneous self-dual primal-dual interior-point method using
Mehrotra's predictor-corrector directions.  A dense two-phase revised
simplex (Bland's rule) serves as fallback for small problems and can be
selected directly with ``method="simplex"``.

The interior-point path converges to a strictly complementary solution, so
on an LP with a whole face of optima the returned point is interior to that
face rather than a vertex.  Callers that care about non-uniqueness rely on
this (see :mod:`boxdecon.recovery`).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from itertools import count

import numpy as np
import scipy.linalg as sla

from .exceptions import DimensionError

__all__ = ["LinearProgram", "SolverConfig", "SolveReport", "Status", "solve_lp", "lp_residuals"]


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LinearProgram:
    """``min cost @ u`` s.t. ``eq_matrix @ u == eq_rhs``, ``u >= 0``."""

    cost: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=np.float64)
        E = np.asarray(self.eq_matrix, dtype=np.float64)
        f = np.asarray(self.eq_rhs, dtype=np.float64)
        if c.ndim != 1 or f.ndim != 1:
            raise DimensionError("cost and eq_rhs must be 1-dimensional")
        if E.ndim != 2:
            E = E.reshape(f.shape[0], c.shape[0]) if E.size == 0 else E
            if E.ndim != 2:
                raise DimensionError("eq_matrix must be 2-dimensional")
        if E.shape != (f.shape[0], c.shape[0]):
            raise DimensionError(
                f"eq_matrix shape {E.shape} inconsistent with cost ({c.shape[0]}) "
                f"and eq_rhs ({f.shape[0]})"
            )
        if E.shape[0] > E.shape[1]:
            raise DimensionError("more equality constraints than variables")
        for name, arr in (("cost", c), ("eq_matrix", E), ("eq_rhs", f)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "eq_matrix", E)
        object.__setattr__(self, "eq_rhs", f)

    @property
    def shape(self):
        return self.eq_matrix.shape


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``method`` is ``"ipm"``, ``"simplex"`` or ``"auto"`` (interior point,
    falling back to simplex when it fails and the LP has at most
    ``simplex_max_vars`` variables).
    """

    method: str = "auto"
    tol_feas: float = 1e-9
    tol_opt: float = 1e-9
    max_iter: int = 100
    simplex_max_iter: int = 10_000
    simplex_max_vars: int = 400
    polish: bool = True


@dataclass
class SolveReport:
    """Outcome of :func:`solve_lp`.

    ``primal_residual`` is ``max(||E u - f||_inf, max(-u, 0)) / (1 + ||f||_inf)``.
    ``dual_residual`` is the larger of the relative dual infeasibility of
    ``c - E.T @ dual`` and the relative duality gap; it certifies optimality.
    """

    status: Status
    solution: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    dual: np.ndarray = field(repr=False, default=None)
    method: str = ""
    degenerate: bool = False

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def lp_residuals(lp: LinearProgram, u, dual):
    """Relative primal and dual residuals of a candidate pair ``(u, dual)``."""
    c, E, f = lp.cost, lp.eq_matrix, lp.eq_rhs
    u = np.asarray(u, dtype=np.float64)
    dual = np.asarray(dual, dtype=np.float64)
    infeas = np.max(np.abs(E @ u - f), initial=0.0)
    neg = max(0.0, -float(np.min(u, initial=0.0)))
    primal = max(infeas, neg) / (1.0 + np.max(np.abs(f), initial=0.0))
    reduced = c - E.T @ dual
    dual_infeas = max(0.0, -float(np.min(reduced, initial=0.0))) / (
        1.0 + np.max(np.abs(c), initial=0.0)
    )
    pobj = float(c @ u)
    gap = abs(pobj - float(f @ dual)) / (1.0 + abs(pobj))
    return float(primal), float(max(dual_infeas, gap))


def _independent_rows(E, tol=1e-10):
    """Indices of a maximal linearly independent subset of the rows of E."""
    if E.shape[0] == 0:
        return np.arange(0)
    _, R, piv = sla.qr(E.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return np.arange(0)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


def _report(lp, u, dual, status, iterations, method, rank=None):
    primal, dual_res = lp_residuals(lp, u, dual)
    degenerate = False
    if status is Status.OPTIMAL and rank is not None:
        reduced = lp.cost - lp.eq_matrix.T @ dual
        scale = 1.0 + np.max(np.abs(u), initial=0.0)
        thr = 1e-6 * scale
        positive = int(np.sum(u > thr))
        both_zero = int(np.sum((u <= thr) & (reduced <= 1e-6 * (1 + np.max(np.abs(lp.cost))))))
        degenerate = positive > rank or both_zero > 0
    return SolveReport(
        status=status,
        solution=u,
        objective=float(lp.cost @ u),
        iterations=iterations,
        primal_residual=primal,
        dual_residual=dual_res,
        dual=dual,
        method=method,
        degenerate=degenerate,
    )


def _meets(report, cfg):
    return report.primal_residual <= cfg.tol_feas and report.dual_residual <= cfg.tol_opt


# ---------------------------------------------------------------------------
# interior point


class _NormalEquations:
    """Factorization of ``E diag(d) E.T``; LU with partial pivoting, lstsq if singular."""

    def __init__(self, E, d):
        M = (E * d) @ E.T
        self.M = M
        self.lu = None
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                self.lu = sla.lu_factor(M, check_finite=False)
                if not np.all(np.isfinite(self.lu[0])) or np.any(np.diag(self.lu[0]) == 0):
                    self.lu = None
            except (sla.LinAlgError, sla.LinAlgWarning, ValueError):
                self.lu = None

    def solve(self, r):
        if self.lu is not None:
            return sla.lu_solve(self.lu, r, check_finite=False)
        return sla.lstsq(self.M, r, check_finite=False)[0]


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(np.min(-v[neg] / dv[neg]))


def _ipm(lp: LinearProgram, rows, cfg: SolverConfig):
    """Homogeneous self-dual interior point on the independent rows of the LP.

    Returns ``(status, u, dual, iterations)``.
    """
    c = lp.cost
    E = lp.eq_matrix[rows]
    f = lp.eq_rhs[rows]
    m, p = E.shape
    x = np.ones(p)
    z = np.ones(p)
    y = np.zeros(m)
    tau = kappa = 1.0
    mu0 = (x @ z + tau * kappa) / (p + 1)
    full_dual = np.zeros(lp.eq_matrix.shape[0])

    def expand(yv):
        out = full_dual.copy()
        out[rows] = yv
        return out

    status = Status.ITERATION_LIMIT
    it = 0
    for it in count(1):
        if it > cfg.max_iter:
            it = cfg.max_iter
            break
        r_p = f * tau - E @ x
        r_d = c * tau - E.T @ y - z
        r_g = c @ x - f @ y + kappa
        mu = (x @ z + tau * kappa) / (p + 1)

        d = x / z
        try:
            neq = _NormalEquations(E, d)
        except (ValueError, FloatingPointError):
            break

        def sym_solve(r1, r2):
            v = neq.solve(r2 + E @ (d * r1))
            return d * (E.T @ v - r1), v

        p_c, q_c = sym_solve(c, f)
        denom_base = -c @ p_c + f @ q_c

        d_x = d_z = None
        d_tau = d_kappa = 0.0
        gamma = 0.0
        for corrector in (False, True):
            eta = 1.0 - gamma
            rhat_p, rhat_d, rhat_g = eta * r_p, eta * r_d, eta * r_g
            rhat_xz = gamma * mu - x * z
            rhat_tk = gamma * mu - tau * kappa
            if corrector:
                rhat_xz = rhat_xz - d_x * d_z
                rhat_tk = rhat_tk - d_tau * d_kappa
            u_s, v_s = sym_solve(rhat_d - rhat_xz / x, rhat_p)
            d_tau = (rhat_g + rhat_tk / tau - (-c @ u_s + f @ v_s)) / (kappa / tau + denom_base)
            d_x = u_s + p_c * d_tau
            d_y = v_s + q_c * d_tau
            d_z = (rhat_xz - z * d_x) / x
            d_kappa = (rhat_tk - kappa * d_tau) / tau
            alpha = min(
                1.0,
                _max_step(x, d_x),
                _max_step(z, d_z),
                _max_step(np.array([tau]), np.array([d_tau])),
                _max_step(np.array([kappa]), np.array([d_kappa])),
            )
            if not corrector:
                gamma = (1.0 - alpha) ** 2 * min(0.1, 1.0 - alpha)

        alpha = 0.99995 * min(
            1.0,
            _max_step(x, d_x),
            _max_step(z, d_z),
            _max_step(np.array([tau]), np.array([d_tau])),
            _max_step(np.array([kappa]), np.array([d_kappa])),
        )
        x = x + alpha * d_x
        y = y + alpha * d_y
        z = z + alpha * d_z
        tau = tau + alpha * d_tau
        kappa = kappa + alpha * d_kappa
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.isfinite(tau)):
            break

        u, dual = x / tau, expand(y / tau)
        primal_res, dual_res = lp_residuals(lp, u, dual)
        if primal_res <= cfg.tol_feas * 0.5 and dual_res <= cfg.tol_opt * 0.5:
            status = Status.OPTIMAL
            break
        mu_rel = (x @ z + tau * kappa) / (p + 1) / mu0
        if mu_rel < 1e-12 and tau < 1e-10 * max(1.0, kappa):
            # certificate of infeasibility: tau -> 0 with kappa bounded away
            if f @ y > 0:
                status = Status.INFEASIBLE
            elif c @ x < 0:
                status = Status.UNBOUNDED
            break
        if alpha < 1e-12:
            break

    if status in (Status.INFEASIBLE, Status.UNBOUNDED):
        return status, np.full(p, np.nan), np.full(lp.eq_matrix.shape[0], np.nan), it
    return status, x / tau, expand(y / tau), it


def _polish(lp, rows, u, dual):
    """Snap an interior optimum onto the vertex suggested by its large entries."""
    E = lp.eq_matrix[rows]
    reduced = lp.cost - lp.eq_matrix.T @ dual
    active = np.flatnonzero(u > reduced)
    if active.size == 0 or active.size > E.shape[0]:
        return None
    sub = E[:, active]
    if np.linalg.matrix_rank(sub) < active.size:
        return None
    vals = np.linalg.lstsq(sub, lp.eq_rhs[rows], rcond=None)[0]
    if np.any(vals < 0):
        return None
    out = np.zeros_like(u)
    out[active] = vals
    return out


# ---------------------------------------------------------------------------
# simplex


def _simplex_phase(E, f, c, basis, max_iter, tol=1e-11):
    """Revised simplex iterations from a feasible basis using Bland's rule.

    Returns ``(status, basis, iterations)``.
    """
    m, p = E.shape
    for it in range(max_iter):
        B = E[:, basis]
        try:
            lu = sla.lu_factor(B, check_finite=False)
        except (sla.LinAlgError, ValueError):
            return Status.ITERATION_LIMIT, basis, it
        xb = sla.lu_solve(lu, f, check_finite=False)
        y = sla.lu_solve(lu, c[basis], trans=1, check_finite=False)
        reduced = c - E.T @ y
        reduced[basis] = 0.0
        scale = 1.0 + np.max(np.abs(c))
        entering = np.flatnonzero(reduced < -tol * scale)
        if entering.size == 0:
            return Status.OPTIMAL, basis, it
        q = int(entering[0])
        direction = sla.lu_solve(lu, E[:, q], check_finite=False)
        pos = direction > tol
        if not np.any(pos):
            return Status.UNBOUNDED, basis, it
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xb[pos], 0.0) / direction[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * (1.0 + best))
        leave = ties[np.argmin(np.asarray(basis)[ties])]
        basis = list(basis)
        basis[leave] = q
    return Status.ITERATION_LIMIT, basis, max_iter


def _simplex(lp: LinearProgram, rows, cfg: SolverConfig):
    c = lp.cost
    E = lp.eq_matrix[rows].copy()
    f = lp.eq_rhs[rows].copy()
    m, p = E.shape
    flip = f < 0
    E[flip] *= -1
    f[flip] *= -1
    total = 0

    # phase I: artificials in columns p..p+m-1
    E1 = np.hstack([E, np.eye(m)])
    c1 = np.concatenate([np.zeros(p), np.ones(m)])
    status, basis, its = _simplex_phase(E1, f, c1, list(range(p, p + m)), cfg.simplex_max_iter)
    total += its
    if status is not Status.OPTIMAL:
        return Status.ITERATION_LIMIT, None, None, total
    xb = np.linalg.solve(E1[:, basis], f)
    if xb @ c1[basis] > max(cfg.tol_feas, 1e-9) * (1.0 + np.max(np.abs(f), initial=0.0)):
        return Status.INFEASIBLE, None, None, total

    # drive artificials out of the basis; rows stay independent so a pivot exists
    for slot, var in enumerate(list(basis)):
        if var < p:
            continue
        Binv_row = np.linalg.solve(E1[:, basis].T, np.eye(m)[slot])
        candidates = [
            j for j in range(p) if j not in basis and abs(Binv_row @ E[:, j]) > 1e-9
        ]
        if not candidates:
            return Status.ITERATION_LIMIT, None, None, total
        basis[slot] = candidates[0]

    status, basis, its = _simplex_phase(E, f, c, basis, cfg.simplex_max_iter)
    total += its
    if status is not Status.OPTIMAL:
        return status, None, None, total
    u = np.zeros(p)
    u[basis] = np.linalg.solve(E[:, basis], f)
    u = np.maximum(u, 0.0)
    y = np.linalg.solve(E[:, basis].T, c[basis])
    y[flip] *= -1
    dual = np.zeros(lp.eq_matrix.shape[0])
    dual[rows] = y
    return Status.OPTIMAL, u, dual, total


# ---------------------------------------------------------------------------


def solve_lp(lp: LinearProgram, cfg: SolverConfig | None = None) -> SolveReport:
    """Solve a standard-form LP.

    Infeasible and unbounded problems are reported through ``status``; they
    never raise.  The result is deterministic for fixed inputs.
    """
    cfg = cfg or SolverConfig()
    if cfg.method not in ("auto", "ipm", "simplex"):
        raise ValueError(f"unknown method {cfg.method!r}")
    m, p = lp.shape
    nan_u, nan_y = np.full(p, np.nan), np.full(m, np.nan)

    # range check ignoring the sign constraints catches inconsistent systems early
    if m:
        ls = np.linalg.lstsq(lp.eq_matrix, lp.eq_rhs, rcond=None)[0]
        miss = np.max(np.abs(lp.eq_matrix @ ls - lp.eq_rhs))
        if miss > 1e-8 * (1.0 + np.max(np.abs(lp.eq_rhs))):
            return SolveReport(Status.INFEASIBLE, nan_u, np.nan, 0, np.inf, np.inf, nan_y, "presolve")
    rows = _independent_rows(lp.eq_matrix)
    rank = rows.size
    if rank == 0:
        if np.all(lp.cost >= 0):
            return _report(lp, np.zeros(p), np.zeros(m), Status.OPTIMAL, 0, "presolve", rank)
        return SolveReport(Status.UNBOUNDED, nan_u, -np.inf, 0, 0.0, np.inf, nan_y, "presolve")

    iterations = 0
    if cfg.method in ("auto", "ipm"):
        status, u, dual, its = _ipm(lp, rows, cfg)
        iterations += its
        if status is Status.OPTIMAL or status is Status.ITERATION_LIMIT and np.all(np.isfinite(u)):
            report = _report(lp, u, dual, Status.OPTIMAL, iterations, "ipm", rank)
            if cfg.polish:
                snapped = _polish(lp, rows, u, dual)
                if snapped is not None:
                    cand = _report(lp, snapped, dual, Status.OPTIMAL, iterations, "ipm", rank)
                    if _meets(cand, cfg) and cand.primal_residual <= report.primal_residual + 1e-15:
                        report = cand
            if _meets(report, cfg):
                return report
            report.status = Status.ITERATION_LIMIT
        else:
            report = SolveReport(status, u, np.nan, iterations, np.inf, np.inf, dual, "ipm")
        if cfg.method == "ipm" or p > cfg.simplex_max_vars:
            return report
        if report.status in (Status.INFEASIBLE, Status.UNBOUNDED):
            return report

    status, u, dual, its = _simplex(lp, rows, cfg)
    iterations += its
    if status is Status.OPTIMAL:
        report = _report(lp, u, dual, Status.OPTIMAL, iterations, "simplex", rank)
        if not _meets(report, cfg):
            report.status = Status.ITERATION_LIMIT
        return report
    return SolveReport(status, nan_u, np.nan, iterations, np.inf, np.inf, nan_y, "simplex")
