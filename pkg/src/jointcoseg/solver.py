"""Dense convex QP solver: ADMM operator splitting followed by active-set polishing.

Solves  minimize u^T M u + c^T u  subject to  A_ub u <= b_ub,  A_eq u = b_eq,
lb <= u <= ub. Internally the constraints are stacked as l <= A u <= h with
the bounds as identity rows, and the splitting follows the usual
x/z/y (primal, slack, dual) scheme with over-relaxation and adaptive step.
Once the iterates are close, the active set read off the duals is solved
exactly from the KKT system and accepted if it satisfies the residual
contract.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import linprog

logger = logging.getLogger(__name__)

_INF = np.inf


class Status(str, Enum):
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration-limit"
    INFEASIBLE = "infeasible"


class InfeasibleError(RuntimeError):
    """The constraint system admits no point."""


@dataclass(frozen=True)
class SolverConfig:
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    max_iters: int = 50000
    seed: int = 0
    psd_jitter: float = 1e-9
    rho: float = 0.1
    sigma: float = 1e-6
    relaxation: float = 1.6
    check_every: int = 10
    polish: bool = True

    def __post_init__(self):
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("solver tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class Solution:
    u: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: Status
    dual: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


class _Stacked:
    """l <= A x <= h with inequality rows, equality rows, then bound rows."""

    def __init__(self, qp):
        N = qp.M.shape[0]
        A_ub = np.asarray(qp.A_ub, dtype=float).reshape(-1, N)
        A_eq = np.asarray(qp.A_eq, dtype=float).reshape(-1, N)
        self.A = np.vstack([A_ub, A_eq, np.eye(N)])
        self.l = np.concatenate([np.full(A_ub.shape[0], -_INF), qp.b_eq, qp.lb]).astype(float)
        self.h = np.concatenate([qp.b_ub, qp.b_eq, qp.ub]).astype(float)
        self.equality = self.h - self.l <= 1e-12
        self.P = 2.0 * np.asarray(qp.M, dtype=float)
        self.P = 0.5 * (self.P + self.P.T)
        self.q = np.asarray(qp.c, dtype=float)
        self.n = N

    def primal_residual(self, x) -> float:
        Ax = self.A @ x
        viol = np.maximum(Ax - self.h, 0.0) + np.maximum(self.l - Ax, 0.0)
        return float(viol.max(initial=0.0))

    def dual_residual(self, x, y) -> float:
        return float(np.abs(self.P @ x + self.q + self.A.T @ y).max(initial=0.0))

    def dual_sign_violation(self, x, y, tol) -> float:
        """Largest breach of dual feasibility / complementary slackness."""
        Ax = self.A @ x
        worst = 0.0
        # y > 0 only where the upper side binds, y < 0 only where the lower side binds
        slack_up = self.h - Ax
        slack_lo = Ax - self.l
        pos = y > 0
        neg = y < 0
        if np.any(pos):
            worst = max(worst, float(np.max(np.where(np.isfinite(slack_up[pos]), y[pos] * slack_up[pos], _INF))))
        if np.any(neg):
            worst = max(worst, float(np.max(np.where(np.isfinite(slack_lo[neg]), -y[neg] * slack_lo[neg], _INF))))
        return worst


def _factor(K: np.ndarray, jitter: float):
    bump = 0.0
    for _ in range(12):
        try:
            return cho_factor(K + bump * np.eye(K.shape[0]))
        except LinAlgError:
            bump = jitter if bump == 0.0 else bump * 10.0
            logger.debug("factorization failed, adding jitter %g", bump)
    raise LinAlgError("KKT matrix could not be factorized even with jitter")


def check_feasible(qp) -> bool:
    """LP feasibility test of the constraint system."""
    N = qp.M.shape[0]
    res = linprog(
        np.zeros(N),
        A_ub=qp.A_ub if np.size(qp.A_ub) else None,
        b_ub=qp.b_ub if np.size(qp.A_ub) else None,
        A_eq=qp.A_eq if np.size(qp.A_eq) else None,
        b_eq=qp.b_eq if np.size(qp.A_eq) else None,
        bounds=list(zip(qp.lb, qp.ub)),
        method="highs",
    )
    return res.status != 2


def _polish(st: _Stacked, x, y, cfg: SolverConfig):
    """Solve the equality-constrained KKT system on the active set read off the duals y.

    The active set is refined a few times: violated rows are added, rows with
    duals of the wrong sign are dropped.
    """
    scale = max(1.0, float(np.abs(y).max(initial=0.0)))
    thresh = 1e-7 * scale
    upper = (y > thresh) & np.isfinite(st.h)
    lower = (y < -thresh) & np.isfinite(st.l)
    upper |= st.equality
    lower &= ~st.equality
    best = None
    for _ in range(25):
        active = np.flatnonzero(upper | lower)
        target = np.where(upper, st.h, st.l)[active]
        Aa = st.A[active]
        k = len(active)
        K = np.zeros((st.n + k, st.n + k))
        K[:st.n, :st.n] = st.P
        K[:st.n, st.n:] = Aa.T
        K[st.n:, :st.n] = Aa
        rhs = np.concatenate([-st.q, target])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        xp = sol[:st.n]
        yp = np.zeros(len(st.l))
        yp[active] = sol[st.n:]
        r_p = st.primal_residual(xp)
        r_d = st.dual_residual(xp, yp)
        bad_sign = (upper & ~st.equality & (yp < -cfg.tol_dual)) | (lower & (yp > cfg.tol_dual))
        if best is None or max(r_p, r_d) < max(best[2], best[3]):
            best = (xp, yp, r_p, r_d)
        if r_p <= cfg.tol_primal and r_d <= cfg.tol_dual and not bad_sign.any():
            return xp, yp, r_p, r_d, True
        Axp = st.A @ xp
        over = (Axp - st.h > cfg.tol_primal) & ~(upper | lower)
        under = (st.l - Axp > cfg.tol_primal) & ~(upper | lower)
        if not (over.any() or under.any() or bad_sign.any()):
            break
        upper = (upper & ~bad_sign) | over
        lower = (lower & ~bad_sign) | under
    return (*best, False)


def solve(qp, cfg: SolverConfig | None = None) -> Solution:
    """Minimize the relaxed QP; see the module docstring for the method."""
    cfg = cfg or SolverConfig()
    st = _Stacked(qp)
    N = st.n
    if not check_feasible(qp):
        u = np.clip(np.zeros(N), qp.lb, qp.ub)
        return Solution(u, float("nan"), float("inf"), float("inf"), 0, Status.INFEASIBLE)

    n_rows = st.A.shape[0]
    rho_base = cfg.rho
    rho_vec = np.where(st.equality, 1e3 * rho_base, rho_base)
    x = np.zeros(N)
    z = np.clip(st.A @ x, st.l, st.h)
    y = np.zeros(n_rows)

    def factorize(rv):
        K = st.P + cfg.sigma * np.eye(N) + st.A.T @ (rv[:, None] * st.A)
        return _factor(K, cfg.psd_jitter)

    fac = factorize(rho_vec)
    a = cfg.relaxation
    status = Status.ITERATION_LIMIT
    it = 0
    last_polish = -1
    tol_p, tol_d = cfg.tol_primal, cfg.tol_dual
    polished = None
    for it in range(1, cfg.max_iters + 1):
        rhs = cfg.sigma * x - st.q + st.A.T @ (rho_vec * z - y)
        x_t = cho_solve(fac, rhs)
        z_t = st.A @ x_t
        x = a * x_t + (1 - a) * x
        z_mix = a * z_t + (1 - a) * z
        z_new = np.clip(z_mix + y / rho_vec, st.l, st.h)
        y = y + rho_vec * (z_mix - z_new)
        z = z_new

        if it % cfg.check_every:
            continue
        Ax = st.A @ x
        r_p = float(np.abs(Ax - z).max())
        Px = st.P @ x
        ATy = st.A.T @ y
        r_d = float(np.abs(Px + st.q + ATy).max())

        close = r_p < 1e-3 and r_d < 1e-3
        if cfg.polish and close and (last_polish < 0 or it - last_polish >= 20 * cfg.check_every):
            last_polish = it
            xp, yp, pp, pd, ok = _polish(st, x, y, cfg)
            if ok:
                polished = (xp, yp)
                status = Status.CONVERGED
                break
        if r_p <= tol_p and r_d <= tol_d:
            if cfg.polish:
                xp, yp, pp, pd, ok = _polish(st, x, y, cfg)
                if ok:
                    polished = (xp, yp)
                    status = Status.CONVERGED
                    break
            u = np.clip(x, qp.lb, qp.ub)
            if st.primal_residual(u) <= cfg.tol_primal and st.dual_residual(u, y) <= cfg.tol_dual:
                status = Status.CONVERGED
                break
            # clipping cost some accuracy: keep iterating towards a tighter target
            tol_p, tol_d = max(tol_p / 10, 1e-14), max(tol_d / 10, 1e-14)

        # step-size adaptation
        if it % (5 * cfg.check_every) == 0:
            prim_scale = max(np.abs(Ax).max(), np.abs(z).max(), 1e-12)
            dual_scale = max(np.abs(Px).max(), np.abs(ATy).max(), np.abs(st.q).max(initial=0.0), 1e-12)
            # floors keep a residual that is already ~0 from collapsing rho
            rp_n = max(r_p / prim_scale, 1e-2 * cfg.tol_primal)
            rd_n = max(r_d / dual_scale, 1e-2 * cfg.tol_dual)
            ratio = float(np.clip(np.sqrt(rp_n / rd_n), 0.1, 10.0))
            new_rho = float(np.clip(rho_base * ratio, 1e-5, 1e5))
            if new_rho > 5 * rho_base or new_rho < 0.2 * rho_base:
                logger.debug("iteration %d: rho %.3g -> %.3g", it, rho_base, new_rho)
                rho_base = new_rho
                rho_vec = np.where(st.equality, 1e3 * rho_base, rho_base)
                fac = factorize(rho_vec)

    if polished is not None:
        x, y = polished
    u = np.clip(x, qp.lb, qp.ub)
    r_p = st.primal_residual(u)
    r_d = st.dual_residual(u, y)
    if status is Status.CONVERGED and (r_p > cfg.tol_primal or r_d > cfg.tol_dual):
        status = Status.ITERATION_LIMIT
    objective = float(u @ qp.M @ u + qp.c @ u)
    return Solution(u, objective, r_p, r_d, it, status, y)


def relaxation_gap(relaxed: float, exact: float) -> float:
    """exact - relaxed; negative beyond tolerance means the lower bound broke."""
    return float(exact - relaxed)
