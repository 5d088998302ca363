"""Primal log-barrier interior-point solver for the experiment models.

Plain path following: damped Newton centering on t*objective + barrier with
t multiplied by a fixed factor.  The knapsack model exploits its structure
(per-variable 3x3 Hessian blocks coupled by one linear constraint), so a
Newton step costs O(n) via a batched block solve plus a Sherman-Morrison
update; the mean-variance model assembles a dense Hessian, fine at the
scale this package targets.

Two details matter for accuracy near the end of the path, where active
slacks shrink to roughly 1/t:

* Slacks like y - x*x are differences of O(1) products, so evaluating them
  naively caps their relative precision at eps*x*x/s.  All product slacks
  are computed with Dekker-compensated multiplication and the coupling
  constraints with extended-precision dots, which makes the slack of the
  *stored* iterate essentially exact.
* Even then, float64 runs out of room once t*eps*scale approaches the
  stationarity target, so the driver tracks the best-KKT iterate along the
  path and stops at the precision wall instead of thrashing against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = ["BarrierResult", "KnapsackModel", "MeanVarModel", "solve_barrier"]

_CENTER_TOL = 1e-11          # Newton decrement threshold lambda^2 / 2
_MAX_CENTER_STEPS = 100
_ARMIJO = 0.25
_BACKTRACK = 0.5
_SPLITTER = 134217729.0      # 2**27 + 1, Veltkamp split constant


def _two_prod(a, b):
    """fl(a*b) and its exact rounding error (Dekker's algorithm)."""
    prod = a * b
    sa = _SPLITTER * a
    a_hi = sa - (sa - a)
    a_lo = a - a_hi
    sb = _SPLITTER * b
    b_hi = sb - (sb - b)
    b_lo = b - b_hi
    err = ((a_hi * b_hi - prod) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return prod, err


def _diff_prod(c, a, b):
    """c - a*b with the product's rounding error compensated."""
    prod, err = _two_prod(a, b)
    return (c - prod) - err


def _diff_prods(a, b, c, d):
    """a*b - c*d, compensated; relies on the leading difference being benign."""
    p1, e1 = _two_prod(a, b)
    p2, e2 = _two_prod(c, d)
    return (p1 - p2) + (e1 - e2)


def _dot_hi(a, x) -> float:
    """Extended-precision dot product."""
    return float(np.dot(a.astype(np.longdouble), x.astype(np.longdouble)))


@dataclass
class BarrierResult:
    w: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    gap_bound: float = 0.0


class KnapsackModel:
    """min c'y + f'z over the per-variable relaxation bodies and a'x >= b.

    Variables are stacked [x; y; z].  Index i uses y_i >= x_i^2 when not
    tightened and the rotated-cone bound y_i*z_i >= x_i^2 otherwise, plus
    u_i*z_i >= x_i >= l_i*z_i, u_i^2*z_i >= y_i, 0 <= z_i <= 1.
    """

    def __init__(self, a, f, c, l, u, b, tight_mask):
        self.a = np.asarray(a, float)
        self.f = np.asarray(f, float)
        self.c = np.asarray(c, float)
        self.l = np.asarray(l, float)
        self.u = np.asarray(u, float)
        self.b = float(b)
        self.tight = np.asarray(tight_mask, bool)
        self.n = self.a.size
        self.nvar = 3 * self.n
        self.num_constraints = 6 * self.n + 1
        g = np.zeros(self.nvar)
        g[self.n:2 * self.n] = self.c
        g[2 * self.n:] = self.f
        self.obj_grad = g
        self.u2 = self.u * self.u

    def split(self, w):
        n = self.n
        return w[:n], w[n:2 * n], w[2 * n:]

    def objective(self, w) -> float:
        x, y, z = self.split(w)
        return float(self.c @ y + self.f @ z)

    def _slack_parts(self, w):
        x, y, z = self.split(w)
        s1 = -_diff_prod(x, self.u, z)         # u*z - x
        s2 = _diff_prod(x, self.l, z)          # x - l*z
        s5 = -_diff_prod(y, self.u2, z)        # u^2*z - y
        s6 = np.where(self.tight,
                      _diff_prods(y, z, x, x),
                      _diff_prod(y, x, x))
        sg = _dot_hi(self.a, x) - self.b
        return x, y, z, s1, s2, s5, s6, sg

    def slacks(self, w) -> np.ndarray:
        x, y, z, s1, s2, s5, s6, sg = self._slack_parts(w)
        return np.concatenate([s1, s2, z, 1.0 - z, s5, s6, [sg]])

    def phi_grad(self, w) -> np.ndarray:
        x, y, z, s1, s2, s5, s6, sg = self._slack_parts(w)
        wy = np.where(self.tight, z, 1.0)
        wz = np.where(self.tight, y, 0.0)
        gx = 1.0 / s1 - 1.0 / s2 + 2.0 * x / s6 - self.a / sg
        gy = 1.0 / s5 - wy / s6
        gz = (-self.u / s1 + self.l / s2 - 1.0 / z + 1.0 / (1.0 - z)
              - self.u2 / s5 - wz / s6)
        return np.concatenate([gx, gy, gz])

    def newton_dir(self, w, rhs) -> np.ndarray:
        """Solve H(w) d = rhs; Jacobi-scaled batched 3x3 solves, one round
        of iterative refinement against the structured H."""
        n = self.n
        x, y, z, s1, s2, s5, s6, sg = self._slack_parts(w)
        wy = np.where(self.tight, z, 1.0)
        wz = np.where(self.tight, y, 0.0)

        H = np.empty((n, 3, 3))
        H[:, 0, 0] = 1.0 / s1**2 + 1.0 / s2**2 + 4.0 * x * x / s6**2 + 2.0 / s6
        H[:, 0, 1] = -2.0 * x * wy / s6**2
        H[:, 0, 2] = -self.u / s1**2 - self.l / s2**2 - 2.0 * x * wz / s6**2
        H[:, 1, 1] = wy**2 / s6**2 + 1.0 / s5**2
        H[:, 1, 2] = (-self.u2 / s5**2 + wy * wz / s6**2
                      - np.where(self.tight, 1.0 / s6, 0.0))
        H[:, 2, 2] = (self.u2 / s1**2 + self.l**2 / s2**2 + 1.0 / z**2
                      + 1.0 / (1.0 - z)**2 + self.u2**2 / s5**2 + wz**2 / s6**2)
        H[:, 1, 0] = H[:, 0, 1]
        H[:, 2, 0] = H[:, 0, 2]
        H[:, 2, 1] = H[:, 1, 2]

        scale = 1.0 / np.sqrt(H[:, [0, 1, 2], [0, 1, 2]])
        Hs = H * scale[:, None, :] * scale[:, :, None]
        rho = 1.0 / sg**2

        def full_solve(vec: np.ndarray) -> np.ndarray:
            R = np.stack([vec[:n], vec[n:2 * n], vec[2 * n:]], axis=1)
            V = np.zeros((n, 3))
            V[:, 0] = self.a
            cols = np.stack([R, V], axis=2) * scale[:, :, None]
            try:
                sols = np.linalg.solve(Hs, cols)
            except np.linalg.LinAlgError:
                sols = np.linalg.solve(Hs + 1e-13 * np.eye(3), cols)
            sols = sols * scale[:, :, None]
            d_r, d_v = sols[..., 0], sols[..., 1]
            denom = 1.0 + rho * (self.a @ d_v[:, 0])
            coef = rho * (self.a @ d_r[:, 0]) / denom
            d = d_r - coef * d_v
            return np.concatenate([d[:, 0], d[:, 1], d[:, 2]])

        def apply_h(vec: np.ndarray) -> np.ndarray:
            V3 = np.stack([vec[:n], vec[n:2 * n], vec[2 * n:]], axis=1)
            out = np.einsum("nij,nj->ni", H, V3)
            out[:, 0] += rho * self.a * (self.a @ V3[:, 0])
            return np.concatenate([out[:, 0], out[:, 1], out[:, 2]])

        d = full_solve(rhs)
        d = d + full_solve(rhs - apply_h(d))
        return d


class MeanVarModel:
    """min v + c'y with the knapsack per-variable bodies, a cardinality cap
    e'z <= kappa, and the variance epigraph v >= ||M'x||^2.

    Variables are stacked [x; y; z; v]; the factor M enters only through
    Q = M M', precomputed once.
    """

    def __init__(self, a, c, l, u, b, kappa, M, tight_mask):
        self.a = np.asarray(a, float)
        self.c = np.asarray(c, float)
        self.l = np.asarray(l, float)
        self.u = np.asarray(u, float)
        self.b = float(b)
        self.kappa = float(kappa)
        M = np.asarray(M, float)
        self.Q = M @ M.T
        self.Q_hi = self.Q.astype(np.longdouble)
        self.tight = np.asarray(tight_mask, bool)
        self.n = self.a.size
        self.nvar = 3 * self.n + 1
        self.num_constraints = 6 * self.n + 3
        g = np.zeros(self.nvar)
        g[self.n:2 * self.n] = self.c
        g[-1] = 1.0
        self.obj_grad = g
        self.u2 = self.u * self.u

    def split(self, w):
        n = self.n
        return w[:n], w[n:2 * n], w[2 * n:3 * n], w[-1]

    def objective(self, w) -> float:
        x, y, z, v = self.split(w)
        return float(v + self.c @ y)

    def _slack_parts(self, w):
        x, y, z, v = self.split(w)
        s1 = -_diff_prod(x, self.u, z)
        s2 = _diff_prod(x, self.l, z)
        s5 = -_diff_prod(y, self.u2, z)
        s6 = np.where(self.tight,
                      _diff_prods(y, z, x, x),
                      _diff_prod(y, x, x))
        sg0 = _dot_hi(self.a, x) - self.b
        sg1 = self.kappa - float(np.sum(x * 0.0 + z, dtype=np.longdouble))
        x_hi = x.astype(np.longdouble)
        sg2 = float(np.longdouble(v) - x_hi @ (self.Q_hi @ x_hi))
        return x, y, z, v, s1, s2, s5, s6, sg0, sg1, sg2

    def slacks(self, w) -> np.ndarray:
        x, y, z, v, s1, s2, s5, s6, sg0, sg1, sg2 = self._slack_parts(w)
        return np.concatenate([s1, s2, z, 1.0 - z, s5, s6, [sg0, sg1, sg2]])

    def phi_grad(self, w) -> np.ndarray:
        x, y, z, v, s1, s2, s5, s6, sg0, sg1, sg2 = self._slack_parts(w)
        wy = np.where(self.tight, z, 1.0)
        wz = np.where(self.tight, y, 0.0)
        qx = self.Q @ x
        gx = (1.0 / s1 - 1.0 / s2 + 2.0 * x / s6 - self.a / sg0
              + 2.0 * qx / sg2)
        gy = 1.0 / s5 - wy / s6
        gz = (-self.u / s1 + self.l / s2 - 1.0 / z + 1.0 / (1.0 - z)
              - self.u2 / s5 - wz / s6 + 1.0 / sg1)
        gv = -1.0 / sg2
        return np.concatenate([gx, gy, gz, [gv]])

    def newton_dir(self, w, rhs) -> np.ndarray:
        n = self.n
        x, y, z, v, s1, s2, s5, s6, sg0, sg1, sg2 = self._slack_parts(w)
        wy = np.where(self.tight, z, 1.0)
        wz = np.where(self.tight, y, 0.0)
        qx = self.Q @ x

        H = np.zeros((self.nvar, self.nvar))
        xs = np.arange(n)
        idx = (xs, xs + n, xs + 2 * n)
        blk = np.empty((n, 3, 3))
        blk[:, 0, 0] = 1.0 / s1**2 + 1.0 / s2**2 + 4.0 * x * x / s6**2 + 2.0 / s6
        blk[:, 0, 1] = -2.0 * x * wy / s6**2
        blk[:, 0, 2] = -self.u / s1**2 - self.l / s2**2 - 2.0 * x * wz / s6**2
        blk[:, 1, 1] = wy**2 / s6**2 + 1.0 / s5**2
        blk[:, 1, 2] = (-self.u2 / s5**2 + wy * wz / s6**2
                        - np.where(self.tight, 1.0 / s6, 0.0))
        blk[:, 2, 2] = (self.u2 / s1**2 + self.l**2 / s2**2 + 1.0 / z**2
                        + 1.0 / (1.0 - z)**2 + self.u2**2 / s5**2 + wz**2 / s6**2)
        blk[:, 1, 0] = blk[:, 0, 1]
        blk[:, 2, 0] = blk[:, 0, 2]
        blk[:, 2, 1] = blk[:, 1, 2]
        for r in range(3):
            for col in range(3):
                H[idx[r], idx[col]] += blk[:, r, col]

        H[:n, :n] += np.outer(self.a, self.a) / sg0**2
        H[2 * n:3 * n, 2 * n:3 * n] += 1.0 / sg1**2
        grad2 = np.concatenate([-2.0 * qx, np.zeros(2 * n), [1.0]])
        H += np.outer(grad2, grad2) / sg2**2
        H[:n, :n] += 2.0 * self.Q / sg2

        scale = 1.0 / np.sqrt(H.diagonal())
        Hs = H * scale[None, :] * scale[:, None]
        try:
            d = scale * cho_solve(cho_factor(Hs), rhs * scale)
        except np.linalg.LinAlgError:
            Hs = Hs + 1e-12 * np.eye(self.nvar)
            d = scale * np.linalg.solve(Hs, rhs * scale)
        d = d + scale * cho_solve(cho_factor(Hs), (rhs - H @ d) * scale)
        return d


def _line_search(model, w, d, t, slope) -> tuple[float, bool]:
    """Backtracking Armijo step on F_t = t*obj + barrier.

    Both models have linear objectives, so the objective change is
    t*alpha*(g'd) exactly and the barrier change is -sum(log(s_new/s_old)):
    evaluating the *difference* avoids the cancellation a direct F_t
    comparison suffers once t is large.  The fraction-to-boundary rule keeps
    iterates from jamming into corners.  ok=False means no verifiable
    decrease exists at double precision.
    """
    s_old = model.slacks(w)
    lin = float(model.obj_grad @ d)
    alpha = 1.0
    for _ in range(60):
        s_new = model.slacks(w + alpha * d)
        if np.all(s_new > 0.005 * s_old):
            delta = t * alpha * lin - float(np.log(s_new / s_old).sum())
            if delta <= _ARMIJO * alpha * slope:
                return alpha, True
        alpha *= _BACKTRACK
    return 0.0, False


def solve_barrier(model, w0: np.ndarray, tol: float, t0: float = 1.0,
                  mu: float = 10.0, max_newton: int = 4000) -> BarrierResult:
    """Follow the central path, returning the best-KKT iterate.

    The path is extended until the duality-gap bound m/t reaches tol, the
    Newton iteration budget runs out, or stationarity starts degrading
    (the float64 precision wall).  kkt_residual is max over the stationarity
    residual and the per-constraint complementarity 1/t at the returned
    iterate; the objective there exceeds the exact relaxation optimum by at
    most gap_bound = m/t.
    """
    w = np.asarray(w0, float).copy()
    if np.any(model.slacks(w) <= 0.0):
        raise ValueError("initial point is not strictly feasible")
    m = model.num_constraints
    t = t0
    t_gap = m / tol
    iterations = 0
    best = None   # (kkt, stat, t, w, gap)

    while True:
        stalled = False
        for _ in range(_MAX_CENTER_STEPS):
            r = t * model.obj_grad + model.phi_grad(w)
            d = model.newton_dir(w, -r)
            lam2 = float(-r @ d)
            if not math.isfinite(lam2):
                raise FloatingPointError("Newton step diverged")
            if lam2 / 2.0 <= _CENTER_TOL:
                break
            alpha, ok = _line_search(model, w, d, t, -lam2)
            if not ok:
                stalled = True
                break
            w = w + alpha * d
            iterations += 1
            if iterations >= max_newton:
                break
        r = t * model.obj_grad + model.phi_grad(w)
        stat = float(np.abs(r).max()) / t
        kkt = max(stat, 1.0 / t)
        if best is None or kkt <= best[0]:
            best = (kkt, stat, t, w.copy(), m / t)
        if t >= t_gap or iterations >= max_newton:
            break
        if stalled and t * tol >= 1.0:
            break
        if best is not None and stat > 1e3 * best[1] and t * tol >= 1.0:
            break   # precision wall: stationarity is degrading, stop here
        t = min(t * mu, t_gap)

    kkt, stat, t_best, w_best, gap = best
    return BarrierResult(
        w=w_best,
        objective=model.objective(w_best),
        kkt_residual=kkt,
        iterations=iterations,
        converged=kkt <= tol,
        gap_bound=gap,
    )
