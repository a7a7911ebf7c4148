"""Small dense LP / NNLS / QP kernels used throughout the package.

LPs go to HiGHS through :func:`scipy.optimize.linprog`.  Convex quadratic
programs are reduced to least-distance programs (LDP) and solved with
a Lawson-Hanson NNLS, then polished by an exact active-set KKT solve so that
returned points satisfy the KKT system to roughly machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.optimize import linprog

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass
class LPResult:
    status: str          # "optimal" | "infeasible" | "unbounded" | "error"
    x: np.ndarray | None
    fun: float | None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(None, None)) -> LPResult:
    """Minimize ``c @ x`` subject to linear constraints (HiGHS)."""
    c = np.asarray(c, dtype=float)
    kw = {}
    if A_ub is not None and len(A_ub):
        kw["A_ub"], kw["b_ub"] = np.asarray(A_ub, float), np.asarray(b_ub, float)
    if A_eq is not None and len(A_eq):
        kw["A_eq"], kw["b_eq"] = np.asarray(A_eq, float), np.asarray(b_eq, float)
    res = linprog(c, bounds=bounds, method="highs", options=_HIGHS_OPTIONS, **kw)
    if res.status == 0:
        return LPResult("optimal", res.x, float(res.fun))
    if res.status == 2:
        return LPResult("infeasible", None, None)
    if res.status == 3:
        return LPResult("unbounded", None, None)
    return LPResult("error", None, None)


def nnls(A, b):
    """Nonnegative least squares ``min ||A x - b||, x >= 0``; returns (x, rnorm).

    Lawson-Hanson active set on unit-normalized columns.  The residual is
    recomputed from the returned point.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if n == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    scale = np.linalg.norm(A, axis=0)
    live = scale > 0
    As = np.zeros_like(A)
    As[:, live] = A[:, live] / scale[live]
    tol = 10 * np.finfo(float).eps * max(m, n) * max(1.0, np.abs(b).max(initial=0.0))
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    for _ in range(3 * n + 10):
        w = As.T @ (b - As @ x)
        w[passive | ~live] = -np.inf
        j = int(np.argmax(w))
        if w[j] <= tol:
            break
        passive[j] = True
        for _ in range(3 * n + 10):
            P = np.flatnonzero(passive)
            z = np.zeros(n)
            z[P] = np.linalg.lstsq(As[:, P], b, rcond=None)[0]
            if np.all(z[P] > 0):
                x = z
                break
            neg = P[z[P] <= 0]
            alpha = np.min(x[neg] / (x[neg] - z[neg]))
            x = x + alpha * (z - x)
            passive &= ~(x <= tol)
            x[~passive] = 0.0
    x = np.where(live, x / np.where(live, scale, 1.0), 0.0)
    return x, float(np.linalg.norm(A @ x - b))


def ldp(G, h):
    """Least-distance program ``min ||u|| s.t. G u >= h``.

    Returns ``None`` when the constraints are infeasible.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float)
    m, n = G.shape
    if m == 0:
        return np.zeros(n)
    scale = np.linalg.norm(G, axis=1)
    zero = scale == 0
    if np.any(zero & (h > 0)):
        return None
    G, h, scale = G[~zero], h[~zero], scale[~zero]
    if len(h) == 0:
        return np.zeros(n)
    G = G / scale[:, None]
    h = h / scale
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(n + 1)
    f[n] = 1.0
    lam, _ = nnls(E, f)
    r = E @ lam - f
    if np.linalg.norm(r) <= 1e-12 or abs(r[n]) <= 1e-14:
        return None
    return -r[:n] / r[n]


@dataclass
class QPResult:
    x: np.ndarray
    ineq_multipliers: np.ndarray
    eq_multipliers: np.ndarray
    kkt_residual: float
    polished: bool


def kkt_residual(H, g, C, d, E, e, x, mu, nu) -> float:
    """Max-norm KKT violation of ``min 1/2 x'Hx + g'x s.t. Cx <= d, Ex = e``."""
    stat = H @ x + g + C.T @ mu + E.T @ nu
    prim = np.concatenate([np.maximum(C @ x - d, 0.0), np.abs(E @ x - e)])
    dual = np.maximum(-mu, 0.0)
    comp = np.abs(mu * (C @ x - d))
    parts = [np.abs(stat), prim, dual, comp]
    return float(max((p.max() if p.size else 0.0) for p in parts))


def _polish(H, g, C, d, E, e, x0, scale):
    """Primal-dual active-set refinement starting from the rows active at ``x0``."""
    n = len(g)
    tol = 1e-10 * scale
    m = C.shape[0]
    work = set(np.flatnonzero(C @ x0 - d >= -1e-7 * scale).tolist()) if m else set()
    for _ in range(4 * m + 10):
        W = sorted(work)
        A = np.vstack([E, C[W]]) if (len(W) or E.shape[0]) else np.zeros((0, n))
        rhs = np.concatenate([e, d[W]])
        k = A.shape[0]
        K = np.zeros((n + k, n + k))
        K[:n, :n] = H
        K[:n, n:] = A.T
        K[n:, :n] = A
        r = np.concatenate([-g, rhs])
        sol = np.linalg.lstsq(K, r, rcond=None)[0]
        if np.linalg.norm(K @ sol - r, np.inf) > tol:
            return None
        x, lam = sol[:n], sol[n:]
        nu, mu_w = lam[:E.shape[0]], lam[E.shape[0]:]
        if mu_w.size and mu_w.min() < -tol:
            work.discard(W[int(np.argmin(mu_w))])
            continue
        viol = C @ x - d if m else np.zeros(0)
        if viol.size and viol.max() > tol:
            work.add(int(np.argmax(viol)))
            continue
        mu = np.zeros(m)
        mu[W] = np.maximum(mu_w, 0.0)
        return x, mu, nu
    return None


def solve_qp(H, g, C=None, d=None, E=None, e=None, *, max_prox: int = 200) -> QPResult | None:
    """Convex QP ``min 1/2 x'Hx + g'x s.t. Cx <= d, Ex = e`` (H PSD).

    Returns ``None`` if the feasible set is empty.  A positive definite ``H``
    is handled by a single LDP; a singular one by proximal-point LDP steps,
    each followed by an attempt at an exact active-set polish.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    g = np.asarray(g, dtype=float)
    n = len(g)
    C = np.zeros((0, n)) if C is None else np.atleast_2d(np.asarray(C, float)).reshape(-1, n)
    d = np.zeros(0) if d is None else np.asarray(d, float).reshape(-1)
    E = np.zeros((0, n)) if E is None else np.atleast_2d(np.asarray(E, float)).reshape(-1, n)
    e = np.zeros(0) if e is None else np.asarray(e, float).reshape(-1)
    H = 0.5 * (H + H.T)
    scale = max(1.0, np.abs(H).max(initial=0.0), np.abs(g).max(initial=0.0),
                np.abs(d).max(initial=0.0), np.abs(e).max(initial=0.0))
    # stacked inequality form for the LDP step
    Ci = np.vstack([C, E, -E])
    di = np.concatenate([d, e, -e])

    eigmin = np.linalg.eigvalsh(H).min() if n else 1.0
    sigma = 0.0 if eigmin > 1e-7 * scale else 1e-2 * max(1.0, np.abs(H).max(initial=0.0))
    z = np.zeros(n)
    best = None
    for _ in range(max_prox if sigma > 0 else 1):
        Hs = H + sigma * np.eye(n)
        q = g - sigma * z
        cf = cho_factor(Hs, lower=True)
        L = np.tril(cf[0]) if cf[1] else np.triu(cf[0]).T
        Hinv_q = cho_solve(cf, q)
        # u = L' z + L^{-1} q;  z = L^{-T} u - Hs^{-1} q
        Linv_T_C = solve_triangular(L, Ci.T, lower=True).T      # C L^{-T}
        u = ldp(-Linv_T_C, -(di + Ci @ Hinv_q))
        if u is None:
            return None
        z_new = solve_triangular(L.T, u, lower=False) - Hinv_q
        pol = _polish(H, g, C, d, E, e, z_new, scale)
        if pol is not None:
            x, mu, nu = pol
            res = kkt_residual(H, g, C, d, E, e, x, mu, nu)
            if res <= 1e-9 * scale:
                return QPResult(x, mu, nu, res, True)
            if best is None or res < best.kkt_residual:
                best = QPResult(x, mu, nu, res, True)
        if sigma == 0.0 or np.linalg.norm(z_new - z) <= 1e-15 * scale:
            z = z_new
            break
        z = z_new
    if best is not None:
        return best
    # unpolished fallback: report the prox iterate with its residual
    mu = np.zeros(C.shape[0])
    nu = np.zeros(E.shape[0])
    return QPResult(z, mu, nu, kkt_residual(H, g, C, d, E, e, z, mu, nu), False)
