"""Extremality tests and a constructive extremal-principle engine.

For a finite system of closed sets ``M(ω_i)`` with weights ``w_i`` and a
perturbation ``a_k``, the engine minimizes the penalty

    φ_k(x) = Σ_i w_i d²(x + a_k(ω_i), M(ω_i))    over the ball B(x̄, r),

reads off the nearest points ``x_k(ω_i)`` and the gradients
``u_i = 2 (x̂ + a_k(ω_i) - x_k(ω_i))``, and normalizes them in the weighted
2-norm.  At an unconstrained minimizer Σ w_i u_i = 0, which is exactly the
zero-sum condition of the extremal principle; each ``u_i`` is a proximal
(hence regular) normal to ``M(ω_i)`` at ``x_k(ω_i)``.

Only ``p = 2`` is implemented: then φ_k is a convex QP per piece assignment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _tol
from ._solvers import lp, solve_qp
from .errors import (DegenerateZeroDual, NoStabilization, NotMember,
                     PreconditionFailed)
from .geom import (Polyhedron, SetValue, limiting_normal_cone, nearest_point,
                   project, regular_normal_cone)
from .mspace import (PerturbationSchedule, SampledMultifunction,
                     essential_intersection, piece_assignments)

_PROBES_2D = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1],
                       [2, 1], [1, 2], [-2, 1], [1, -2]], dtype=float)


@dataclass(eq=False)
class EPWitness:
    """Dual witness of extremality for one perturbation index ``k``.

    Attributes
    ----------
    xk : dict
        Nearest points ``x_k(ω) ∈ M(ω)``.
    xstar : dict
        Normalized normals ``x*_k(ω)``.
    q_norm : float
        Weighted 2-norm of ``xstar`` (1 up to rounding).
    balance : ndarray
        ``Σ w_i x*_k(ω_i)``.
    eps_k : float
        ``2 |x̂_k - x̄|``; bounds ``|x_k(ω) - x̄| <= 2 |a_k(ω)| + eps_k``.
    ball_active : bool
        The minimizer sits on the boundary of ``B(x̄, r)``; the balance then
        carries the ball multiplier and is not zero.
    """

    k: int
    xk: dict
    xstar: dict
    q_norm: float
    balance: np.ndarray
    eps_k: float
    phi_value: float
    xhat: np.ndarray
    raw_norm: float = 0.0
    ball_active: bool = False
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# extremality and nonoverlap
# ---------------------------------------------------------------------------

def _require_in_intersection(MF: SampledMultifunction, xbar):
    for a in MF.atoms:
        if not MF[a].contains(xbar):
            raise NotMember(f"reference point is not in the value at atom {a!r}")


def _combined_pieces(values):
    """Nonempty intersections over all piece assignments."""
    out = []
    for choice in piece_assignments(values):
        P = values[0].pieces[choice[0]]
        for v, c in zip(values[1:], choice[1:]):
            P = P.intersect(v.pieces[c])
        if not P.is_empty:
            out.append(P)
    return out


def check_local_extremality(MF: SampledMultifunction, xbar, r: float,
                            sched: PerturbationSchedule) -> list[bool]:
    """Per k: does ``∩_i (M(ω_i) - a_k(ω_i))`` miss the ball ``B(x̄, r)``?"""
    xbar = np.asarray(xbar, dtype=float)
    if r <= 0:
        raise ValueError("radius must be positive")
    _require_in_intersection(MF, xbar)
    out = []
    for _, term in sched:
        shifted = [MF[a].shift(term[a]) for a in MF.atoms]
        ok = True
        for P in _combined_pieces(shifted):
            if np.linalg.norm(project(P, xbar) - xbar) <= r:
                ok = False
                break
        out.append(ok)
    return out


def check_nonoverlap(MF: SampledMultifunction, xbar, r: float) -> bool:
    """Is ``x̄`` the only point of the essential intersection in ``B(x̄, r)``?

    Pieces through ``x̄`` are probed by LPs over the inscribed box; a convex
    piece holding a second point near ``x̄`` holds a segment from ``x̄``, which
    some signed coordinate direction detects.
    """
    xbar = np.asarray(xbar, dtype=float)
    _require_in_intersection(MF, xbar)
    n = MF.dim
    feas = _tol.get().feas
    E = essential_intersection(MF)
    half = r / np.sqrt(n)
    bounds = [(xi - half, xi + half) for xi in xbar]
    I = np.eye(n)
    probes = [I, -I]
    if n == 2:
        probes.append(_PROBES_2D / np.linalg.norm(_PROBES_2D, axis=1)[:, None])
    probes = np.vstack(probes)
    for P in E.pieces:
        if not P.contains(xbar):
            if np.linalg.norm(project(P, xbar) - xbar) <= r:
                return False
            continue
        for c in probes:
            res = lp(-c, P.A, P.b, bounds=bounds)
            if res.ok and -res.fun - c @ xbar > feas:
                return False
    return True


# ---------------------------------------------------------------------------
# penalty minimization
# ---------------------------------------------------------------------------

def _penalty_qp(pieces, weights, shifts, xbar, rho):
    """Joint QP in (x, y_1..y_m): Σ w_i |x + a_i - y_i|² + rho |x - x̄|², y_i ∈ P_i."""
    n = len(xbar)
    m = len(pieces)
    N = n * (m + 1)
    H = np.zeros((N, N))
    g = np.zeros(N)
    I = np.eye(n)
    for i, (w, a) in enumerate(zip(weights, shifts)):
        D = np.zeros((n, N))
        D[:, :n] = I
        D[:, n * (i + 1):n * (i + 2)] = -I
        H += 2 * w * D.T @ D
        g += 2 * w * D.T @ a
    H[:n, :n] += 2 * rho * I
    g[:n] -= 2 * rho * xbar
    rows, rhs = [], []
    for i, P in enumerate(pieces):
        C = np.zeros((P.A.shape[0], N))
        C[:, n * (i + 1):n * (i + 2)] = P.A
        rows.append(C)
        rhs.append(P.b)
    C = np.vstack(rows) if rows else np.zeros((0, N))
    d = np.concatenate(rhs) if rhs else np.zeros(0)
    res = solve_qp(H, g, C, d)
    if res is None:
        return None
    z = res.x
    x = z[:n]
    ys = [z[n * (i + 1):n * (i + 2)] for i in range(m)]
    phi = float(sum(w * np.sum((x + a - y) ** 2) for w, a, y in zip(weights, shifts, ys)))
    return x, ys, phi


def _minimize_in_ball(pieces, weights, shifts, xbar, r):
    sol = _penalty_qp(pieces, weights, shifts, xbar, 0.0)
    if sol is None:
        return None
    if np.linalg.norm(sol[0] - xbar) <= r * (1 + 1e-12):
        return sol + (False,)
    lo, hi = 0.0, 1.0
    while True:
        cand = _penalty_qp(pieces, weights, shifts, xbar, hi)
        if np.linalg.norm(cand[0] - xbar) <= r:
            break
        lo, hi = hi, 2 * hi
    best = cand
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand = _penalty_qp(pieces, weights, shifts, xbar, mid)
        if np.linalg.norm(cand[0] - xbar) <= r:
            hi, best = mid, cand
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return best + (True,)


def _ep_step(MF: SampledMultifunction, xbar, r, term, k) -> EPWitness:
    atoms = MF.atoms
    weights = MF.weights
    shifts = [np.asarray(term[a], float) for a in atoms]
    values = [MF[a] for a in atoms]
    best = None
    for choice in piece_assignments(values):
        pieces = [v.pieces[c] for v, c in zip(values, choice)]
        sol = _minimize_in_ball(pieces, weights, shifts, xbar, r)
        if sol is not None and (best is None or sol[2] < best[2]):
            best = sol
    x, _, phi, ball = best
    if phi <= 1e-14:
        raise DegenerateZeroDual(
            f"penalty vanishes at k={k} (phi={phi:.3e}); the system is not extremal")
    xk, u = {}, {}
    for a, v, s in zip(atoms, values, shifts):
        z = x + s
        y, _ = nearest_point(v, z)
        xk[a] = y
        diff = z - y
        u[a] = 2 * diff if np.linalg.norm(diff) > 1e-12 else np.zeros_like(diff)
    raw = math.sqrt(sum(w * float(u[a] @ u[a]) for a, w in zip(atoms, weights)))
    if raw <= 1e-14:
        raise DegenerateZeroDual(f"all penalty gradients vanish at k={k}")
    xstar = {a: u[a] / raw for a in atoms}
    qn = math.sqrt(sum(w * float(xstar[a] @ xstar[a]) for a, w in zip(atoms, weights)))
    bal = sum(w * xstar[a] for a, w in zip(atoms, weights))
    return EPWitness(k=k, xk=xk, xstar=xstar, q_norm=qn, balance=np.asarray(bal),
                     eps_k=2 * float(np.linalg.norm(x - xbar)), phi_value=phi,
                     xhat=x, raw_norm=raw, ball_active=ball)


def sequential_ep(MF: SampledMultifunction, xbar, r: float, sched: PerturbationSchedule,
                  p: float = 2) -> list[EPWitness]:
    """Witnesses ``(x_k, x*_k)`` of the sequential extremal principle, one per ``k``.

    Raises
    ------
    PreconditionFailed
        The system is not locally extremal for some ``k`` or the nonoverlap
        condition fails.
    DegenerateZeroDual
        The penalty minimum is zero (inconsistent input).
    """
    if p != 2:
        raise NotImplementedError("only p = 2 is implemented")
    xbar = np.asarray(xbar, dtype=float)
    ext = check_local_extremality(MF, xbar, r, sched)
    bad = [k for k, ok in zip(sched.ks, ext) if not ok]
    if bad:
        raise PreconditionFailed(f"not locally extremal for k in {bad}")
    if not check_nonoverlap(MF, xbar, r):
        raise PreconditionFailed("nonoverlap condition fails")
    return [_ep_step(MF, xbar, r, term, k) for k, term in sched]


def check_witness(MF: SampledMultifunction, xbar, term: Mapping, wit: EPWitness) -> dict:
    """Recompute the witness residuals from scratch.

    Returns the balance norm, the deviation of the q-norm from one, the worst
    normalized violation of regular normality, and the worst slack of the
    distance estimate (negative means violated).
    """
    xbar = np.asarray(xbar, dtype=float)
    bal = sum(w * np.asarray(wit.xstar[a]) for a, w in MF.space.items())
    qn = math.sqrt(sum(w * float(np.sum(np.asarray(wit.xstar[a]) ** 2))
                       for a, w in MF.space.items()))
    memb, est = 0.0, np.inf
    for a in MF.atoms:
        x = np.asarray(wit.xk[a])
        if not MF[a].contains(x):
            memb = np.inf
            continue
        memb = max(memb, regular_normal_cone(MF[a], x).residual(wit.xstar[a]))
        bound = 2 * np.linalg.norm(term[a]) + wit.eps_k + 1e-8
        est = min(est, bound - np.linalg.norm(x - xbar))
    return {"balance": float(np.linalg.norm(bal)), "q_norm_error": abs(qn - 1.0),
            "membership": float(memb), "estimate_slack": float(est)}


# ---------------------------------------------------------------------------
# cone-valued systems
# ---------------------------------------------------------------------------

def conic_ep(MF: SampledMultifunction, a: Mapping, p: float = 2, *,
             max_halvings: int = 40, tol: float = 1e-6) -> EPWitness:
    """Limit witness of the exact extremal principle for cone values at the origin.

    Runs the penalty engine on ``α_k a`` for ``α_k = 1, 1/2, 1/4, ...`` until
    consecutive normalized duals agree to ``tol`` in the weighted 2-norm, then
    certifies ``x*(ω) ∈ N(0; Λ(ω))`` per atom.  ``extras`` carries the final
    ``alpha``, the number of halvings, the stabilization gap and the per-atom
    limiting-cone memberships.
    """
    if p != 2:
        raise NotImplementedError("only p = 2 is implemented")
    n = MF.dim
    zero = np.zeros(n)
    if not MF.is_cone_valued():
        raise PreconditionFailed("every value must be a cone with apex at the origin")
    a = {w: np.asarray(a[w], dtype=float) for w in MF.atoms}
    amax = max(np.linalg.norm(v) for v in a.values())
    if amax == 0:
        raise PreconditionFailed("the shift vanishes identically")
    r = 10 * amax
    sched = PerturbationSchedule(MF.space, (a,))
    if not check_local_extremality(MF, zero, r, sched)[0]:
        raise PreconditionFailed("cone system is not extremal at the origin")
    if not check_nonoverlap(MF, zero, r):
        raise PreconditionFailed("nonoverlap condition fails at the origin")
    prev = None
    for j in range(max_halvings + 1):
        alpha = 0.5 ** j
        wit = _ep_step(MF, zero, r, {w: alpha * v for w, v in a.items()}, j)
        if prev is not None:
            gap = MF.space.norm({w: wit.xstar[w] - prev.xstar[w] for w in MF.atoms})
            if gap <= tol:
                member = {w: limiting_normal_cone(MF[w], zero).contains(wit.xstar[w])
                          for w in MF.atoms}
                wit.extras.update(alpha=alpha, halvings=j, gap=gap,
                                  limiting_membership=member,
                                  certified=all(member.values()))
                return wit
        prev = wit
    raise NoStabilization(f"duals did not stabilize after {max_halvings} halvings")
