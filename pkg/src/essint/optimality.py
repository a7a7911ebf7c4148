"""Normal qualification conditions and stationarity certificates.

A certificate for ``0 ∈ ∂h(x̄) + ∫ N(x̄; M(ω)) dμ`` consists of a subgradient
``g*`` and, for every atom, nonnegative multipliers ``λ_i`` on generators
``v_ij`` of the atom's normal cone, with residual

    |g* + Σ_i w_i Σ_j λ_ij v_ij|.

Integrals of finitely generated cones are closed, so the closure in the
continuum statements is dropped here; every certificate carries a note
saying so.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping

import numpy as np

from . import _tol
from ._solvers import lp, nnls, solve_qp
from .errors import (GradientVanishes, InactiveScreenFailed, Infeasible, NonoverlapFailed,
                     NotMember, PreconditionFailed, QualificationFailed, SelectionBlowup)
from .extremal import EPWitness, check_local_extremality, check_nonoverlap, sequential_ep
from .geom import (ConeUnion, FinCone, Polyhedron, SetValue, is_normally_regular,
                   limiting_normal_cone, nearest_point, normal_strata, regular_normal_cone)
from .mspace import (MAX_COMBINATIONS, AtomicMeasureSpace, PerturbationSchedule,
                     SampledMultifunction, discretize_interval, essential_intersection)

MAX_SUBGRADIENT_VERTICES = 64
NQC_SLACK = 1e-3
CERT_TOL = 1e-6
CLOSURE_NOTE = ("finitely generated cone integrals are closed; the closure in the "
                "continuum condition is only nontrivial for infinite families")


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Objective:
    """Affine, max-affine or convex quadratic function on ``R^n``.

    ``C`` holds the gradient rows and ``d`` the offsets: ``h(x) = max_j
    C_j x + d_j`` (one row for affine and quadratic kinds); the quadratic
    kind adds ``x'Qx / 2``.
    """

    kind: str
    C: np.ndarray
    d: np.ndarray
    Q: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("affine", "max_affine", "quadratic"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if C.shape[0] != d.shape[0]:
            raise ValueError("one offset per affine piece required")
        if self.kind != "max_affine" and C.shape[0] != 1:
            raise ValueError(f"{self.kind} objective has a single gradient row")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)
        if self.kind == "quadratic":
            Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
            if Q.shape != (C.shape[1],) * 2 or not np.allclose(Q, Q.T):
                raise ValueError("Q must be a symmetric n x n matrix")
            if np.linalg.eigvalsh(Q).min() < -1e-10:
                raise ValueError("Q must be positive semidefinite")
            object.__setattr__(self, "Q", Q)

    @classmethod
    def affine(cls, c, d: float = 0.0) -> "Objective":
        return cls("affine", np.atleast_2d(c), [d])

    @classmethod
    def max_affine(cls, C, d) -> "Objective":
        return cls("max_affine", C, d)

    @classmethod
    def quadratic(cls, Q, c, d: float = 0.0) -> "Objective":
        return cls("quadratic", np.atleast_2d(c), [d], Q)

    @property
    def dim(self) -> int:
        return self.C.shape[1]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        v = float(np.max(self.C @ x + self.d))
        if self.kind == "quadratic":
            v += 0.5 * float(x @ self.Q @ x)
        return v

    def active_pieces(self, x, tol: float | None = None) -> np.ndarray:
        tol = _tol.get().feas if tol is None else tol
        vals = self.C @ np.asarray(x, float) + self.d
        return np.flatnonzero(vals >= vals.max() - tol)

    def subdifferential_vertices(self, x) -> np.ndarray:
        """Vertices of ``∂h(x)`` (a polytope; a single point unless max-affine)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            return (self.Q @ x + self.C[0])[None, :]
        if self.kind == "affine":
            return self.C.copy()
        G = _dedupe(self.C[self.active_pieces(x)])
        if len(G) > 1:
            G = G[[i for i in range(len(G)) if not _in_hull(G[i], np.delete(G, i, 0))]]
        if len(G) > MAX_SUBGRADIENT_VERTICES:
            raise SelectionBlowup(f"{len(G)} subgradient vertices exceed "
                                  f"{MAX_SUBGRADIENT_VERTICES}")
        return G

    def singular_subdifferential(self, x) -> FinCone:
        """``∂∞h(x) = {0}``: all supported kinds are locally Lipschitz."""
        return FinCone.zero(self.dim)

    def is_differentiable(self, x) -> bool:
        return len(self.subdifferential_vertices(x)) == 1

    def gradient(self, x) -> np.ndarray:
        V = self.subdifferential_vertices(x)
        if len(V) != 1:
            raise ValueError("objective is not differentiable here")
        return V[0]

    def epigraph(self) -> Polyhedron:
        """``{(x, α) : C_j x + d_j <= α}`` (affine and max-affine kinds)."""
        if self.kind == "quadratic":
            raise ValueError("the epigraph of a quadratic is not polyhedral")
        m = self.C.shape[0]
        return Polyhedron(np.hstack([self.C, -np.ones((m, 1))]), -self.d)


def _dedupe(G, tol=1e-12):
    out = []
    for g in G:
        if not any(np.linalg.norm(g - h) <= tol for h in out):
            out.append(g)
    return np.array(out).reshape(-1, G.shape[1])


def _in_hull(p, V) -> bool:
    if len(V) == 0:
        return False
    k = len(V)
    res = lp(np.zeros(k), A_eq=np.vstack([V.T, np.ones((1, k))]),
             b_eq=np.concatenate([p, [1.0]]), bounds=(0, None))
    return res.ok


def _hull_distance(V) -> float:
    """Distance from the origin to ``conv(V)``."""
    k = len(V)
    res = solve_qp(2 * V @ V.T, np.zeros(k), -np.eye(k), np.zeros(k),
                   np.ones((1, k)), np.ones(1))
    return float(np.linalg.norm(V.T @ res.x))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Certificate:
    """Stationarity certificate ``g* + Σ_i w_i Σ_j λ_ij v_ij ≈ 0``.

    ``multipliers[atom]`` is a pair ``(λ, generators)`` with generators as
    rows.  ``qualification`` records which hypotheses were checked and how.
    """

    stationarity_residual: float
    g_star: np.ndarray
    multipliers: dict
    weights: dict
    qualification: dict
    certified: bool
    route: str
    closure_gap: str = CLOSURE_NOTE
    flags: dict = field(default_factory=dict)
    density: np.ndarray | None = None
    nodes: np.ndarray | None = None


def certificate_residual(cert: Certificate) -> tuple[float, float]:
    """Recompute (residual, most negative multiplier) from the certificate fields."""
    total = np.array(cert.g_star, dtype=float)
    lam_min = 0.0
    for a, (lam, G) in cert.multipliers.items():
        lam = np.asarray(lam, float)
        G = np.asarray(G, float).reshape(len(lam), -1) if len(lam) else np.zeros((0, len(total)))
        if len(lam):
            total = total + cert.weights[a] * (G.T @ lam)
            lam_min = min(lam_min, float(lam.min()))
    return float(np.linalg.norm(total)), lam_min


def _min_norm_density(A, colw, lam0):
    """Among λ >= 0 with A λ = A λ0, the one minimizing Σ colw λ²."""
    k = len(lam0)
    target = A @ lam0
    # keep only independent equality rows
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
    E = U[:, :rank].T @ A
    e = U[:, :rank].T @ target
    res = solve_qp(np.diag(2 * colw), np.zeros(k), -np.eye(k), np.zeros(k), E, e)
    if res is None or not res.polished:
        return lam0
    lam = np.maximum(res.x, 0.0)
    if np.linalg.norm(A @ lam - target) > 1e-12 * max(1.0, np.linalg.norm(target)):
        return lam0
    return lam


def _fit(vertices, gens: Mapping, weights: Mapping):
    """Best ``(residual, g*, λ)`` over subgradient vertices, then over their hull."""
    atoms = list(gens)
    n = vertices.shape[1]
    cols, owner, colw = [], [], []
    for i, a in enumerate(atoms):
        for g in gens[a]:
            cols.append(weights[a] * np.asarray(g, float))
            owner.append(i)
            colw.append(weights[a])
    A = np.array(cols).T if cols else np.zeros((n, 0))
    owner = np.array(owner, dtype=int)
    colw = np.array(colw)
    best = None
    for g in vertices:
        lam, res = nnls(A, -g)
        if best is None or res < best[0]:
            best = (res, g, lam)
    if best[0] > CERT_TOL and len(vertices) > 1:
        # joint fit over conv(vertices): variables (θ, λ), θ in the simplex
        k, m = len(vertices), A.shape[1]
        B = np.hstack([vertices.T, A])
        H = 2 * B.T @ B
        C = -np.eye(k + m)
        E = np.concatenate([np.ones(k), np.zeros(m)])[None, :]
        res = solve_qp(H, np.zeros(k + m), C, np.zeros(k + m), E, np.ones(1))
        if res is not None:
            th, lam = np.maximum(res.x[:k], 0), np.maximum(res.x[k:], 0)
            th = th / th.sum()
            g = vertices.T @ th
            r = float(np.linalg.norm(g + A @ lam))
            if r < best[0]:
                best = (r, g, lam)
    r, g, lam = best
    if r <= CERT_TOL and len(lam):
        lam = _min_norm_density(A, colw, lam)
        r = float(np.linalg.norm(g + A @ lam))
    mult = {a: (lam[owner == i], np.asarray(gens[a], float).reshape(-1, n))
            for i, a in enumerate(atoms)}
    return r, g, mult


def _part_selections(cones: Mapping):
    atoms = list(cones)
    count = math.prod(len(cones[a].parts) for a in atoms)
    if count > MAX_COMBINATIONS:
        raise SelectionBlowup(f"{count} part selections exceed {MAX_COMBINATIONS}")
    for sel in itertools.product(*[range(len(cones[a].parts)) for a in atoms]):
        yield {a: cones[a].parts[s].generators for a, s in zip(atoms, sel)}


def _require_in_intersection(MF, xbar):
    for a in MF.atoms:
        if not MF[a].contains(xbar):
            raise NotMember(f"reference point is not in the value at atom {a!r}")


def stochastic_certificate(h: Objective, MF: SampledMultifunction, xbar, *,
                           route: str = "auto") -> Certificate:
    """Certify ``0 ∈ ∂h(x̄) + ∫ N(x̄; M(ω)) dμ``.

    Routes: ``"regular"`` needs CHIP and normal regularity of ``M∩`` at
    ``x̄`` (or a differentiable ``h``); ``"conic"`` needs cone values and
    ``x̄ = 0``; ``"auto"`` takes the first that applies.
    """
    from .vcalc import check_chip

    xbar = np.asarray(xbar, dtype=float)
    _require_in_intersection(MF, xbar)
    qual = {"singular_subdifferential_trivial": True}
    conic = np.linalg.norm(xbar) <= _tol.get().feas and MF.is_cone_valued()

    def regular_ok():
        chip = check_chip(MF, xbar).holds
        qual["chip"] = chip
        if not chip:
            return False
        if h.is_differentiable(xbar):
            qual["differentiable_objective"] = True
            return True
        reg = is_normally_regular(essential_intersection(MF), xbar)
        qual["intersection_normally_regular"] = reg
        return reg

    if route == "auto":
        route = "regular" if regular_ok() else ("conic" if conic else None)
        if route is None:
            raise PreconditionFailed("neither CHIP with normal regularity nor cone values at 0")
    elif route == "regular":
        if not regular_ok():
            raise PreconditionFailed("CHIP or normal regularity of the intersection fails")
    elif route == "conic":
        if not conic:
            raise PreconditionFailed("conic route needs cone values and x̄ = 0")
    else:
        raise ValueError(f"unknown route {route!r}")
    qual["route"] = route
    cones = {a: limiting_normal_cone(MF[a], xbar) for a in MF.atoms}
    weights = {a: w for a, w in MF.space.items()}
    V = h.subdifferential_vertices(xbar)
    best = None
    for gens in _part_selections(cones):
        fit = _fit(V, gens, weights)
        if best is None or fit[0] < best[0]:
            best = fit
        if best[0] <= CERT_TOL:
            break
    r, g, mult = best
    return Certificate(r, g, mult, weights, qual, r <= CERT_TOL, route)


def inequality_certificate(f_atoms: Mapping, h: Objective, space: AtomicMeasureSpace,
                           xbar) -> Certificate:
    """Certificate for constraints ``f_ω(x) <= 0`` with the cones ``cone(∂f_ω(x̄))``.

    Raises
    ------
    Infeasible
        Some ``f_ω(x̄) > 1e-8``.
    QualificationFailed
        ``0 ∈ ∂f_ω(x̄)`` for an active atom.
    """
    xbar = np.asarray(xbar, dtype=float)
    tol = _tol.get()
    vals = {a: f_atoms[a].value(xbar) for a in space.atoms}
    bad = {a: v for a, v in vals.items() if v > tol.feas}
    if bad:
        raise Infeasible(f"constraints violated at atoms {sorted(bad, key=str)}")
    active = [a for a in space.atoms if abs(vals[a]) <= tol.active]
    gens, dist = {}, {}
    for a in space.atoms:
        if a not in active:
            gens[a] = np.zeros((0, len(xbar)))
            continue
        V = f_atoms[a].subdifferential_vertices(xbar)
        dist[a] = _hull_distance(V)
        if dist[a] <= tol.feas:
            raise QualificationFailed(f"0 is a subgradient of the constraint at atom {a!r}")
        gens[a] = V
    weights = {a: w for a, w in space.items()}
    r, g, mult = _fit(h.subdifferential_vertices(xbar), gens, weights)
    qual = {"singular_subdifferential_trivial": True, "active_atoms": active,
            "zero_not_subgradient": True, "subgradient_distance": dist}
    return Certificate(r, g, mult, weights, qual, r <= CERT_TOL, "inequality")


def sip_certificate(a: Callable, b: Callable, h: Objective, interval, N: int,
                    rule: str = "trapezoid", xbar=None) -> Certificate:
    """Certificate for ``<a(t), x> <= b(t)``, ``t ∈ [t0, t1]``, on quadrature nodes.

    The density ``λ(t_i) >= 0`` is the minimum weighted-norm solution among
    those attaining the least residual.  ``flags["inactive_screen"]`` is
    ``False`` (and a warning issued) when some inactive node is not strictly
    feasible by the activity margin.
    """
    t0, t1 = interval
    nu = discretize_interval(t0, t1, N, rule)
    n = h.dim
    xbar = np.zeros(n) if xbar is None else np.asarray(xbar, dtype=float)
    if h.kind == "max_affine" and not h.is_differentiable(xbar):
        raise PreconditionFailed("objective must be differentiable at x̄")
    tol = _tol.get()
    grads = np.array([np.asarray(a(t), float) for t in nu.nodes]).reshape(N, n)
    slack = grads @ xbar - np.array([float(b(t)) for t in nu.nodes])
    if slack.max() > tol.feas:
        raise Infeasible(f"constraint violated at node t={nu.nodes[int(slack.argmax())]:.17g}")
    act = np.flatnonzero(np.abs(slack) <= tol.active)
    zero = [i for i in act if np.linalg.norm(grads[i]) <= tol.feas]
    if zero:
        raise GradientVanishes(f"gradient vanishes at active node t={nu.nodes[zero[0]]:.17g}")
    inact = np.setdiff1d(np.arange(N), act)
    # with equal activity and slack margins the screen cannot trip; it bites
    # when activity is identified more tightly than the interiority margin
    screen = bool(len(inact) == 0 or slack[inact].max() <= -tol.slack)
    if not screen:
        warnings.warn("inactive-node interiority screen failed", InactiveScreenFailed)
    gens = {nu.atoms[i]: (grads[i:i + 1] if i in act else np.zeros((0, n))) for i in range(N)}
    weights = dict(nu.items())
    r, g, mult = _fit(h.subdifferential_vertices(xbar), gens, weights)
    dens = np.array([mult[at][0][0] if len(mult[at][0]) else 0.0 for at in nu.atoms])
    qual = {"singular_subdifferential_trivial": True, "active_nodes": act.tolist(),
            "nonzero_gradients": True, "inactive_screen_heuristic": True}
    return Certificate(r, g, mult, weights, qual, r <= CERT_TOL, "sip",
                       flags={"inactive_screen": screen}, density=dens, nodes=nu.nodes)


# ---------------------------------------------------------------------------
# normal qualification
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class QualificationReport:
    holds: bool
    kind: str
    path: str
    violator: dict | None = None
    slack_point: np.ndarray | None = None


def _slack_point(MF):
    """A point strictly inside every (convex) value by margin ``NQC_SLACK``, if any."""
    rows, rhs = [], []
    for a in MF.atoms:
        P = MF[a].pieces[0]
        rows.append(P.A)
        rhs.append(P.b - NQC_SLACK * P.row_norms)
    A, bb = np.vstack(rows), np.concatenate(rhs)
    if A.shape[0] == 0:
        return np.zeros(MF.dim)
    res = lp(np.zeros(MF.dim), A, bb)
    return res.x if res.ok else None


def check_normal_qualification(MF: SampledMultifunction, xbar, kind: str = "limiting",
                               eps: float | None = None, *, precheck: bool = True
                               ) -> QualificationReport:
    """Does ``Σ w_i x*_i = 0`` with ``x*_i`` normal to ``M(ω_i)`` force ``x* = 0``?

    ``kind="limiting"`` uses ``N(x̄; M(ω))``; ``kind="regular"`` uses regular
    normals at all points of each value near ``x̄`` (within ``eps`` if given,
    else arbitrarily close).  With ``precheck`` the common-interior-point
    sufficient condition is tried first (convex values, or normally regular
    cones at the origin).  The exact search maximizes every signed
    coordinate of every ``x*_i`` over the bounded balanced selections.
    """
    xbar = np.asarray(xbar, dtype=float)
    _require_in_intersection(MF, xbar)
    n = MF.dim
    if kind not in ("limiting", "regular"):
        raise ValueError(f"unknown kind {kind!r}")
    if precheck:
        convex = all(MF[a].is_convex for a in MF.atoms)
        regular_cones = (not convex and np.linalg.norm(xbar) <= _tol.get().feas
                         and MF.is_cone_valued()
                         and all(MF[a].is_convex and is_normally_regular(MF[a], xbar)
                                 for a in MF.atoms))
        if convex or regular_cones:
            x0 = _slack_point(MF)
            if x0 is not None:
                return QualificationReport(True, kind, "slack-lp", None, x0)
    if kind == "limiting":
        parts = {a: list(limiting_normal_cone(MF[a], xbar).parts) for a in MF.atoms}
    else:
        parts = {a: normal_strata(MF[a], xbar, radius=eps) for a in MF.atoms}
    atoms = list(MF.atoms)
    count = math.prod(len(parts[a]) for a in atoms)
    if count > MAX_COMBINATIONS:
        raise SelectionBlowup(f"{count} part selections exceed {MAX_COMBINATIONS}")
    feas = _tol.get().feas
    for sel in itertools.product(*[parts[a] for a in atoms]):
        Gs = [c.generators for c in sel]
        sizes = [len(G) for G in Gs]
        K = sum(sizes)
        if K == 0:
            continue
        Aeq = np.hstack([w * G.T for w, G in zip(MF.weights, Gs) if len(G)])
        offs = np.cumsum([0] + sizes)
        for i, G in enumerate(Gs):
            if not len(G):
                continue
            for l in range(n):
                for s in (1.0, -1.0):
                    c = np.zeros(K)
                    c[offs[i]:offs[i + 1]] = -s * G[:, l]
                    res = lp(c, A_eq=Aeq, b_eq=np.zeros(n), bounds=(0, 1))
                    if res.ok and -res.fun > feas:
                        lam = res.x
                        vio = {a: Gj.T @ lam[offs[j]:offs[j + 1]] if len(Gj) else np.zeros(n)
                               for j, (a, Gj) in enumerate(zip(atoms, Gs))}
                        top = max(np.linalg.norm(v) for v in vio.values())
                        vio = {a: v / top for a, v in vio.items()}
                        return QualificationReport(False, kind, "search", vio)
    return QualificationReport(True, kind, "search")


def check_violator(MF: SampledMultifunction, xbar, violator: Mapping) -> dict:
    """Independent recomputation for a qualification violator (limiting cones)."""
    bal = sum(w * np.asarray(violator[a], float) for a, w in MF.space.items())
    member = all(limiting_normal_cone(MF[a], xbar).contains(violator[a]) for a in MF.atoms)
    top = max(np.linalg.norm(violator[a]) for a in MF.atoms)
    return {"balance": float(np.linalg.norm(bal)), "max_norm": float(top), "member": member}


# ---------------------------------------------------------------------------
# strict minimizers
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class StrictMinResult:
    """Outcome of the strict-minimizer alternative.

    Branch ``"i"``: ``subgradient ∈ ∂h(y)`` and ``normals[ω] ∈ N̂(x(ω); M(ω))``
    with ``subgradient + Σ w_i normals_i ≈ 0``.  Branch ``"ii"``: the
    ``ω0`` dual is a singular subgradient balanced by the constraint normals.
    """

    branch: str
    witness: EPWitness
    y: np.ndarray
    subgradient: np.ndarray | None
    normals: dict
    stationarity_residual: float
    alpha_star: float
    omega0: Hashable
    augmented: SampledMultifunction


def augment_with_epigraph(h: Objective, MF: SampledMultifunction, xbar):
    """System on ``R^{n+1}``: ``epi h`` at a new atom of weight one, ``M(ω) × (-∞, h(x̄)]``."""
    if h.kind not in ("affine", "max_affine"):
        raise PreconditionFailed("objective must be affine or max-affine")
    n = MF.dim
    hbar = h.value(xbar)
    omega0 = "omega0"
    while omega0 in MF.atoms:
        omega0 += "'"
    cap = np.zeros((1, n + 1))
    cap[0, n] = 1.0
    values = {omega0: SetValue((h.epigraph(),), n + 1)}
    for a in MF.atoms:
        pieces = tuple(Polyhedron(np.vstack([np.hstack([P.A, np.zeros((P.A.shape[0], 1))]), cap]),
                                  np.concatenate([P.b, [hbar]]), n + 1)
                       for P in MF[a].pieces)
        values[a] = SetValue(pieces, n + 1)
    space = AtomicMeasureSpace((omega0,) + MF.atoms, np.concatenate([[1.0], MF.weights]))
    return SampledMultifunction(space, values), omega0


def _sample_feasible(MF, xbar, r, count, seed):
    rng = np.random.default_rng(seed)
    E = essential_intersection(MF)
    n = MF.dim
    out = []
    for _ in range(count):
        z = xbar + rng.uniform(-r, r, n)
        y, _ = nearest_point(E, z)
        if np.linalg.norm(y - xbar) <= r:
            out.append(y)
    return out


def strict_min_alternative(h: Objective, MF: SampledMultifunction, xbar, r: float,
                           ks=(1, 2, 3, 4, 5), *, samples: int = 200, seed: int = 42
                           ) -> StrictMinResult:
    """Run the extremal principle on the epigraph-augmented system and classify.

    Raises
    ------
    PreconditionFailed
        Sampling finds a feasible point with a lower objective value.
    NonoverlapFailed
        The augmented system overlaps near ``(x̄, h(x̄))``: ``x̄`` is not a
        strict minimizer.
    """
    xbar = np.asarray(xbar, dtype=float)
    _require_in_intersection(MF, xbar)
    n = MF.dim
    hbar = h.value(xbar)
    for y in _sample_feasible(MF, xbar, r, samples, seed):
        if h.value(y) < hbar - _tol.get().feas:
            raise PreconditionFailed("sampling found a feasible point with lower objective")
    aug, omega0 = augment_with_epigraph(h, MF, xbar)
    zbar = np.concatenate([xbar, [hbar]])
    if not check_nonoverlap(aug, zbar, r):
        raise NonoverlapFailed("augmented system overlaps: x̄ is not a strict minimizer")
    base = {a: np.zeros(n + 1) for a in aug.atoms}
    base[omega0] = np.concatenate([np.zeros(n), [-1.0]])
    sched = PerturbationSchedule.harmonic(aug.space, base, ks)
    wit = sequential_ep(aug, zbar, r, sched)[-1]
    x0 = wit.xstar[omega0]
    alpha = float(x0[n])
    y = wit.xk[omega0][:n]
    if alpha < -_tol.get().feas:
        branch, scale = "i", abs(alpha)
        sub = x0[:n] / scale
    else:
        branch, scale = "ii", 1.0
        sub = x0[:n]
    normals = {a: wit.xstar[a][:n] / scale for a in MF.atoms}
    total = sub + sum(w * normals[a] for a, w in MF.space.items())
    parts = [float(np.linalg.norm(total))]
    for a in MF.atoms:
        parts.append(regular_normal_cone(MF[a], wit.xk[a][:n]).residual(normals[a]))
    if branch == "i":
        V = _dedupe(h.C[h.active_pieces(y, _tol.get().active)])
        if not _in_hull(sub, V):
            k = len(V)
            res = solve_qp(2 * V @ V.T, -2 * V @ sub, -np.eye(k), np.zeros(k),
                           np.ones((1, k)), np.ones(1))
            parts.append(float(np.linalg.norm(V.T @ res.x - sub)))
    return StrictMinResult(branch, wit, y, sub, normals, max(parts), alpha, omega0, aug)
