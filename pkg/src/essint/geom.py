"""Exact polyhedral geometry for convex polyhedra and finite unions of them.

Sets are H-represented polyhedra ``{x : A x <= b}`` (:class:`Polyhedron`) and
finite unions thereof (:class:`SetValue`).  Cones come in two flavours:
finitely generated (:class:`FinCone`, V-form) and constraint form
(:class:`HCone`, ``{v : A v <= 0}``); possibly nonconvex normal cones are
finite unions of generated cones (:class:`ConeUnion`).

Conversions between V- and H-form use a brute-force double description
(extreme-ray enumeration over row subsets) and are restricted to ambient
dimension ``n <= 4``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from . import _tol
from ._solvers import lp, nnls, solve_qp
from .errors import DimensionTooLarge, EmptySet, NotMember

MAX_CONE_DIM = 4


def _as_matrix(A, n=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        if n is None:
            n = A.shape[1] if A.ndim == 2 else 0
        return np.zeros((0, n))
    return np.atleast_2d(A)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_dim(n: int):
    if n > MAX_CONE_DIM:
        raise DimensionTooLarge(f"cone conversion requested in dimension {n} > {MAX_CONE_DIM}")


def _unique_directions(G: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Drop zero rows and rows positively parallel to an earlier row."""
    keep, units = [], []
    for g in G:
        nrm = np.linalg.norm(g)
        if nrm <= tol:
            continue
        u = g / nrm
        if any(np.linalg.norm(u - w) <= tol for w in units):
            continue
        units.append(u)
        keep.append(g)
    if not keep:
        return np.zeros((0, G.shape[1]))
    return np.array(keep)


# ---------------------------------------------------------------------------
# polyhedra
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Polyhedron:
    """Convex polyhedron ``{x : A x <= b}``."""

    A: np.ndarray
    b: np.ndarray
    dim: int = field(default=None)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).reshape(-1)
        n = self.dim
        A = _as_matrix(self.A, n)
        if n is None:
            n = A.shape[1]
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has length {b.shape[0]}")
        if A.shape[1] != n:
            raise ValueError(f"A has {A.shape[1]} columns, expected ambient dimension {n}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "dim", int(n))

    @classmethod
    def whole_space(cls, n: int) -> "Polyhedron":
        return cls(np.zeros((0, n)), np.zeros(0), n)

    @classmethod
    def point(cls, x) -> "Polyhedron":
        x = np.asarray(x, dtype=float)
        n = len(x)
        I = np.eye(n)
        return cls(np.vstack([I, -I]), np.concatenate([x, -x]))

    @cached_property
    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.A, axis=1)

    @cached_property
    def is_empty(self) -> bool:
        if self.A.shape[0] == 0:
            return False
        res = lp(np.zeros(self.dim), self.A, self.b)
        return not res.ok

    def slack(self, x) -> np.ndarray:
        return self.b - self.A @ np.asarray(x, dtype=float)

    def contains(self, x, tol: float | None = None) -> bool:
        tol = _tol.get().feas if tol is None else tol
        return bool(np.all(self.slack(x) >= -tol * np.maximum(1.0, self.row_norms)))

    def active_rows(self, x, tol: float | None = None) -> np.ndarray:
        tol = _tol.get().active if tol is None else tol
        return np.flatnonzero(self.slack(x) <= tol * np.maximum(1.0, self.row_norms))

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        return Polyhedron(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]), self.dim)

    def shift(self, v) -> "Polyhedron":
        """The translate ``P - v``."""
        return Polyhedron(self.A, self.b - self.A @ np.asarray(v, float), self.dim)

    def is_cone(self) -> bool:
        """True when the set is a cone with apex at the origin."""
        if self.is_empty or not self.contains(np.zeros(self.dim)):
            return False
        act = self.active_rows(np.zeros(self.dim))
        inact = np.setdiff1d(np.arange(self.A.shape[0]), act)
        Aact = self.A[act]
        for j in inact:
            res = lp(-self.A[j], Aact, np.zeros(len(act)), bounds=(-1, 1))
            if res.ok and -res.fun > _tol.get().feas * max(1.0, self.row_norms[j]):
                return False
        return True

    def vertices(self) -> np.ndarray:
        """Vertices by row-subset enumeration (bounded, low-dimensional use only)."""
        n = self.dim
        out = []
        for S in itertools.combinations(range(self.A.shape[0]), n):
            M = self.A[list(S)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            v = np.linalg.solve(M, self.b[list(S)])
            if self.contains(v) and not any(np.allclose(v, w, atol=1e-10) for w in out):
                out.append(v)
        return np.array(out).reshape(-1, n)

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, rows={self.A.shape[0]})"


@dataclass(frozen=True, eq=False)
class SetValue:
    """Finite union of polyhedra; empty pieces are stripped on construction.

    A ``SetValue`` with no pieces denotes the empty set.
    """

    pieces: tuple
    dim: int = field(default=None)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        dims = {p.dim for p in pieces}
        if len(dims) > 1:
            raise ValueError(f"pieces have mixed ambient dimensions {sorted(dims)}")
        n = self.dim if self.dim is not None else (dims.pop() if dims else None)
        if n is None:
            raise ValueError("dimension required for an empty SetValue")
        if pieces and pieces[0].dim != n:
            raise ValueError("dimension mismatch")
        object.__setattr__(self, "pieces", tuple(p for p in pieces if not p.is_empty))
        object.__setattr__(self, "dim", int(n))

    @classmethod
    def from_halfspaces(cls, A, b) -> "SetValue":
        return cls((Polyhedron(A, b),))

    @property
    def is_empty(self) -> bool:
        return len(self.pieces) == 0

    @property
    def is_convex(self) -> bool:
        return len(self.pieces) <= 1

    def contains(self, x, tol: float | None = None) -> bool:
        return any(p.contains(x, tol) for p in self.pieces)

    def is_cone(self) -> bool:
        return not self.is_empty and all(p.is_cone() for p in self.pieces)

    def shift(self, v) -> "SetValue":
        return SetValue(tuple(p.shift(v) for p in self.pieces), self.dim)

    def __repr__(self):
        return f"SetValue(dim={self.dim}, pieces={len(self.pieces)})"


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------

class Membership(NamedTuple):
    member: bool
    multipliers: np.ndarray | None
    part: int | None = None


def _member_tol(v) -> float:
    return _tol.get().feas * max(1.0, float(np.linalg.norm(v)))


@dataclass(frozen=True, eq=False)
class FinCone:
    """Finitely generated convex cone ``cone(generators)``; no generators means ``{0}``."""

    generators: np.ndarray
    dim: int = field(default=None)

    def __post_init__(self):
        G = _as_matrix(self.generators, self.dim)
        n = self.dim if self.dim is not None else G.shape[1]
        if G.shape[1] != n:
            raise ValueError("generator length does not match dimension")
        object.__setattr__(self, "generators", _frozen(_unique_directions(G) if len(G) else G))
        object.__setattr__(self, "dim", int(n))

    @classmethod
    def zero(cls, n: int) -> "FinCone":
        return cls(np.zeros((0, n)), n)

    @classmethod
    def full(cls, n: int) -> "FinCone":
        I = np.eye(n)
        return cls(np.vstack([I, -I]), n)

    def membership(self, v) -> Membership:
        v = np.asarray(v, dtype=float)
        if np.linalg.norm(v) == 0:
            return Membership(True, np.zeros(len(self.generators)), 0)
        lam, res = nnls(self.generators.T, v)
        if res <= _member_tol(v):
            return Membership(True, lam, 0)
        return Membership(False, None, None)

    def contains(self, v) -> bool:
        return self.membership(v).member

    def subset_of(self, other: "FinCone | ConeUnion") -> bool:
        if isinstance(other, ConeUnion):
            return other.covers(self)
        return all(other.contains(g) for g in self.generators)

    @property
    def rank(self) -> int:
        if len(self.generators) == 0:
            return 0
        return int(np.linalg.matrix_rank(self.generators, tol=1e-9))

    @property
    def has_interior(self) -> bool:
        return self.rank == self.dim

    def to_hcone(self) -> "HCone":
        """H-form of this cone (double description, ``dim <= 4``)."""
        return HCone(HCone(self.generators, self.dim).to_fincone().generators, self.dim)

    def as_setvalue(self) -> SetValue:
        h = self.to_hcone()
        return SetValue((Polyhedron(h.A, np.zeros(h.A.shape[0]), self.dim),))

    def __repr__(self):
        return f"FinCone(dim={self.dim}, generators={self.generators.tolist()})"


@dataclass(frozen=True, eq=False)
class HCone:
    """Polyhedral cone ``{v : A v <= 0}``."""

    A: np.ndarray
    dim: int = field(default=None)

    def __post_init__(self):
        A = _as_matrix(self.A, self.dim)
        n = self.dim if self.dim is not None else A.shape[1]
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "dim", int(n))

    def contains(self, v) -> bool:
        v = np.asarray(v, dtype=float)
        if self.A.shape[0] == 0:
            return True
        nrm = np.maximum(np.linalg.norm(self.A, axis=1), 1e-300)
        return bool(np.all(self.A @ v / nrm <= _member_tol(v)))

    def residual(self, v) -> float:
        """Largest normalized violation ``max_j <a_j, v> / |a_j|`` (0 when inside)."""
        if self.A.shape[0] == 0:
            return 0.0
        nrm = np.maximum(np.linalg.norm(self.A, axis=1), 1e-300)
        return float(max(0.0, np.max(self.A @ np.asarray(v, float) / nrm)))

    def intersect(self, other: "HCone") -> "HCone":
        return HCone(np.vstack([self.A, other.A]), self.dim)

    def to_fincone(self) -> FinCone:
        return FinCone(_extreme_generators(self.A, self.dim), self.dim)


@dataclass(frozen=True, eq=False)
class ConeUnion:
    """Finite union of generated cones (possibly nonconvex)."""

    parts: tuple
    dim: int = field(default=None)

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("ConeUnion needs at least one part")
        n = self.dim if self.dim is not None else parts[0].dim
        if any(p.dim != n for p in parts):
            raise ValueError("parts have mixed dimensions")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "dim", int(n))

    @classmethod
    def single(cls, cone: FinCone) -> "ConeUnion":
        return cls((cone,))

    @property
    def is_convex(self) -> bool:
        return len(self.parts) == 1

    def membership(self, v) -> Membership:
        for i, part in enumerate(self.parts):
            m = part.membership(v)
            if m.member:
                return Membership(True, m.multipliers, i)
        return Membership(False, None, None)

    def contains(self, v) -> bool:
        return self.membership(v).member

    def covers(self, cone: FinCone) -> bool:
        """Sufficient test ``cone ⊂ self``: some single part holds every generator."""
        return any(cone.subset_of(p) for p in self.parts)

    def subset_of(self, other: "ConeUnion") -> bool:
        return all(other.covers(p) for p in self.parts)

    def all_generators(self) -> np.ndarray:
        gens = [p.generators for p in self.parts if len(p.generators)]
        return np.vstack(gens) if gens else np.zeros((0, self.dim))

    def pruned(self) -> "ConeUnion":
        """Drop duplicate parts and parts contained in another part."""
        parts = list(self.parts)
        keep = []
        for i, p in enumerate(parts):
            dominated = False
            for j, q in enumerate(parts):
                if i == j:
                    continue
                if p.subset_of(q):
                    # ties between equal cones resolve to the earlier index
                    if not q.subset_of(p) or j < i:
                        dominated = True
                        break
            if not dominated:
                keep.append(p)
        return ConeUnion(tuple(keep), self.dim)

    def __repr__(self):
        return f"ConeUnion(dim={self.dim}, parts={len(self.parts)})"


def polar(C: FinCone) -> HCone:
    """Polar ``{v : <g, v> <= 0 for all generators g}``."""
    return HCone(C.generators, C.dim)


def polar_inv(H: HCone) -> FinCone:
    """The generated cone whose polar is ``H``, i.e. ``cone(rows of H.A)``."""
    return FinCone(H.A, H.dim)


def _extreme_generators(A: np.ndarray, n: int) -> np.ndarray:
    """Generators of ``{v : A v <= 0}``: ± lineality basis plus extreme rays."""
    _check_dim(n)
    A = _as_matrix(A, n)
    A = _unique_directions(A) if len(A) else A
    if len(A):
        A = A / np.linalg.norm(A, axis=1)[:, None]
        _, s, Vt = np.linalg.svd(A)
        rank = int(np.sum(s > 1e-10))
        lin = Vt[rank:].T                      # n x l
        P = Vt[:rank].T                        # n x d, basis of the complement
    else:
        lin = np.eye(n)
        P = np.zeros((n, 0))
    gens = []
    for j in range(lin.shape[1]):
        gens.append(lin[:, j])
        gens.append(-lin[:, j])
    d = P.shape[1]
    if d == 0:
        return np.array(gens).reshape(-1, n)
    Ar = A @ P                                 # pointed cone in R^d
    for S in itertools.combinations(range(Ar.shape[0]), d - 1):
        if d - 1:
            M = Ar[list(S)]
            _, s, Vt = np.linalg.svd(M)
            if np.sum(s > 1e-10) != d - 1:
                continue
            y = Vt[-1]
        else:
            y = np.ones(1)
        for cand in (y, -y):
            if np.all(Ar @ cand <= 1e-9):
                v = P @ cand
                gens.append(v / np.linalg.norm(v))
                break
    G = np.array(gens).reshape(-1, n)
    return _unique_directions(G)


def intersect_cones(cones: Sequence[FinCone]) -> FinCone:
    """Intersection of generated cones via their H-forms."""
    n = cones[0].dim
    if len(cones) == 1:
        return cones[0]
    rows = [c.to_hcone().A for c in cones]
    return HCone(np.vstack(rows), n).to_fincone()


# ---------------------------------------------------------------------------
# projections and distances
# ---------------------------------------------------------------------------

def project(P: Polyhedron, z) -> np.ndarray:
    """Euclidean projection of ``z`` onto the polyhedron ``P``."""
    z = np.asarray(z, dtype=float)
    if P.is_empty:
        raise EmptySet("projection onto an empty polyhedron")
    if P.A.shape[0] == 0 or P.contains(z, 0.0):
        return z.copy()
    res = solve_qp(np.eye(P.dim), -z, P.A, P.b)
    if res is None:
        raise EmptySet("projection onto an empty polyhedron")
    return res.x


def nearest_point(S: SetValue, z) -> tuple[np.ndarray, int]:
    """Nearest point of ``S`` to ``z`` and the index of the piece realizing it."""
    if S.is_empty:
        raise EmptySet("nearest point in an empty set")
    best, best_i, best_d = None, -1, np.inf
    for i, P in enumerate(S.pieces):
        y = project(P, z)
        dist = np.linalg.norm(np.asarray(z, float) - y)
        if dist < best_d:
            best, best_i, best_d = y, i, dist
    return best, best_i


def distance(S: SetValue, z) -> float:
    """Euclidean distance from ``z`` to the union ``S``."""
    y, _ = nearest_point(S, z)
    d = float(np.linalg.norm(np.asarray(z, float) - y))
    return 0.0 if S.contains(z) else d


# ---------------------------------------------------------------------------
# tangent and normal cones
# ---------------------------------------------------------------------------

def _require_member(S: SetValue, x):
    if S.is_empty:
        raise EmptySet("empty set has no tangent or normal cones")
    if not S.contains(x):
        raise NotMember("point is not in the set (tolerance %.0e)" % _tol.get().feas)


def local_rows(S: SetValue, x) -> list[tuple[int, np.ndarray]]:
    """For each piece containing ``x``: (piece index, active constraint rows)."""
    _require_member(S, x)
    out = []
    for i, P in enumerate(S.pieces):
        if P.contains(x):
            out.append((i, P.A[P.active_rows(x)]))
    return out


def tangent_cone(S: SetValue, x) -> ConeUnion:
    """Contingent cone of the union at ``x``: union of the pieces' polyhedral tangent cones."""
    n = S.dim
    parts = [HCone(rows, n).to_fincone() for _, rows in local_rows(S, x)]
    return ConeUnion(tuple(parts), n).pruned()


def regular_normal_cone(S: SetValue, x) -> HCone:
    """Regular normal cone as the polar of the tangent cone (intersection of polars)."""
    T = tangent_cone(S, x)
    return HCone(T.all_generators(), S.dim)


def regular_normal_generators(S: SetValue, x) -> FinCone:
    """Generators of the regular normal cone.

    With a single piece through ``x`` these are the raw active rows.
    """
    loc = local_rows(S, x)
    if len(loc) == 1:
        return FinCone(loc[0][1], S.dim)
    return regular_normal_cone(S, x).to_fincone()


def _sign_patterns(rows: np.ndarray, offsets: np.ndarray, radius: float, delta: float):
    """Enumerate sign vectors of ``rows @ d - offsets`` realizable with ``|d|_inf <= radius``.

    Yields (signs, d) with signs in {-1, 0, 1}; ``0`` means exactly zero,
    ``±1`` means at least ``delta`` away from zero (rows are unit-normalized).
    """
    m, n = rows.shape
    bounds = [(-radius, radius)] * n

    def feasible(signs):
        eq = [j for j, s in enumerate(signs) if s == 0]
        ub_rows, ub_rhs = [], []
        for j, s in enumerate(signs):
            if s == -1:
                ub_rows.append(rows[j])
                ub_rhs.append(offsets[j] - delta)
            elif s == 1:
                ub_rows.append(-rows[j])
                ub_rhs.append(-offsets[j] - delta)
        res = lp(np.zeros(n), ub_rows or None, ub_rhs or None,
                 rows[eq] if eq else None, offsets[eq] if eq else None, bounds)
        return res

    def rec(prefix):
        if len(prefix) == m:
            res = feasible(prefix)
            yield tuple(prefix), res.x
            return
        for s in (0, -1, 1):
            cand = prefix + [s]
            if feasible(cand).ok:
                yield from rec(cand)

    yield from rec([])


def normal_strata(S: SetValue, x, radius: float | None = None) -> list[FinCone]:
    """Regular normal cones over the strata of ``S`` near ``x``.

    With ``radius=None`` the strata are those of the local cone of ``S`` at
    ``x`` (limiting-cone enumeration).  With a finite ``radius`` every point
    of ``S`` within ``radius`` of ``x`` is represented, including faces not
    passing through ``x``.
    """
    n = S.dim
    _check_dim(n)
    tol = _tol.get()
    x = np.asarray(x, dtype=float)
    rows, offs, owner = [], [], []
    if radius is None:
        _require_member(S, x)
        for i, R in local_rows(S, x):
            for r in R:
                rows.append(r / np.linalg.norm(r))
                offs.append(0.0)
                owner.append(i)
        box = 1.0
        pieces = sorted({i for i, _ in local_rows(S, x)})
    else:
        box = radius / np.sqrt(n)
        pieces = []
        for i, P in enumerate(S.pieces):
            if np.linalg.norm(project(P, x) - x) > radius:
                continue
            pieces.append(i)
            sl = P.slack(x) / P.row_norms
            for j in np.flatnonzero(sl <= box * np.sqrt(n) + tol.active):
                rows.append(P.A[j] / P.row_norms[j])
                offs.append(sl[j])
                owner.append(i)
    rows = np.array(rows).reshape(-1, n)
    offs = np.array(offs)
    owner = np.array(owner, dtype=int)
    cones = []
    for signs, d in _sign_patterns(rows, offs, box, tol.slack):
        signs = np.array(signs, dtype=int)
        inside = [i for i in pieces if np.all(signs[owner == i] <= 0)]
        if not inside:
            continue
        if radius is not None:
            y = x + d
            inside = [i for i in inside if S.pieces[i].contains(y)]
            if not inside:
                continue
        parts = []
        for i in inside:
            if radius is None:
                parts.append(FinCone(rows[(owner == i) & (signs == 0)], n))
            else:
                P = S.pieces[i]
                parts.append(FinCone(P.A[P.active_rows(x + d)], n))
        cones.append(intersect_cones(parts))
    return cones


def limiting_normal_cone(S: SetValue, x) -> ConeUnion:
    """Limiting (basic) normal cone by enumeration of activity strata near ``x``."""
    n = S.dim
    _check_dim(n)
    loc = local_rows(S, x)
    if len(loc) == 1:
        # locally convex: the limiting cone is the regular one
        return ConeUnion((FinCone(loc[0][1], n),), n)
    return ConeUnion(tuple(normal_strata(S, x)), n).pruned()


def is_normally_regular(S: SetValue, x) -> bool:
    """Regular and limiting normal cones coincide at ``x``."""
    reg = regular_normal_generators(S, x)
    lim = limiting_normal_cone(S, x)
    # regular normals are always limiting; equality needs the converse
    return all(p.subset_of(reg) for p in lim.parts)
