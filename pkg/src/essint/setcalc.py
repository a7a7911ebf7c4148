"""Aumann integrals of cone-valued maps over atomic spaces.

For a strictly positive atomic measure the integral of a convex-cone-valued
map is the weighted Minkowski sum ``Σ w_i C_i``, and since each ``C_i`` is a
cone the weights drop out: the result is ``cone(∪ generators)``.  A
finitely generated cone is closed, so taking the closure is the identity at
this level (``closure_needed`` is always ``False``); the closure only matters
in the continuum limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np

from .errors import DimensionTooLarge, SelectionBlowup
from .geom import MAX_CONE_DIM, ConeUnion, FinCone, Membership
from .mspace import MAX_COMBINATIONS, AtomicMeasureSpace


@dataclass(frozen=True, eq=False)
class ConeField:
    """Atom-wise cones ``ω ↦ C(ω)``."""

    space: AtomicMeasureSpace
    cones: Mapping[Hashable, ConeUnion]

    def __post_init__(self):
        cones = {}
        for a in self.space.atoms:
            if a not in self.cones:
                raise ValueError(f"no cone for atom {a!r}")
            c = self.cones[a]
            cones[a] = ConeUnion((c,)) if isinstance(c, FinCone) else c
        dims = {c.dim for c in cones.values()}
        if len(dims) != 1:
            raise ValueError("cones live in different dimensions")
        object.__setattr__(self, "cones", cones)

    @property
    def dim(self) -> int:
        return next(iter(self.cones.values())).dim


@dataclass(frozen=True, eq=False)
class AumannIntegral:
    """Result of :func:`aumann_integral`.

    ``selections[j]`` records, per atom, which part of ``C(ω)`` produced
    ``cone.parts[j]``.
    """

    cone: ConeUnion
    selections: tuple
    field: ConeField
    closure_needed: bool = False

    def membership(self, v) -> Membership:
        return self.cone.membership(v)

    def contains(self, v) -> bool:
        return self.cone.contains(v)

    def selection(self, v) -> dict | None:
        """Integrable selection ``x*(ω) ∈ C(ω)`` with ``Σ w_i x*(ω_i) = v``, or ``None``."""
        return integral_selection(v, self.field, self.selections)


def aumann_integral(F: ConeField) -> AumannIntegral:
    """``∫ C(ω) dμ`` as a union of generated cones (one part per part-selection)."""
    atoms = F.space.atoms
    n = F.dim
    counts = [len(F.cones[a].parts) for a in atoms]
    if max(counts) > 1 and n > MAX_CONE_DIM:
        raise DimensionTooLarge(f"selection enumeration in dimension {n}")
    total = math.prod(counts)
    if total > MAX_COMBINATIONS:
        raise SelectionBlowup(f"{total} part selections exceed {MAX_COMBINATIONS}")
    import itertools
    parts, sels = [], []
    for sel in itertools.product(*[range(c) for c in counts]):
        gens = [F.cones[a].parts[s].generators for a, s in zip(atoms, sel)]
        gens = [g for g in gens if len(g)]
        G = np.vstack(gens) if gens else np.zeros((0, n))
        parts.append(FinCone(G, n))
        sels.append(sel)
    keep = _prune_indices(parts)
    cone = ConeUnion(tuple(parts[i] for i in keep), n)
    return AumannIntegral(cone, tuple(sels[i] for i in keep), F)


def _prune_indices(parts) -> list[int]:
    keep = []
    for i, p in enumerate(parts):
        dominated = False
        for j, q in enumerate(parts):
            if i != j and p.subset_of(q) and (not q.subset_of(p) or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def cone_member(v, C) -> Membership:
    """Decide ``v ∈ C`` for a FinCone, ConeUnion or AumannIntegral; returns multipliers."""
    if isinstance(C, AumannIntegral):
        C = C.cone
    return C.membership(v)


def integral_selection(v, F: ConeField, selections=None) -> dict | None:
    """Write ``v = Σ w_i x*_i`` with ``x*_i ∈ C(ω_i)``; ``None`` if impossible."""
    from ._solvers import nnls
    from . import _tol

    v = np.asarray(v, dtype=float)
    atoms = F.space.atoms
    n = F.dim
    if selections is None:
        selections = aumann_integral(F).selections
    for sel in selections:
        cols, owner = [], []
        for i, (a, s) in enumerate(zip(atoms, sel)):
            for g in F.cones[a].parts[s].generators:
                cols.append(g)
                owner.append(i)
        if not cols:
            if np.linalg.norm(v) <= _tol.get().feas:
                return {a: np.zeros(n) for a in atoms}
            continue
        G = np.array(cols).T
        lam, res = nnls(G, v)
        if res <= _tol.get().feas * max(1.0, np.linalg.norm(v)):
            owner = np.array(owner)
            out = {}
            for i, (a, w) in enumerate(F.space.items()):
                out[a] = G[:, owner == i] @ lam[owner == i] / w
            return out
    return None
