"""Tangent-cone intersection property (CHIP), tangential stability, and
normal-cone formulas for essential intersections.

For finite unions of polyhedra both sides of the CHIP equation are unions of
polyhedral cones and can be compared exactly; failures of CHIP need curved
or genuinely infinite families and cannot be realized here.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _tol
from .errors import NotMember, PreconditionFailed, SelectionBlowup
from .geom import (ConeUnion, FinCone, intersect_cones, limiting_normal_cone,
                   regular_normal_generators, tangent_cone, is_normally_regular)
from .mspace import MAX_COMBINATIONS, SampledMultifunction, essential_intersection
from .setcalc import AumannIntegral, ConeField, aumann_integral, integral_selection

STABILITY_RADII = (1.0, 0.1, 0.01, 0.001)


@dataclass(eq=False)
class ChipReport:
    lhs: ConeUnion
    rhs: ConeUnion
    holds: bool
    witnesses: list
    lhs_in_rhs: bool
    stability_detected: bool
    stability_radius: float | None
    seed: int


@dataclass(eq=False)
class NormalsResult:
    """Aumann integral of atom-wise limiting normals next to the directly computed cone."""

    cone: ConeUnion
    integral: AumannIntegral
    direct: ConeUnion
    mode: str
    inclusion_checked: bool
    equality_checked: bool | None = None
    missing: list = field(default_factory=list)


@dataclass(eq=False)
class InteriorEstimate:
    interior_probes: list
    selections: list
    all_pass: bool
    vacuous: bool
    hypothesis: str
    seed: int


def _require_in_intersection(MF, xbar):
    for a in MF.atoms:
        if not MF[a].contains(xbar):
            raise NotMember(f"reference point is not in the value at atom {a!r}")


def check_tangential_stability(S, xbar, r: float, *, seed: int = 42,
                               samples: int = 100) -> bool:
    """Heuristic test of ``T(x̄; S) ∩ B(0, r) ⊂ S - x̄``.

    Every generator is tried at lengths ``r/2`` and ``r/2000``; in addition
    ``samples`` seeded random conic combinations of length at most ``r/2``.
    """
    xbar = np.asarray(xbar, dtype=float)
    T = tangent_cone(S, xbar)
    for part in T.parts:
        for g in part.generators:
            u = g / np.linalg.norm(g)
            for length in (r / 2, r / 2000):
                if not S.contains(xbar + length * u):
                    return False
    rng = np.random.default_rng(seed)
    parts = [p for p in T.parts if len(p.generators)]
    if not parts:
        return True
    for _ in range(samples):
        part = parts[rng.integers(len(parts))]
        lam = rng.random(len(part.generators))
        d = part.generators.T @ lam
        nd = np.linalg.norm(d)
        if nd <= 1e-12:
            continue
        d = d / nd * (r / 2) * rng.random()
        if not S.contains(xbar + d):
            return False
    return True


def _intersect_unions(unions, n) -> ConeUnion:
    count = math.prod(len(u.parts) for u in unions)
    if count > MAX_COMBINATIONS:
        raise SelectionBlowup(f"{count} part selections exceed {MAX_COMBINATIONS}")
    parts = [intersect_cones(list(choice))
             for choice in itertools.product(*[u.parts for u in unions])]
    return ConeUnion(tuple(parts), n).pruned()


def check_chip(MF: SampledMultifunction, xbar, *, seed: int = 42) -> ChipReport:
    """Compare ``T(x̄; M∩)`` with ``∩_ω T(x̄; M(ω))``.

    Inclusions are tested part-wise on generators.  The report also records
    whether every value was found tangentially stable at a common radius
    from ``STABILITY_RADII`` (the sufficient condition for CHIP).
    """
    xbar = np.asarray(xbar, dtype=float)
    _require_in_intersection(MF, xbar)
    n = MF.dim
    lhs = tangent_cone(essential_intersection(MF), xbar)
    rhs = _intersect_unions([tangent_cone(MF[a], xbar) for a in MF.atoms], n)
    lhs_in_rhs = lhs.subset_of(rhs)
    rhs_in_lhs = rhs.subset_of(lhs)
    witnesses = []
    if not rhs_in_lhs:
        witnesses = [g for g in rhs.all_generators() if not lhs.contains(g)]
    radius = None
    for rad in STABILITY_RADII:
        if all(check_tangential_stability(MF[a], xbar, rad, seed=seed) for a in MF.atoms):
            radius = rad
            break
    return ChipReport(lhs, rhs, lhs_in_rhs and rhs_in_lhs, witnesses, lhs_in_rhs,
                      radius is not None, radius, seed)


def _normal_field(MF, xbar) -> ConeField:
    return ConeField(MF.space, {a: limiting_normal_cone(MF[a], xbar) for a in MF.atoms})


def normals_of_intersection(MF: SampledMultifunction, xbar, mode: str = "cones_at_origin"
                            ) -> NormalsResult:
    """Integral of atom-wise limiting normals as an estimate of ``N(x̄; M∩)``.

    Modes
    -----
    cones_at_origin
        Cone values, ``x̄ = 0``; checks ``N(0; M∩) ⊂ ∫ N(0; M(ω))``.
    chip
        CHIP at ``x̄``; checks ``N̂(x̄; M∩) ⊂ ∫ N(x̄; M(ω))``.
    regular_family
        CHIP and normal regularity of every value; checks equality between
        ``N(x̄; M∩)`` and the integral.
    """
    xbar = np.asarray(xbar, dtype=float)
    _require_in_intersection(MF, xbar)
    n = MF.dim
    M = essential_intersection(MF)
    if mode == "cones_at_origin":
        if np.linalg.norm(xbar) > _tol.get().feas or not MF.is_cone_valued():
            raise PreconditionFailed("mode cones_at_origin needs cone values and x̄ = 0")
        direct = limiting_normal_cone(M, xbar)
    elif mode == "chip":
        if not check_chip(MF, xbar).holds:
            raise PreconditionFailed("CHIP fails at x̄")
        direct = ConeUnion((regular_normal_generators(M, xbar),), n)
    elif mode == "regular_family":
        irregular = [a for a in MF.atoms if not is_normally_regular(MF[a], xbar)]
        if irregular:
            raise PreconditionFailed(f"values not normally regular at atoms {irregular}")
        if not check_chip(MF, xbar).holds:
            raise PreconditionFailed("CHIP fails at x̄")
        direct = limiting_normal_cone(M, xbar)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    integral = aumann_integral(_normal_field(MF, xbar))
    missing = [g for g in direct.all_generators() if not integral.contains(g)]
    equality = None
    if mode == "regular_family":
        equality = not missing and all(direct.contains(g)
                                       for g in integral.cone.all_generators())
    return NormalsResult(integral.cone, integral, direct, mode, not missing, equality, missing)


def interior_normal_estimate(MF: SampledMultifunction, xbar, *, hypothesis: str = "auto",
                             probes: int = 100, seed: int = 42) -> InteriorEstimate:
    """Probe interior points of ``N̂(x̄; M∩)`` for membership in the unclosed integral.

    ``hypothesis`` is ``"nqc"`` (cone values at the origin with the regular
    normal qualification condition), ``"chip"``, or ``"auto"`` (``"nqc"``
    for cone values at the origin, ``"chip"`` otherwise).  Each probe comes
    with an explicit selection ``x*(ω) ∈ N(x̄; M(ω))``.
    """
    from .optimality import check_normal_qualification

    xbar = np.asarray(xbar, dtype=float)
    _require_in_intersection(MF, xbar)
    n = MF.dim
    if hypothesis == "auto":
        conic = np.linalg.norm(xbar) <= _tol.get().feas and MF.is_cone_valued()
        hypothesis = "nqc" if conic else "chip"
    if hypothesis == "nqc":
        if not check_normal_qualification(MF, xbar, kind="regular").holds:
            raise PreconditionFailed("regular normal qualification condition fails")
    elif hypothesis == "chip":
        if not check_chip(MF, xbar, seed=seed).holds:
            raise PreconditionFailed("CHIP fails at x̄")
    else:
        raise ValueError(f"unknown hypothesis {hypothesis!r}")
    G = regular_normal_generators(essential_intersection(MF), xbar).generators
    if len(G) == 0 or np.linalg.matrix_rank(G, tol=1e-9) < n:
        return InteriorEstimate([], [], True, True, hypothesis, seed)
    F = _normal_field(MF, xbar)
    sels = aumann_integral(F).selections
    rng = np.random.default_rng(seed)
    pts, chosen, ok = [], [], True
    for _ in range(probes):
        v = G.T @ rng.uniform(0.5, 1.5, len(G))
        sel = integral_selection(v, F, sels)
        pts.append(v)
        chosen.append(sel)
        if sel is None or not _selection_valid(F, v, sel):
            ok = False
    return InteriorEstimate(pts, chosen, ok, False, hypothesis, seed)


def _selection_valid(F: ConeField, v, sel) -> bool:
    feas = _tol.get().feas
    total = sum(w * sel[a] for a, w in F.space.items())
    if np.linalg.norm(total - v) > feas * max(1.0, np.linalg.norm(v)):
        return False
    return all(F.cones[a].contains(sel[a]) for a in F.space.atoms)
