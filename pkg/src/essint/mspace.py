"""Finite atomic measure spaces and set-valued maps sampled on their atoms.

Every atom carries strictly positive mass, so "for almost all ω" is the same
as "for every atom"; essential intersections are plain intersections.
Outer semicontinuity of a continuum map is the caller's concern: at the
atomic level it is vacuous.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import BadRange, SelectionBlowup
from .geom import Polyhedron, SetValue

MAX_COMBINATIONS = 10**6


@dataclass(frozen=True, eq=False)
class AtomicMeasureSpace:
    """Atoms with strictly positive weights; ``nodes`` are optional index-set coordinates."""

    atoms: tuple
    weights: np.ndarray
    nodes: np.ndarray | None = None

    def __post_init__(self):
        atoms = tuple(self.atoms)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(atoms) != len(w):
            raise ValueError("one weight per atom required")
        if len(atoms) == 0:
            raise ValueError("measure space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise ValueError("atom ids must be unique")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("atom weights must be finite and strictly positive")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)
        if self.nodes is not None:
            t = np.array(self.nodes, dtype=float)
            t.setflags(write=False)
            object.__setattr__(self, "nodes", t)

    def __len__(self):
        return len(self.atoms)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def weight(self, atom) -> float:
        return float(self.weights[self.atoms.index(atom)])

    def items(self):
        return zip(self.atoms, self.weights)

    def reweighted(self, weights) -> "AtomicMeasureSpace":
        return AtomicMeasureSpace(self.atoms, weights, self.nodes)

    def norm(self, field_: Mapping, p: float = 2.0) -> float:
        """Weighted ``L^p`` norm of a vector field given atom-wise."""
        vals = np.array([np.linalg.norm(field_[a]) for a in self.atoms])
        if math.isinf(p):
            return float(vals.max())
        return float(np.sum(self.weights * vals**p) ** (1.0 / p))

    def integrate(self, field_: Mapping) -> np.ndarray:
        return sum(w * np.asarray(field_[a], float) for a, w in self.items())


def dyadic_space(M: int) -> AtomicMeasureSpace:
    """Atoms ``1..M`` with masses ``2**-m``."""
    if M < 1:
        raise BadRange("need at least one atom")
    return AtomicMeasureSpace(tuple(range(1, M + 1)), 0.5 ** np.arange(1, M + 1))


def discretize_interval(a: float, b: float, N: int, rule: str = "trapezoid") -> AtomicMeasureSpace:
    """Quadrature measure on ``N`` equally spaced nodes of ``[a, b]`` (endpoints included).

    ``uniform`` puts mass ``(b - a) / N`` on every node; ``trapezoid`` uses the
    composite trapezoid weights.  Either way the total mass is ``b - a``.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise BadRange(f"need a < b, got [{a}, {b}]")
    if N < 2:
        raise BadRange(f"need at least 2 nodes, got {N}")
    t = np.linspace(a, b, N)
    if rule == "uniform":
        w = np.full(N, (b - a) / N)
    elif rule == "trapezoid":
        h = (b - a) / (N - 1)
        w = np.full(N, h)
        w[0] = w[-1] = h / 2
    else:
        raise BadRange(f"unknown quadrature rule {rule!r}")
    return AtomicMeasureSpace(tuple(f"t{i}" for i in range(N)), w, t)


@dataclass(frozen=True, eq=False)
class SampledMultifunction:
    """The map ``ω ↦ M(ω)`` on the atoms of a finite measure space."""

    space: AtomicMeasureSpace
    values: Mapping[Hashable, SetValue]
    dim: int = field(default=None)

    def __post_init__(self):
        vals = dict(self.values)
        missing = [a for a in self.space.atoms if a not in vals]
        if missing:
            raise ValueError(f"atoms without a value: {missing}")
        extra = [a for a in vals if a not in self.space.atoms]
        if extra:
            raise ValueError(f"values for unknown atoms: {extra}")
        dims = {v.dim for v in vals.values()}
        if len(dims) != 1:
            raise ValueError(f"values live in different dimensions {sorted(dims)}")
        for a, v in vals.items():
            if v.is_empty:
                raise ValueError(f"value at atom {a!r} is empty")
        object.__setattr__(self, "values", {a: vals[a] for a in self.space.atoms})
        object.__setattr__(self, "dim", dims.pop())

    def __getitem__(self, atom) -> SetValue:
        return self.values[atom]

    @property
    def atoms(self):
        return self.space.atoms

    @property
    def weights(self):
        return self.space.weights

    def shifted(self, shifts: Mapping) -> "SampledMultifunction":
        """Atom-wise translates ``M(ω) - a(ω)``."""
        return SampledMultifunction(
            self.space, {a: v.shift(shifts[a]) for a, v in self.values.items()})

    def permuted(self, order: Sequence) -> "SampledMultifunction":
        idx = [self.space.atoms.index(a) for a in order]
        space = AtomicMeasureSpace(tuple(order), self.space.weights[idx],
                                   None if self.space.nodes is None else self.space.nodes[idx])
        return SampledMultifunction(space, {a: self.values[a] for a in order})

    def is_cone_valued(self) -> bool:
        return all(v.is_cone() for v in self.values.values())

    def contains(self, x) -> bool:
        return all(v.contains(x) for v in self.values.values())


def piece_assignments(values: Sequence[SetValue], limit: int = MAX_COMBINATIONS):
    """Iterate over choices of one piece per value, guarding the product size."""
    count = math.prod(len(v.pieces) for v in values)
    if count > limit:
        raise SelectionBlowup(f"{count} piece assignments exceed the limit {limit}")
    return itertools.product(*[range(len(v.pieces)) for v in values])


def essential_intersection(MF: SampledMultifunction) -> SetValue:
    """``∩_ω M(ω)`` over all atoms; the result may be empty (check ``is_empty``)."""
    values = [MF[a] for a in MF.atoms]
    n = MF.dim
    if all(len(v.pieces) == 1 for v in values):
        P = values[0].pieces[0]
        for v in values[1:]:
            P = P.intersect(v.pieces[0])
        return SetValue((P,), n)
    pieces = []
    for choice in piece_assignments(values):
        P = values[0].pieces[choice[0]]
        for v, c in zip(values[1:], choice[1:]):
            P = P.intersect(v.pieces[c])
        if not P.is_empty:
            pieces.append(P)
    return SetValue(tuple(pieces), n)


@dataclass(frozen=True, eq=False)
class PerturbationSchedule:
    """Sequence of atom-wise shifts ``a_k(ω)`` with precomputed weighted p-norms."""

    space: AtomicMeasureSpace
    terms: tuple
    ks: tuple = None
    p: float = 2.0
    norms: np.ndarray = field(init=False)

    def __post_init__(self):
        terms = tuple({a: np.asarray(t[a], dtype=float) for a in self.space.atoms}
                      for t in self.terms)
        ks = tuple(range(1, len(terms) + 1)) if self.ks is None else tuple(self.ks)
        if len(ks) != len(terms):
            raise ValueError("one index per term required")
        norms = np.array([self.space.norm(t, self.p) for t in terms])
        if np.any(np.diff(norms) > 1e-12 * max(1.0, norms.max(initial=0.0))):
            raise ValueError("perturbation norms must decrease monotonically")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "norms", norms)

    @classmethod
    def harmonic(cls, space, base: Mapping, ks: Sequence[int], p: float = 2.0):
        """``a_k = base / k``."""
        return cls(space, tuple({a: np.asarray(base[a], float) / k for a in space.atoms}
                                for k in ks), tuple(ks), p)

    @classmethod
    def scaled(cls, space, base: Mapping, alphas: Sequence[float], p: float = 2.0):
        """``a_k = alpha_k * base``."""
        return cls(space, tuple({a: alpha * np.asarray(base[a], float) for a in space.atoms}
                                for alpha in alphas), tuple(range(1, len(alphas) + 1)), p)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(zip(self.ks, self.terms))
