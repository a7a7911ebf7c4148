"""Problem files: JSON ingestion with field-addressed errors, canonical output.

Layout::

    {
      "dimension": 2,
      "space": {"atoms": [{"id": "1", "weight": 0.5}, ...]}
               | {"interval": {"a": 0, "b": 1, "nodes": 11, "rule": "trapezoid"}},
      "sets": {"<atom id>": {"pieces": [{"A": [[...], ...], "b": [...]}, ...]}},
      "objective": {"kind": "affine", "data": {"c": [...], "d": 0}},
      "constraints": {"<atom id>": <objective>},
      "sip": {"a": [[c0, c1, ...], ...], "b": [c0, c1, ...]},
      "point": [...],
      "perturbations": {"mode": "explicit" | "harmonic" | "scaled", "data": {...}},
      "params": {"radius": 1, "tolerances": {"feas": 1e-8}, "seed": 42, "p": 2}
    }

``sets`` is keyed by atom id: the value of the map at that atom.  On an
interval space ``sip`` supplies polynomial coefficients (ascending powers
of ``t``) for ``a(t)`` and ``b(t)``; the atom values then default to the
half-spaces ``<a(t_i), x> <= b(t_i)``.

:func:`dumps` writes sorted keys and floats with 17 significant digits, so
``dumps(load(text))`` reproduces text written by :func:`dumps` byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import EssintError
from .geom import Polyhedron, SetValue
from .mspace import (AtomicMeasureSpace, PerturbationSchedule, SampledMultifunction,
                     discretize_interval)
from .optimality import Objective


class ProblemError(EssintError):
    """Malformed problem file; ``field`` is a dotted path into the document."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------

def _scalar(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        if x == 0:
            return "0.0"
        s = format(x, ".17g")
        if not any(ch in s for ch in ".en"):
            s += ".0"
        return s
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _is_scalar(x) -> bool:
    return x is None or isinstance(x, (bool, int, float, str, np.generic))


def dumps(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON text (sorted keys, 17 significant digits)."""
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, tuple):
        obj = list(obj)
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k, ensure_ascii=False)}: {dumps(v, indent + 1)}"
                          for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(_is_scalar(v) for v in obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        body = ",\n".join(pad + dumps(v, indent + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    return _scalar(obj)


def digest(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode()
    return hashlib.sha256(text).hexdigest()


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _num(x, field):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ProblemError(field, f"expected a number, got {json.dumps(x)}")
    if not math.isfinite(x):
        raise ProblemError(field, "number must be finite")
    return float(x)


def _vector(x, field, n=None):
    if not isinstance(x, list):
        raise ProblemError(field, "expected a list of numbers")
    v = [_num(e, f"{field}[{i}]") for i, e in enumerate(x)]
    if n is not None and len(v) != n:
        raise ProblemError(field, f"has {len(v)} entries, expected {n}")
    return np.array(v, dtype=float)


def _matrix(x, field, n):
    if not isinstance(x, list):
        raise ProblemError(field, "expected a list of rows")
    return np.array([_vector(r, f"{field}[{i}]", n) for i, r in enumerate(x)],
                    dtype=float).reshape(-1, n)


def _req(d, key, field):
    if not isinstance(d, dict):
        raise ProblemError(field, "expected an object")
    if key not in d:
        raise ProblemError(f"{field}.{key}" if field else key, "missing")
    return d[key]


def parse_objective(obj, field, n) -> Objective:
    kind = _req(obj, "kind", field)
    data = _req(obj, "data", field)
    if kind == "affine":
        return Objective.affine(_vector(_req(data, "c", f"{field}.data"), f"{field}.data.c", n),
                                _num(data.get("d", 0.0), f"{field}.data.d"))
    if kind == "max_affine":
        C = _matrix(_req(data, "C", f"{field}.data"), f"{field}.data.C", n)
        d = _vector(_req(data, "d", f"{field}.data"), f"{field}.data.d", len(C))
        if len(C) == 0:
            raise ProblemError(f"{field}.data.C", "needs at least one row")
        return Objective.max_affine(C, d)
    if kind == "quadratic":
        Q = _matrix(_req(data, "Q", f"{field}.data"), f"{field}.data.Q", n)
        if Q.shape != (n, n):
            raise ProblemError(f"{field}.data.Q", f"expected {n} rows")
        try:
            return Objective.quadratic(Q, _vector(_req(data, "c", f"{field}.data"),
                                                  f"{field}.data.c", n),
                                       _num(data.get("d", 0.0), f"{field}.data.d"))
        except ValueError as e:
            raise ProblemError(f"{field}.data.Q", str(e)) from None
    raise ProblemError(f"{field}.kind", f"unknown objective kind {json.dumps(kind)}")


def poly(coeffs):
    """Callable ``t ↦ Σ_j c_j t**j``."""
    c = np.asarray(coeffs, dtype=float)
    return lambda t: float(np.polynomial.polynomial.polyval(t, c))


# ---------------------------------------------------------------------------
# problem object
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Problem:
    """A validated problem document plus the module objects it describes."""

    doc: dict
    dimension: int
    space: AtomicMeasureSpace | None
    interval: dict | None
    sets: dict
    objective: Objective | None
    constraints: dict
    sip: dict | None
    point: np.ndarray | None
    params: dict

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict, *, nodes: int | None = None, rule: str | None = None
                  ) -> "Problem":
        if not isinstance(doc, dict):
            raise ProblemError("$", "top level must be an object")
        n = _req(doc, "dimension", "")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ProblemError("dimension", "expected a positive integer")
        params = dict(doc.get("params", {}) or {})
        if not isinstance(params, dict):
            raise ProblemError("params", "expected an object")
        space, interval = None, None
        if "space" in doc:
            sp = doc["space"]
            if isinstance(sp, dict) and "atoms" in sp:
                atoms = sp["atoms"]
                if not isinstance(atoms, list) or not atoms:
                    raise ProblemError("space.atoms", "expected a nonempty list")
                ids, ws = [], []
                for i, at in enumerate(atoms):
                    aid = _req(at, "id", f"space.atoms[{i}]")
                    if not isinstance(aid, str):
                        raise ProblemError(f"space.atoms[{i}].id", "atom ids are strings")
                    w = _num(_req(at, "weight", f"space.atoms[{i}]"), f"space.atoms[{i}].weight")
                    if w <= 0:
                        raise ProblemError(f"space.atoms[{i}].weight", "must be positive")
                    if aid in ids:
                        raise ProblemError(f"space.atoms[{i}].id", f"duplicate id {aid!r}")
                    ids.append(aid)
                    ws.append(w)
                space = AtomicMeasureSpace(tuple(ids), ws)
            elif isinstance(sp, dict) and "interval" in sp:
                iv = dict(sp["interval"])
                if nodes is not None:
                    iv["nodes"] = nodes
                if rule is not None:
                    iv["rule"] = rule
                a = _num(_req(iv, "a", "space.interval"), "space.interval.a")
                b = _num(_req(iv, "b", "space.interval"), "space.interval.b")
                N = _req(iv, "nodes", "space.interval")
                if isinstance(N, bool) or not isinstance(N, int):
                    raise ProblemError("space.interval.nodes", "expected an integer")
                r = iv.get("rule", "trapezoid")
                try:
                    space = discretize_interval(a, b, N, r)
                except EssintError as e:
                    raise ProblemError("space.interval", str(e)) from None
                interval = {"a": a, "b": b, "nodes": N, "rule": r}
            else:
                raise ProblemError("space", "expected {atoms: [...]} or {interval: {...}}")
        sip = None
        if "sip" in doc:
            s = doc["sip"]
            ac = _req(s, "a", "sip")
            if not isinstance(ac, list) or len(ac) != n:
                raise ProblemError("sip.a", f"expected {n} coefficient lists")
            ac = [_vector(c, f"sip.a[{i}]") for i, c in enumerate(ac)]
            bc = _vector(_req(s, "b", "sip"), "sip.b")
            sip = {"a": ac, "b": bc}
        sets = {}
        for sid, sv in (doc.get("sets") or {}).items():
            field = f"sets.{sid}"
            pieces_doc = _req(sv, "pieces", field)
            if not isinstance(pieces_doc, list) or not pieces_doc:
                raise ProblemError(f"{field}.pieces", "expected a nonempty list")
            pieces = []
            for j, pc in enumerate(pieces_doc):
                pf = f"{field}.pieces[{j}]"
                A = _matrix(_req(pc, "A", pf), f"{pf}.A", n)
                b = _vector(_req(pc, "b", pf), f"{pf}.b", len(A))
                pieces.append(Polyhedron(A, b, n))
            val = SetValue(tuple(pieces), n)
            if val.is_empty:
                raise ProblemError(field, "set is empty")
            sets[sid] = val
        if not sets and sip is not None and space is not None:
            for at, t in zip(space.atoms, space.nodes):
                a_t = np.array([poly(c)(t) for c in sip["a"]])
                sets[at] = SetValue((Polyhedron(a_t[None, :], [poly(sip["b"])(t)], n),), n)
        if space is not None and sets:
            missing = [a for a in space.atoms if a not in sets]
            if missing:
                raise ProblemError("sets", f"no value for atoms {missing}")
        objective = parse_objective(doc["objective"], "objective", n) if "objective" in doc else None
        constraints = {k: parse_objective(v, f"constraints.{k}", n)
                       for k, v in (doc.get("constraints") or {}).items()}
        point = _vector(doc["point"], "point", n) if "point" in doc else None
        for key in ("radius",):
            if key in params and _num(params[key], f"params.{key}") <= 0:
                raise ProblemError(f"params.{key}", "must be positive")
        return cls(doc, n, space, interval, sets, objective, constraints, sip, point, params)

    @classmethod
    def loads(cls, text: str, **kw) -> "Problem":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ProblemError(f"line {e.lineno}", e.msg) from None
        return cls.from_dict(doc, **kw)

    @classmethod
    def read(cls, path, **kw) -> "Problem":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read(), **kw)

    def dumps(self) -> str:
        return dumps(self.doc) + "\n"

    # -- derived objects ----------------------------------------------------

    def require(self, *names):
        for name in names:
            val = getattr(self, name)
            if val is None or (isinstance(val, (dict, list)) and not val):
                raise ProblemError(name, "required by this command")

    def multifunction(self) -> SampledMultifunction:
        self.require("space", "sets")
        try:
            return SampledMultifunction(self.space, {a: self.sets[a] for a in self.space.atoms})
        except ValueError as e:
            raise ProblemError("sets", str(e)) from None

    def schedule(self) -> PerturbationSchedule:
        pert = _req(self.doc, "perturbations", "")
        mode = _req(pert, "mode", "perturbations")
        data = _req(pert, "data", "perturbations")
        n = self.dimension

        def amap(obj, field):
            if not isinstance(obj, dict):
                raise ProblemError(field, "expected a map from atom id to vector")
            return {a: _vector(_req(obj, a, field), f"{field}.{a}", n) for a in self.space.atoms}

        try:
            if mode == "explicit":
                terms = _req(data, "terms", "perturbations.data")
                ks = data.get("ks")
                return PerturbationSchedule(
                    self.space, tuple(amap(t, f"perturbations.data.terms[{i}]")
                                      for i, t in enumerate(terms)), ks, self.p)
            if mode == "harmonic":
                return PerturbationSchedule.harmonic(
                    self.space, amap(_req(data, "base", "perturbations.data"),
                                     "perturbations.data.base"),
                    list(_req(data, "ks", "perturbations.data")), self.p)
            if mode == "scaled":
                return PerturbationSchedule.scaled(
                    self.space, amap(_req(data, "base", "perturbations.data"),
                                     "perturbations.data.base"),
                    list(_req(data, "alphas", "perturbations.data")), self.p)
        except ValueError as e:
            raise ProblemError("perturbations", str(e)) from None
        raise ProblemError("perturbations.mode", f"unknown mode {json.dumps(mode)}")

    def base_shift(self) -> dict:
        """The unscaled shift ``a(ω)`` of a scaled or harmonic schedule."""
        pert = _req(self.doc, "perturbations", "")
        data = _req(pert, "data", "perturbations")
        base = _req(data, "base", "perturbations.data")
        return {a: _vector(_req(base, a, "perturbations.data.base"),
                           f"perturbations.data.base.{a}", self.dimension)
                for a in self.space.atoms}

    @property
    def radius(self) -> float:
        return float(self.params.get("radius", 1.0))

    @property
    def seed(self) -> int:
        return int(self.params.get("seed", 42))

    @property
    def p(self) -> float:
        return float(self.params.get("p", 2))

    @property
    def tolerances(self) -> dict:
        tol = self.params.get("tolerances", {}) or {}
        return {k: _num(v, f"params.tolerances.{k}") for k, v in tol.items()}
