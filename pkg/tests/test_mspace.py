import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import DOWN, UP, mf, sv
from essint import (AtomicMeasureSpace, BadRange, PerturbationSchedule, SelectionBlowup,
                    discretize_interval, dyadic_space, essential_intersection)
from essint.mspace import piece_assignments


def test_dyadic_weights():
    S = dyadic_space(4)
    np.testing.assert_allclose(S.weights, [0.5, 0.25, 0.125, 0.0625])
    assert S.total_mass == pytest.approx(1 - 2**-4)


@given(st.integers(2, 60), st.sampled_from(["trapezoid", "uniform"]),
       st.floats(-5, 5), st.floats(0.1, 5))
@settings(max_examples=40, deadline=None)
def test_quadrature_mass(N, rule, a, length):
    S = discretize_interval(a, a + length, N, rule)
    assert S.total_mass == pytest.approx(length)
    assert len(S) == N
    assert S.nodes[0] == a and S.nodes[-1] == pytest.approx(a + length)


def test_trapezoid_integrates_linear_exactly():
    S = discretize_interval(0, 1, 11)
    f = {a: np.array([t]) for a, t in zip(S.atoms, S.nodes)}
    assert S.integrate(f)[0] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("args", [(1, 0, 5), (0, 1, 1), (0, np.inf, 4)])
def test_bad_ranges(args):
    with pytest.raises(BadRange):
        discretize_interval(*args)


def test_space_validation():
    with pytest.raises(ValueError):
        AtomicMeasureSpace((1, 2), [1.0, 0.0])
    with pytest.raises(ValueError):
        AtomicMeasureSpace((1, 1), [1.0, 1.0])


def test_weighted_norm():
    S = AtomicMeasureSpace((1, 2), [0.5, 0.5])
    f = {1: np.array([0.0, 2.0]), 2: np.array([0.0, 0.0])}
    assert S.norm(f) == pytest.approx(np.sqrt(2.0))
    assert S.norm(f, np.inf) == 2.0


def test_two_cone_intersection_is_origin():
    M = essential_intersection(mf([sv(DOWN), sv(UP)]))
    assert M.contains([0, 0])
    for z in ([0, 1e-3], [0, -1e-3], [1e-3, 0]):
        assert not M.contains(z)


@given(st.permutations([1, 2, 3]))
@settings(max_examples=6, deadline=None)
def test_intersection_invariant_under_permutation(order):
    F = mf([sv(DOWN), sv(([[0, 1]], [0.5])), sv(([[1, 0]], [1]), ([[-1, 0]], [1]))])
    M = essential_intersection(F)
    Mp = essential_intersection(F.permuted(order))
    rng = np.random.default_rng(1)
    for z in rng.uniform(-3, 3, size=(200, 2)):
        assert M.contains(z) == Mp.contains(z)


def test_schedule_harmonic_norms():
    S = AtomicMeasureSpace((1, 2), [0.5, 0.5])
    sched = PerturbationSchedule.harmonic(S, {1: [0, 1], 2: [0, 0]}, range(1, 6))
    np.testing.assert_allclose(sched.norms, np.sqrt(0.5) / np.arange(1, 6))
    k, term = next(iter(sched))
    assert k == 1 and np.allclose(term[1], [0, 1])


def test_schedule_must_decrease():
    S = AtomicMeasureSpace((1,), [1.0])
    with pytest.raises(ValueError):
        PerturbationSchedule.scaled(S, {1: [1.0, 0.0]}, [1.0, 2.0])


def test_selection_blowup_guard():
    vals = [sv(([[1, 0]], [0]), ([[-1, 0]], [0]))] * 21
    with pytest.raises(SelectionBlowup):
        list(piece_assignments(vals))
