import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import DOWN, UP, mf, sv
from essint import (AtomicMeasureSpace, GradientVanishes, Infeasible, NonoverlapFailed,
                    Objective, PreconditionFailed, QualificationFailed, certificate_residual,
                    check_normal_qualification, check_violator, inequality_certificate,
                    sip_certificate, stochastic_certificate, strict_min_alternative)
from essint import tolerances
from essint.errors import InactiveScreenFailed

ORIGIN = np.zeros(2)
SPACE2 = AtomicMeasureSpace((1, 2), [0.5, 0.5])


def halfspace_system():
    return mf([sv(([[1, 1]], [0])), sv(([[1, -1]], [0]))])


def affine_constraints():
    return {1: Objective.affine([1.0, 1.0]), 2: Objective.affine([1.0, -1.0])}


def sip_line(t):
    return np.array([-1.0, t - 0.5])


def zero_rhs(t):
    return 0.0


# ---------------------------------------------------------------- objectives

def test_max_affine_subdifferential():
    h = Objective.max_affine([[1.0, 0.0], [-1.0, 0.0]], [0.0, 0.0])
    V = h.subdifferential_vertices(ORIGIN)
    assert {tuple(v) for v in V} == {(1.0, 0.0), (-1.0, 0.0)}
    assert not h.is_differentiable(ORIGIN)
    assert h.is_differentiable([1.0, 0.0])
    assert h.value([-2.0, 3.0]) == 2.0


def test_quadratic_gradient():
    h = Objective.quadratic(np.eye(2), [1.0, 0.0])
    np.testing.assert_allclose(h.gradient([1.0, 2.0]), [2.0, 2.0])


# ---------------------------------------------------------------- certificates

def test_stochastic_certifies_unit_multipliers():
    cert = stochastic_certificate(Objective.affine([-1.0, 0.0]), halfspace_system(), ORIGIN)
    assert cert.certified
    for a in (1, 2):
        np.testing.assert_allclose(cert.multipliers[a][0], [1.0], atol=1e-12)
    r, lam_min = certificate_residual(cert)
    assert r <= 1e-12 and lam_min >= 0


def test_stochastic_refuses_wrong_objective():
    cert = stochastic_certificate(Objective.affine([0.0, -1.0]), halfspace_system(), ORIGIN)
    assert not cert.certified
    # distance from (0, 1) to cone{(1, 1), (1, -1)} is 1/sqrt(2)
    assert cert.stationarity_residual == pytest.approx(1 / np.sqrt(2), abs=1e-12)


def test_stochastic_conic_route(two_cones):
    cert = stochastic_certificate(Objective.affine([0.0, 0.0]), two_cones, ORIGIN,
                                  route="conic")
    assert cert.certified and cert.route == "conic"


def test_stochastic_conic_route_needs_cones(triangle):
    with pytest.raises(PreconditionFailed):
        stochastic_certificate(Objective.affine([1.0, 1.0]), mf([triangle, triangle]),
                               np.array([0.2, 0.2]), route="conic")


def test_inequality_certificate():
    cert = inequality_certificate(affine_constraints(), Objective.affine([-1.0, 0.0]),
                                  SPACE2, ORIGIN)
    assert cert.certified
    np.testing.assert_allclose([cert.multipliers[a][0][0] for a in (1, 2)], [1, 1],
                               atol=1e-12)


def test_inequality_rejects_vanishing_subgradient():
    f = {1: Objective.max_affine([[1.0, 0.0], [-1.0, 0.0]], [0.0, 0.0]),
         2: Objective.affine([1.0, -1.0])}
    with pytest.raises(QualificationFailed):
        inequality_certificate(f, Objective.affine([-1.0, 0.0]), SPACE2, ORIGIN)


def test_inequality_infeasible_point():
    with pytest.raises(Infeasible):
        inequality_certificate(affine_constraints(), Objective.affine([-1.0, 0.0]), SPACE2,
                               np.array([1.0, 0.0]))


@given(st.floats(0.1, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 0.9))
@settings(max_examples=30, deadline=None)
def test_stochastic_and_inequality_agree(s, g1, g2, w):
    """Half-space values and affine constraints encode the same dual system."""
    c1, c2 = np.array([1.0, s]), np.array([1.0, -1.0 / s])
    space = AtomicMeasureSpace((1, 2), [w, 1 - w])
    from essint import SampledMultifunction
    F = SampledMultifunction(space, {1: sv(([c1], [0])), 2: sv(([c2], [0]))})
    h = Objective.affine([g1, g2])
    a = stochastic_certificate(h, F, ORIGIN)
    b = inequality_certificate({1: Objective.affine(c1), 2: Objective.affine(c2)}, h,
                               space, ORIGIN)
    assert a.stationarity_residual == pytest.approx(b.stationarity_residual, abs=1e-8)
    for atom in (1, 2):
        np.testing.assert_allclose(a.multipliers[atom][0], b.multipliers[atom][0], atol=1e-8)


# ---------------------------------------------------------------- SIP

@pytest.mark.parametrize("N", [11, 21, 41])
def test_sip_unit_density(N):
    cert = sip_certificate(sip_line, zero_rhs, Objective.affine([1.0, 0.0]), (0, 1), N)
    assert cert.certified
    np.testing.assert_allclose(cert.density, 1.0, atol=1e-12)
    assert cert.stationarity_residual <= 1e-12


def test_sip_wrong_gradient_residual():
    cert = sip_certificate(sip_line, zero_rhs, Objective.affine([0.0, 1.0]), (0, 1), 11)
    assert not cert.certified
    # distance from (0, -1) to cone{(-1, t - 1/2)}: 2/sqrt(5)
    assert cert.stationarity_residual == pytest.approx(2 / np.sqrt(5), abs=1e-9)


def test_sip_infeasible_and_vanishing():
    h = Objective.affine([1.0, 0.0])
    with pytest.raises(Infeasible):
        sip_certificate(sip_line, zero_rhs, h, (0, 1), 5, xbar=[-1.0, 0.0])
    with pytest.raises(GradientVanishes):
        sip_certificate(lambda t: np.zeros(2), zero_rhs, h, (0, 1), 5)


def test_sip_inactive_screen_warning():
    # with a tight activity tolerance, node t = 1 is inactive yet only 1e-8 from the boundary
    def b(t):
        return 1e-8 * t
    with tolerances(active=1e-10), pytest.warns(InactiveScreenFailed):
        cert = sip_certificate(sip_line, b, Objective.affine([1.0, 0.0]), (0, 1), 5)
    assert cert.flags["inactive_screen"] is False


# ---------------------------------------------------------------- qualification

def test_nqc_opposite_halfplanes_violator():
    F = mf([sv(([[0, 1]], [0])), sv(([[0, -1]], [0]))])
    rep = check_normal_qualification(F, ORIGIN)
    assert not rep.holds and rep.path == "search"
    chk = check_violator(F, ORIGIN, rep.violator)
    assert chk["member"] and chk["balance"] <= 1e-9 and chk["max_norm"] == pytest.approx(1)


def test_nqc_independent_normals():
    F = mf([sv(([[0, 1]], [0])), sv(([[1, 0]], [0]))])
    assert check_normal_qualification(F, ORIGIN).holds


@pytest.mark.parametrize("kind", ["limiting", "regular"])
def test_nqc_paths_agree_with_common_interior(kind, triangle):
    F = mf([triangle, sv(([[1, 1]], [1])), sv(([[-1, 0]], [0]))])
    x = np.array([0.0, 1.0])
    fast = check_normal_qualification(F, x, kind, precheck=True)
    slow = check_normal_qualification(F, x, kind, precheck=False)
    assert fast.path == "slack-lp" and slow.path == "search"
    assert fast.holds and slow.holds


def test_nqc_fails_for_two_cones(two_cones):
    assert not check_normal_qualification(two_cones, ORIGIN).holds


# ---------------------------------------------------------------- strict minimizers

def test_strict_min_cone_branch_i():
    F = mf([sv(UP)])
    res = strict_min_alternative(Objective.affine([0.0, 1.0]), F, ORIGIN, 1.0, ks=(1, 2, 3))
    assert res.branch == "i"
    assert res.stationarity_residual <= 1e-9


def test_strict_min_zero_objective_two_cones(two_cones):
    res = strict_min_alternative(Objective.affine([0.0, 0.0]), two_cones, ORIGIN, 1.0)
    # with h = 0 the subgradient 0 already balances: branch (i) with α* = -1/sqrt(2)
    assert res.branch == "i"
    assert res.alpha_star == pytest.approx(-1 / np.sqrt(2), abs=1e-9)


def test_strict_min_nonstrict_fails():
    F = mf([sv(([[0, 1]], [0]))])
    with pytest.raises(NonoverlapFailed):
        strict_min_alternative(Objective.affine([0.0, 0.0]), F, ORIGIN, 1.0)


def test_strict_min_detects_better_point():
    F = mf([sv(UP)])
    with pytest.raises(PreconditionFailed):
        strict_min_alternative(Objective.affine([0.0, -1.0]), F, ORIGIN, 1.0)
