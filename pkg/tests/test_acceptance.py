"""Acceptance criteria 1-10; each test records one PASS/FAIL line."""
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import oracles as O
from conftest import (DOWN, GEOM_FIXTURES, UP, cone_corpus, geometry_disagreements, mf, raw,
                      record, sv)
from essint import (AtomicMeasureSpace, NonoverlapFailed, Objective, PerturbationSchedule,
                    Polyhedron, SampledMultifunction, check_chip, check_normal_qualification,
                    check_violator, check_witness, conic_ep, discretize_interval, distance,
                    dyadic_space, inequality_certificate, limiting_normal_cone,
                    normals_of_intersection, project, sequential_ep, sip_certificate,
                    stochastic_certificate, strict_min_alternative, tolerances)

pytestmark = pytest.mark.acceptance

ORIGIN = np.zeros(2)
PROBLEMS = Path(__file__).resolve().parents[1] / "demos" / "problems"


def sip_line(t):
    return np.array([-1.0, t - 0.5])


def zero_rhs(t):
    return 0.0


def sip_system(N):
    space = discretize_interval(0.0, 1.0, N)
    vals = {a: sv(([sip_line(t)], [0.0])) for a, t in zip(space.atoms, space.nodes)}
    return SampledMultifunction(space, vals)


def test_criterion_01_extremal_witnesses():
    t0 = time.perf_counter()
    F = mf([sv(DOWN), sv(UP)])
    sched = PerturbationSchedule.harmonic(F.space, {1: [0, 1], 2: [0, 0]}, range(1, 21))
    wits = sequential_ep(F, ORIGIN, 1.0, sched)
    worst = dict(balance=0.0, q_norm_error=0.0, membership=0.0, closed_form=0.0)
    slack = np.inf
    for (k, term), wit in zip(sched, wits):
        chk = check_witness(F, ORIGIN, term, wit)
        for key in ("balance", "q_norm_error", "membership"):
            worst[key] = max(worst[key], chk[key])
        slack = min(slack, chk["estimate_slack"])
        err = max(np.abs(wit.xstar[1] - [0, 1]).max(), np.abs(wit.xstar[2] - [0, -1]).max())
        worst["closed_form"] = max(worst["closed_form"], err)
    dt = time.perf_counter() - t0
    ok = all(v <= 1e-6 for v in worst.values()) and slack >= 0 and dt < 5
    record(1, ok, f"k=1..20 worst={max(worst.values()):.1e} estimate_slack={slack:.1e} "
                  f"t={dt:.2f}s")
    assert ok


def test_criterion_02_conic_dyadic():
    t0 = time.perf_counter()
    worst, halvings, member = 0.0, 0, True
    for M in (3, 5, 8):
        space = dyadic_space(M)
        F = SampledMultifunction(space, {m: sv(UP if m == 1 else DOWN) for m in space.atoms})
        shift = {m: np.array([0.0, -1.0]) if m == 1 else ORIGIN for m in space.atoms}
        wit = conic_ep(F, shift)
        halvings = max(halvings, wit.extras["halvings"])
        worst = max(worst, np.linalg.norm(wit.balance), abs(wit.q_norm - 1))
        member &= all(limiting_normal_cone(F[a], ORIGIN).contains(wit.xstar[a])
                      for a in F.atoms)
    dt = time.perf_counter() - t0
    ok = halvings <= 40 and worst <= 1e-6 and member and dt < 10
    record(2, ok, f"M=3,5,8 halvings<={halvings} residual={worst:.1e} member={member} "
                  f"t={dt:.2f}s")
    assert ok


def test_criterion_03_normal_inclusion_corpus():
    t0 = time.perf_counter()
    corpus = cone_corpus()
    missing, unequal, convex_count = 0, 0, 0
    for F, convex in corpus:
        with tolerances(feas=1e-8):
            res = normals_of_intersection(F, np.zeros(F.dim))
            missing += sum(not res.integral.contains(g) for g in res.direct.all_generators())
        if convex:
            convex_count += 1
            unequal += sum(not res.direct.contains(g) for g in res.cone.all_generators())
    dt = time.perf_counter() - t0
    ok = len(corpus) >= 20 and missing == 0 and unequal == 0 and dt < 30
    record(3, ok, f"families={len(corpus)} convex={convex_count} missing={missing} "
                  f"reverse_missing={unequal} t={dt:.2f}s")
    assert ok


def test_criterion_04_chip():
    t0 = time.perf_counter()
    cone_fixtures = [F for F, _ in cone_corpus()] + [mf([sv(DOWN), sv(UP)])]
    cone_ok = all(check_chip(F, np.zeros(F.dim)).holds for F in cone_fixtures)
    sip_ok = all(check_chip(sip_system(N), ORIGIN).holds for N in (5, 11, 21))
    adversarial = [
        (mf([sv(([[1, 0]], [0]), ([[0, 1]], [0])), sv(([[-1, -1]], [1]))]), [-0.5, 0.0]),
        (mf([sv(([[1, -1]], [0]), ([[-1, -1]], [0])), sv(([[0, 1]], [0]))]), [0.0, 0.0]),
        (mf([sv(([[0, 1], [0, -1]], [0, 0]), ([[1, 0], [-1, 0]], [0, 0])),
             sv(([[1, 1]], [1]))]), [1.0, 0.0]),
        (mf([sv(([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0]),
                ([[1, 0], [-1, 0], [0, 1], [0, -1]], [0, 1, 0, 1])),
             sv(([[1, -1]], [0]))]), [0.0, 0.0]),
    ]
    lhs_ok = all(check_chip(F, np.zeros(F.dim)).lhs_in_rhs for F in cone_fixtures)
    lhs_ok &= all(check_chip(F, np.array(x, float)).lhs_in_rhs for F, x in adversarial)
    dt = time.perf_counter() - t0
    ok = cone_ok and sip_ok and lhs_ok and dt < 10
    record(4, ok, f"cone_fixtures={cone_ok} sip_N=5,11,21={sip_ok} lhs_in_rhs={lhs_ok} "
                  f"t={dt:.2f}s")
    assert ok


def common_interior_fixtures():
    rng = np.random.default_rng(7)
    out = [(mf([sv(([[1, 0]], [1])), sv(([[0, 1]], [1]))]), np.array([1.0, 1.0])),
           (mf([sv(([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])), sv(([[1, 1]], [1])),
                sv(([[-1, 0]], [0]))]), np.array([0.0, 1.0]))]
    for _ in range(6):
        # half-spaces through x with 0 strictly inside every value
        x = rng.normal(size=2)
        A = rng.normal(size=(3, 2))
        A *= np.sign(A @ x)[:, None]
        out.append((mf([sv(([a], [a @ x])) for a in A]), x))
    return out


def test_criterion_05_qualification():
    t0 = time.perf_counter()
    opp = mf([sv(([[0, 1]], [0])), sv(([[0, -1]], [0]))])
    rep = check_normal_qualification(opp, ORIGIN)
    vio = check_violator(opp, ORIGIN, rep.violator) if rep.violator else None
    fail_ok = (not rep.holds and vio is not None and vio["member"]
               and vio["balance"] <= 1e-9 and vio["max_norm"] > 0.5)
    indep_ok = check_normal_qualification(mf([sv(([[0, 1]], [0])), sv(([[1, 0]], [0]))]),
                                          ORIGIN).holds
    agree = True
    fixtures = common_interior_fixtures()
    for F, x in fixtures:
        for kind in ("limiting", "regular"):
            a = check_normal_qualification(F, x, kind, precheck=True)
            b = check_normal_qualification(F, x, kind, precheck=False)
            agree &= a.holds and b.holds and a.path == "slack-lp" and b.path == "search"
    dt = time.perf_counter() - t0
    ok = fail_ok and indep_ok and agree and dt < 10
    record(5, ok, f"violator={fail_ok} independent={indep_ok} "
                  f"common_interior({len(fixtures)})={agree} t={dt:.2f}s")
    assert ok


def test_criterion_06_stochastic_certificates():
    t0 = time.perf_counter()
    space = AtomicMeasureSpace((1, 2), [0.5, 0.5])
    F = mf([sv(([[1, 1]], [0])), sv(([[1, -1]], [0]))])
    f = {1: Objective.affine([1.0, 1.0]), 2: Objective.affine([1.0, -1.0])}
    good = Objective.affine([-1.0, 0.0])
    bad = Objective.affine([0.0, -1.0])
    certs = [stochastic_certificate(good, F, ORIGIN), inequality_certificate(f, good, space,
                                                                             ORIGIN)]
    lam_err = max(abs(c.multipliers[a][0][0] - 1.0) for c in certs for a in (1, 2))
    certified = all(c.certified for c in certs)
    refusals = [stochastic_certificate(bad, F, ORIGIN), inequality_certificate(f, bad, space,
                                                                               ORIGIN)]
    refused = all(not c.certified and c.stationarity_residual >= 0.5 for c in refusals)
    rng = np.random.default_rng(11)
    gap = 0.0
    for _ in range(20):
        C = rng.normal(size=(3, 2))
        w = rng.uniform(0.2, 1.0, 3)
        sp = AtomicMeasureSpace((1, 2, 3), w)
        G = SampledMultifunction(sp, {i + 1: sv(([C[i]], [0.0])) for i in range(3)})
        h = Objective.affine(rng.normal(size=2))
        a = stochastic_certificate(h, G, ORIGIN)
        b = inequality_certificate({i + 1: Objective.affine(C[i]) for i in range(3)}, h, sp,
                                   ORIGIN)
        gap = max(gap, abs(a.stationarity_residual - b.stationarity_residual))
    dt = time.perf_counter() - t0
    ok = certified and lam_err <= 1e-6 and refused and gap <= 1e-8 and dt < 5
    record(6, ok, f"certified={certified} lambda_err={lam_err:.1e} refused={refused} "
                  f"residual_gap={gap:.1e} t={dt:.2f}s")
    assert ok


def test_criterion_07_sip_certificates():
    t0 = time.perf_counter()
    h = Objective.affine([1.0, 0.0])
    res, lam_err = [], 0.0
    for N in (11, 21, 41):
        cert = sip_certificate(sip_line, zero_rhs, h, (0.0, 1.0), N)
        res.append(cert.stationarity_residual)
        lam_err = max(lam_err, float(np.abs(cert.density - 1.0).max()))
    monotone = all(b <= a + 1e-14 for a, b in zip(res, res[1:]))
    part1 = lam_err <= 1e-6 and max(res) <= 1e-10 and monotone
    variant = sip_certificate(sip_line, zero_rhs, Objective.affine([0.0, 1.0]), (0.0, 1.0), 11)
    part2 = not variant.certified and variant.stationarity_residual >= 1 - 1e-6
    dt = time.perf_counter() - t0
    ok = part1 and part2 and dt < 5
    record(7, ok, f"unit_density={part1} (err={lam_err:.1e}, max_res={max(res):.1e}) "
                  f"variant_refused={not variant.certified} "
                  f"variant_residual={variant.stationarity_residual:.6f} (needs >= 0.999999) "
                  f"t={dt:.2f}s")
    assert ok


def test_criterion_08_strict_minimizer():
    t0 = time.perf_counter()
    r1 = strict_min_alternative(Objective.affine([0.0, 1.0]), mf([sv(UP)]), ORIGIN, 1.0,
                                ks=(1, 2, 3))
    part1 = r1.branch == "i" and r1.stationarity_residual <= 1e-6
    r2 = strict_min_alternative(Objective.affine([0.0, 0.0]), mf([sv(DOWN), sv(UP)]),
                                ORIGIN, 1.0)
    part2 = r2.branch == "ii"
    try:
        strict_min_alternative(Objective.affine([0.0, 0.0]), mf([sv(([[0, 1]], [0]))]),
                               ORIGIN, 1.0)
        part3 = False
    except NonoverlapFailed:
        part3 = True
    dt = time.perf_counter() - t0
    ok = part1 and part2 and part3 and dt < 10
    record(8, ok, f"cone_branch_i={part1} (res={r1.stationarity_residual:.1e}) "
                  f"zero_objective_branch={r2.branch} (expected ii, alpha*={r2.alpha_star:.4f}) "
                  f"nonstrict_raises={part3} t={dt:.2f}s")
    assert ok


def test_criterion_09_geometry_oracles():
    t0 = time.perf_counter()
    bad, checked = 0, 0
    for _, pieces, pts in GEOM_FIXTURES:
        S = sv(*pieces)
        for x in pts:
            out = geometry_disagreements(S, x)
            bad += out["tangent"] + out["regular"] + out["limiting"]
            bad += out["generator_margin"] > 0.02
            checked += 1
    # projections against a grid oracle and the KKT characterization
    A = np.array([[-1.0, 0], [0, -1], [1, 1]])
    b = np.array([0.0, 0, 1])
    S = sv((A, b))
    rng = np.random.default_rng(5)
    proj_bad = 0
    for z in rng.uniform(-1.5, 2.5, size=(12, 2)):
        y = project(Polyhedron(A, b), z)
        _, dg = O.grid_project(raw(S), z, -0.5, 1.5, h=2e-3)
        proj_bad += not O.kkt_projection_ok(A, b, z, y)
        proj_bad += not (dg - 2e-3 <= distance(S, z) <= dg + 1e-12)
    dt = time.perf_counter() - t0
    ok = bad == 0 and proj_bad == 0 and dt < 60
    record(9, ok, f"points={checked} cone_disagreements={bad} projection_disagreements="
                  f"{proj_bad} t={dt:.2f}s")
    assert ok


DETERMINISM_CASES = [
    ("normal-cone", "union_corner"), ("tangent-cone", "triangle"), ("aumann", "two_cones"),
    ("extremal-check", "two_cones"), ("ep-solve", "two_cones"), ("conic-ep", "dyadic_cones"),
    ("chip-check", "sip_linear"), ("nqc-check", "opposite_halfplanes"),
    ("certify-stochastic", "stochastic_certified"),
    ("certify-inequality", "stochastic_certified"), ("certify-sip", "sip_linear"),
    ("strict-min", "strict_min_cone"), ("strict-min", "nonstrict_halfplane"),
    ("normal-cone", "malformed_row"),
]


def test_criterion_10_determinism():
    t0 = time.perf_counter()
    env = dict(os.environ, ESSINT_NO_PARALLEL="1")
    differ = []
    for command, name in DETERMINISM_CASES:
        outs = [subprocess.run([sys.executable, "-m", "essint", command,
                                str(PROBLEMS / f"{name}.json")],
                               capture_output=True, env=env, check=False) for _ in range(2)]
        if outs[0].stdout != outs[1].stdout or not outs[0].stdout:
            differ.append(f"{command}:{name}")
    dt = time.perf_counter() - t0
    ok = not differ
    record(10, ok, f"runs={len(DETERMINISM_CASES)}x2 differing={differ or 'none'} t={dt:.2f}s")
    assert ok
