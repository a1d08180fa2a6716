"""Assumption certification: routes, verdicts, and negative controls."""

import math

import numpy as np
import pytest

import obsdriven as od
from obsdriven.verify import domain_compatible

from conftest import divergent_model, poisson_ingarch_x

CM = od.ConstantMap


# ---------------------------------------------------------------------------
# a1
# ---------------------------------------------------------------------------

def test_a1_constant_contraction_passes():
    m = od.ModelSpec(od.Poisson(),
                     od.LinearLink(CM(0.4, True), CM(0.3, True), CM(1.0, True), 1, 0.0),
                     od.Constant((1.0,)))
    rep = od.check_a1(m, 1000, 1)
    assert rep.moment.mean == pytest.approx(math.log(0.4))
    assert rep.moment.verdict == "negative"
    assert rep.lipschitz_pass and rep.verdict == "pass"


def test_a1_threshold_uses_regime_maximum():
    link = od.ThresholdLink(
        od.RegimeCoefficients(CM(0.2), CM(0.1, True), CM(1.0, True)),
        od.RegimeCoefficients(CM(0.5), CM(0.1, True), CM(1.0, True)),
        od.FixedInterval(0.0, 1.0), order=1, floor=0.0,
    )
    m = od.ModelSpec(od.Poisson(), link, od.Constant((1.0,)))
    rep = od.check_a1(m, 1000, 2)
    assert rep.moment.mean == pytest.approx(math.log(0.5))
    assert rep.verdict == "pass"


def test_a1_boundary_contraction_is_inconclusive():
    # kappa(x) = exp(x) with X ~ N(0,1): E log kappa = 0 exactly
    link = od.LinearLink(od.ExpAffineMap(0.0, (1.0,)), CM(0.0), CM(0.0), 1)
    m = od.ModelSpec(od.BernoulliLogit(), link, od.IID(od.Gaussian(0, 1)))
    rep = od.check_a1(m, 10**4, 3)
    assert rep.verdict == "inconclusive"


def test_a1_expanding_map_fails():
    rep = od.check_a1(divergent_model(), 1000, 4)
    assert rep.moment.verdict == "nonnegative"
    assert rep.verdict == "fail"


# ---------------------------------------------------------------------------
# a2
# ---------------------------------------------------------------------------

def test_a2_poisson_linear_route():
    m = poisson_ingarch_x()
    rep = od.check_a2(m, 2000, 5)
    assert rep.case == "linear"
    assert rep.drift_constant_D == 0.0
    # gamma = 0.4 + 0.3|x|, E log gamma < 0
    assert rep.gamma_estimate.verdict == "negative"
    assert rep.verdict == "pass"


def test_a2_garch_threshold_case2_conditions():
    # pass iff E log kappa < 0 and E log(|kappa_2| + |kt_2|) < 0
    def build(k2, kt2):
        link = od.ThresholdLink(
            od.RegimeCoefficients(CM(0.4, True), CM(5.0, True), CM(1.5, True)),
            od.RegimeCoefficients(CM(k2, True), CM(kt2, True), CM(1.5, True)),
            od.FixedInterval(-1.0, 1.0), order=2, floor=1.0,
        )
        return od.ModelSpec(od.GarchGaussian(1.0), link, od.Constant((1.0,)))

    good = od.check_a2(build(0.4, 0.5), 1000, 6)
    assert good.case == "pratique2-case2"
    assert good.case2_kappa_estimate.mean == pytest.approx(math.log(0.4))
    assert good.case2_regime2_estimate.mean == pytest.approx(math.log(0.9))
    assert good.verdict == "pass"
    bad = od.check_a2(build(0.4, 0.7), 1000, 6)  # log(1.1) > 0
    assert bad.verdict == "fail"


def test_a2_binary_route_allows_unbounded_interaction():
    # kappa = 0.9 with an unbounded covariate interaction in the y-term:
    # the binary route only needs A1 plus log+ moments at a reference state
    link = od.LinearLink(CM(0.9), od.AffineAbsMap(0.0, (1.0,), True), CM(0.1), 1)
    m = od.ModelSpec(od.BernoulliLogit(), link, od.IID(od.Gaussian(0, 1)))
    rep = od.check_a2(m, 2000, 7)
    assert rep.case == "binary"
    assert rep.verdict == "pass"
    assert set(rep.category_log_plus) == {"0", "1"}


def test_a2_categorical_route():
    table = od.CategoryTable(((0.2, -0.1, 0.4), (0.0, 0.3, -0.2)))
    link = od.LinearLink(CM(0.7, True), table, CM(0.0), 1)
    m = od.ModelSpec(od.Multinomial(3), link, od.IID(od.Uniform(0, 1)))
    rep = od.check_a2(m, 1000, 8)
    assert rep.case == "categorical"
    assert rep.verdict == "pass"


def test_a2_garch_without_floor_is_a_structural_failure():
    link = od.ThresholdLink(
        od.RegimeCoefficients(CM(0.4, True), CM(0.2, True), CM(0.1, True)),
        od.RegimeCoefficients(CM(0.4, True), CM(0.2, True), CM(0.1, True)),
        od.FixedInterval(-1.0, 1.0), order=2, floor=None,
    )
    m = od.ModelSpec(od.GarchGaussian(1.0), link, od.Constant((1.0,)))
    ok, reason = domain_compatible(m)
    assert not ok
    rep = od.check_a2(m, 1000, 9)
    assert not rep.domain_ok and rep.verdict == "fail"


def test_a2_structural_positivity_without_clamp():
    # garch with constant intercepts >= c_minus needs no clamp
    link = od.ThresholdLink(
        od.RegimeCoefficients(CM(0.4, True), CM(0.2, True), CM(1.5, True)),
        od.RegimeCoefficients(CM(0.4, True), CM(0.3, True), CM(2.0, True)),
        od.FixedInterval(-1.0, 1.0), order=2, floor=None,
    )
    m = od.ModelSpec(od.GarchGaussian(1.0), link, od.Constant((1.0,)))
    ok, reason = domain_compatible(m)
    assert ok and "structural" in reason


# ---------------------------------------------------------------------------
# a3
# ---------------------------------------------------------------------------

def test_a3_poisson_grid_passes():
    m = poisson_ingarch_x()
    rep = od.check_a3(m, grid_size=200, tol=1e-6)
    assert rep.verdict == "pass"
    assert rep.max_violation <= 1e-6
    assert rep.n_pairs == 200


def test_a3_multinomial_uses_sup_norm():
    table = od.CategoryTable(((0.2, 0.1, 0.0), (0.0, 0.1, 0.2)))
    link = od.LinearLink(CM(0.5, True), table, CM(0.0), 1)
    m = od.ModelSpec(od.Multinomial(3), link, od.Constant((1.0,)))
    assert m.norm == "inf"
    rep = od.check_a3(m, grid_size=100, tol=1e-6)
    assert rep.verdict == "pass"


def test_a3_corrupted_phi_fails_with_positive_violation():
    # halving the probit coefficients must produce a detected violation
    link = od.LinearLink(CM(0.5), CM(0.3, True), CM(0.0), 1)
    m = od.ModelSpec(od.BernoulliProbit(), link, od.Constant((1.0,)))
    honest = od.check_a3(m, grid_size=100, tol=1e-6)
    assert honest.verdict == "pass"
    corrupted = m.kernel.phi().scaled(0.5)
    rep = od.check_a3(m, grid_size=100, tol=1e-6, phi_override=corrupted)
    assert rep.verdict == "fail"
    assert rep.max_violation > 0.01


def test_a3_verdict_monotone_in_tol():
    m = poisson_ingarch_x()
    r1 = od.check_a3(m, 60, tol=1e-9)
    r2 = od.check_a3(m, 60, tol=1e-3)
    assert r1.max_violation == r2.max_violation
    if r1.verdict == "pass":
        assert r2.verdict == "pass"


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------

def test_full_report_benchmark_passes():
    rep = od.full_report(poisson_ingarch_x(), od.VerifyConfig(mc_n=2000, grid_size=60, seed=11))
    assert rep.overall == "pass"
    d = rep.to_dict()
    assert d["schema"].startswith("obsdriven.verification/")
    assert d["a1"]["verdict"] == d["a2"]["verdict"] == d["a3"]["verdict"] == "pass"


def test_full_report_divergent_fails_on_a1():
    rep = od.full_report(divergent_model(), od.VerifyConfig(mc_n=2000, grid_size=60, seed=12))
    assert rep.a1.verdict == "fail"
    assert rep.overall == "fail"


def test_full_report_deterministic():
    cfg = od.VerifyConfig(mc_n=1000, grid_size=60, seed=13)
    a = od.full_report(poisson_ingarch_x(), cfg)
    b = od.full_report(poisson_ingarch_x(), cfg)
    assert a.to_dict() == b.to_dict()
    assert a.to_json() == b.to_json()


def test_drift_certificate_benchmark_values():
    # gamma(x) = 0.4 + 0.3|x|; delta(x) = 1 + delta_tilde - gamma = 2 - gamma(x)
    gamma, delta = od.drift_certificate(poisson_ingarch_x())
    x = np.array([0.5])
    assert float(gamma.evaluate(x)) == pytest.approx(0.55)
    assert float(delta.evaluate(x)) == pytest.approx(2.0 - 0.55)


def test_soundness_matrix_report_vs_sampler():
    # a passing report predicts a converging sampler; a confirmed expanding
    # contraction predicts a NotConverged diagnostic
    from conftest import logit_benchmark

    cfg = od.VerifyConfig(mc_n=1000, grid_size=60, seed=17)
    matrix = [poisson_ingarch_x(), logit_benchmark()]
    for m in matrix:
        rep = od.full_report(m, cfg)
        assert rep.overall == "pass"
        res = od.stationary_sampler(m, 0.01, 400, 200, 18)
        assert res.converged and res.achieved_gap < 0.01
    bad = divergent_model()
    rep = od.full_report(bad, cfg)
    assert rep.a1.verdict == "fail" and rep.a1.moment.verdict == "nonnegative"
    res = od.stationary_sampler(bad, 0.01, 100, 200, 18)
    assert not res.converged
