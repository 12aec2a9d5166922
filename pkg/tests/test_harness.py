import math

import numpy as np
import pytest
from scipy import stats

from clwe_hardness.harness import (
    DistinguisherConfig,
    QuadratureError,
    advantage_from_counts,
    advantage_report,
    coin_flip_distinguisher,
    empirical_error,
    hoeffding_distinguisher,
    hoeffding_failure_bound,
    oracle_distinguisher,
    tvd_1d_numeric,
    tvd_default_alpha_bound,
    tvd_hclwe_truncation,
    tvd_truncation_bound,
)
from clwe_hardness.instance import desk_params, generate_mixture, generate_null
from clwe_hardness.learners import FixedHypothesis, LearnerSpec, train_baseline
from clwe_hardness.oracle import classify, oracle_for

# mpmath: 8 exp(-1/(400 * 0.02^2))
TVD_DEFAULT_BOUND = 0.015443633089821673938


def test_empirical_error_basics():
    y = np.array([1, -1, 1, -1], dtype=np.int8)
    X = np.zeros((4, 2))
    assert empirical_error(lambda X: y, X, y).value == 0
    est = empirical_error(lambda X: np.ones(4, dtype=np.int8), X, y)
    assert est.mismatches == 2 and est.value == 0.5
    with pytest.raises(ValueError):
        empirical_error(lambda X: y, np.zeros((0, 2)), np.zeros(0))


def test_empirical_error_exchangeable():
    ds = generate_null(4, 1000, 1)
    h = lambda X: np.where(X[:, 0] >= 0, 1, -1)
    perm = np.random.default_rng(0).permutation(1000)
    assert empirical_error(h, ds).mismatches == empirical_error(h, ds.x[perm], ds.y[perm]).mismatches


def test_perceptron_separable():
    rng = np.random.default_rng(0)
    y = np.where(rng.random(2000) < 0.5, 1, -1).astype(np.int8)
    X = rng.standard_normal((2000, 4)) * 0.3
    X[:, 0] += 3 * y
    h = train_baseline(LearnerSpec("perceptron"), X[:1000], y[:1000])
    assert empirical_error(h, X[1000:], y[1000:]).value <= 0.01


@pytest.mark.parametrize("kind", ["perceptron", "averaged_perceptron", "logistic_gd", "poly_kernel_perceptron"])
def test_learners_have_no_edge_on_null(kind):
    ds = generate_null(8, 40_000, 2)
    h = train_baseline(LearnerSpec(kind), ds.x[:20_000], ds.y[:20_000])
    err = empirical_error(h, ds.x[20_000:], ds.y[20_000:]).value
    assert 0.48 <= err <= 0.52


def test_learner_determinism_and_validation():
    ds = generate_null(3, 500, 3)
    a = train_baseline(LearnerSpec(seed=4), ds)
    b = train_baseline(LearnerSpec(seed=4), ds)
    assert np.array_equal(a.w, b.w)
    with pytest.raises(ValueError):
        LearnerSpec("svm")
    with pytest.raises(ValueError):
        train_baseline(LearnerSpec(), np.zeros((0, 3)), np.zeros(0))


def test_hoeffding_bound_values():
    assert hoeffding_failure_bound(50_000, 0.1) == pytest.approx(2 * math.exp(-2 * 50_000 * 0.01 / 9))
    assert hoeffding_failure_bound(1, 0.1) == 1.0


def test_distinguisher_verdicts():
    p = desk_params()
    o = oracle_for(p, 8)
    cfg = DistinguisherConfig(0.1, 0.5, FixedHypothesis(lambda X: classify(o, X)))
    planted = hoeffding_distinguisher(cfg, generate_mixture(p, 20_000, 1))
    null = hoeffding_distinguisher(cfg, generate_null(16, 20_000, 2))
    assert planted.verdict == "planted" and planted.powered and planted.warning is None
    assert null.verdict == "null"
    assert planted.m_test == 10_000
    assert planted.failure_bound > planted.stated_bound
    assert oracle_distinguisher(o)(generate_mixture(p, 2000, 3)) == "planted"


def test_underpowered_warning():
    cfg = DistinguisherConfig(0.1)
    res = hoeffding_distinguisher(cfg, generate_null(4, 100, 0))
    assert not res.powered and "underpowered" in res.warning


def test_config_validation():
    with pytest.raises(ValueError):
        DistinguisherConfig(tau=0.0)
    with pytest.raises(ValueError):
        DistinguisherConfig(split=1.0)
    with pytest.raises(ValueError):
        hoeffding_distinguisher(DistinguisherConfig(), generate_null(2, 1, 0))


def test_tvd_identical_and_disjoint():
    norm = stats.norm
    same = tvd_1d_numeric(norm.pdf, norm.pdf, [-10, 0, 10])
    assert same.value == pytest.approx(0.0, abs=1e-10)
    u1 = lambda t: 1.0 if 0 <= t <= 1 else 0.0
    u2 = lambda t: 1.0 if 2 <= t <= 3 else 0.0
    assert tvd_1d_numeric(u1, u2, [0, 1, 2, 3]).value == pytest.approx(1.0, abs=1e-10)
    shifted = tvd_1d_numeric(norm.pdf, lambda t: norm.pdf(t - 1), np.linspace(-12, 13, 6))
    assert shifted.value == pytest.approx(2 * norm.cdf(0.5) - 1, abs=1e-9)


def test_quadrature_failure_is_reported():
    with pytest.raises(QuadratureError) as exc:
        tvd_1d_numeric(lambda t: 1 / abs(t) ** 0.999, lambda t: 0.0, [0.0, 1.0], limit=5)
    assert "piece" in exc.value.diagnostics
    with pytest.raises(ValueError):
        tvd_1d_numeric(stats.norm.pdf, stats.norm.pdf, [0.0])


def test_truncation_tvd_under_bound():
    spec = desk_params().spec_minus
    res = tvd_hclwe_truncation(spec)
    assert res.value <= tvd_truncation_bound(spec) <= tvd_default_alpha_bound(0.02)
    assert tvd_default_alpha_bound(0.02) == pytest.approx(TVD_DEFAULT_BOUND, rel=1e-14)


def test_coin_flip_advantage():
    rep = advantage_report(coin_flip_distinguisher(1), 400, 0, lambda s: None, lambda s: None)
    assert rep.interval[0] == 0.0
    assert rep.advantage <= rep.interval[1]
    with pytest.raises(ValueError):
        advantage_report(coin_flip_distinguisher(1), 10, 0, lambda s: None, lambda s: None)


def test_advantage_from_counts():
    rep = advantage_from_counts(100, 0, 100, tvd_per_sample=1e-6, samples_per_dataset=1000)
    assert rep.advantage == 1.0 and rep.interval[0] > 0.9
    assert rep.tvd_dataset_bound == pytest.approx(1e-3)
    assert set(rep.to_dict()) >= {"advantage", "interval", "tvd_dataset_bound"}
