import math

import numpy as np
import pytest
from scipy import integrate, stats

from clwe_hardness.samplers import (
    CLWEParams,
    HCLWESpec,
    ParameterError,
    RejectionConfig,
    acceptance_rate,
    clwe_density,
    default_alpha,
    default_delta,
    hclwe_density,
    hclwe_normalizer,
    hclwe_unnormalized_1d,
    mod1,
    null_acceptance_rate,
    projection_cdf,
    projection_density,
    reduction_output_spec,
    sample_clwe,
    sample_hclwe_direct,
    sample_hclwe_via_reduction,
    sample_nhclwe,
    sample_secret_direction,
)

# mpmath, 50 digits: delta rho_{S'}(Z) / (S' M) at gamma=8, beta=0.01, delta=sqrt(3) beta
ACCEPT_DESK = 0.017320508075688772935


def params(n=1, gamma=8.0, beta=0.01, seed=0):
    w = np.array([1.0]) if n == 1 else sample_secret_direction(n, np.random.default_rng(seed))
    return CLWEParams(n, gamma, beta, w)


def test_params_validation():
    with pytest.raises(ParameterError):
        CLWEParams(2, 1.0, 2.0, np.array([1.0, 0.0]))
    with pytest.raises(ParameterError):
        CLWEParams(2, 8.0, 0.1, np.array([1.0, 1.0]))
    with pytest.raises(ParameterError):
        CLWEParams(3, 8.0, 0.1, np.array([1.0, 0.0]))
    p = params(4)
    assert not p.w.flags.writeable


def test_hardness_regime_defaults():
    p = CLWEParams.hardness_regime(16, np.random.default_rng(0))
    assert p.gamma == 8.0 and p.beta == 1 / 16
    with pytest.raises(ParameterError):
        CLWEParams.hardness_regime(16, np.random.default_rng(0), gamma=7.0)


def test_mod1_edge():
    assert mod1(-1e-20) == 0.0
    assert mod1(2.25) == 0.25


def test_spec_validation():
    p = params()
    with pytest.raises(ParameterError):
        HCLWESpec(p, 1.0, 0.02)
    with pytest.raises(ParameterError):
        HCLWESpec(p, 0.0, 0.02, form="bogus")
    with pytest.raises(ParameterError):
        HCLWESpec(p, 0.0, 0.02, alpha=-1.0)


def test_centers_both_forms():
    p = params()
    closed = HCLWESpec(p, 0.5, 0.02)
    cond = HCLWESpec(p, 0.5, 0.02, form="conditional")
    g = 8 / (64 + 0.0004)
    assert closed.centers(3) == pytest.approx(3 * g - 1 / 16)
    assert cond.centers(3) == pytest.approx(2.5 * g)
    a = HCLWESpec(p, 0.0, 0.02)
    b = HCLWESpec(p, 0.0, 0.02, form="conditional")
    t = np.linspace(-1, 1, 2001)
    assert np.array_equal(projection_density(a, t), projection_density(b, t))


def test_default_alpha_value():
    assert default_alpha(8.0, 0.02) == pytest.approx(0.8 / 64.0004)


@pytest.mark.parametrize("c", [0.0, 0.3, 0.5])
def test_normaliser_matches_integral(c):
    spec = HCLWESpec(params(gamma=2.0, beta=0.2), c, 0.4, form="conditional")
    val, _ = integrate.quad(lambda t: hclwe_unnormalized_1d(spec, t), -6, 6, limit=400, epsabs=1e-13)
    assert val == pytest.approx(hclwe_normalizer(spec), rel=1e-9)


@pytest.mark.parametrize("c", [0.0, 0.25, 0.5])
def test_conditional_form_is_clwe_given_z(c):
    """The conditional form is proportional to the CLWE joint density at z = -c mod 1."""
    p = params(gamma=2.0, beta=0.3)
    spec = HCLWESpec(p, c, p.beta, form="conditional")
    y = np.linspace(-1.2, 1.2, 301)
    joint = clwe_density(p, y[:, None], np.full(y.size, mod1(-c)))
    ratio = projection_density(spec, y) / joint
    assert ratio == pytest.approx(np.full_like(ratio, ratio[150]), rel=1e-10)


def test_closed_form_differs_from_conditional_at_half():
    p = params(gamma=2.0, beta=0.3)
    spec = HCLWESpec(p, 0.5, p.beta)
    y = np.linspace(-1.2, 1.2, 301)
    ratio = projection_density(spec, y) / clwe_density(p, y[:, None], np.full(y.size, 0.5))
    assert np.ptp(ratio) / ratio.mean() > 1e-3


def test_hclwe_density_n_dim_factorises():
    p = params(n=3, gamma=4.0, beta=0.05)
    spec = HCLWESpec(p, 0.0, 0.1)
    x = np.random.default_rng(0).standard_normal((5, 3)) * 0.3
    t = x @ p.w
    perp = x - np.outer(t, p.w)
    expect = projection_density(spec, t) * np.exp(-math.pi * np.sum(perp ** 2, axis=1))
    assert hclwe_density(spec, x) == pytest.approx(expect)


def test_nhclwe_supports_are_truncated():
    p = params(n=4, gamma=8.0, beta=0.01)
    spec = HCLWESpec(p, 0.5, 0.02).with_default_alpha()
    x = sample_nhclwe(spec, np.random.default_rng(1), 50_000)
    t = x @ p.w
    k = np.rint((t - spec.centers(0)) / spec.spacing)
    assert np.all(np.abs(t - spec.centers(k)) <= spec.alpha)
    with pytest.raises(ParameterError):
        sample_hclwe_direct(spec, np.random.default_rng(0), 10)
    with pytest.raises(ParameterError):
        sample_nhclwe(spec.untruncated(), np.random.default_rng(0), 10)


def test_orthogonal_part_is_standard():
    p = params(n=5, gamma=8.0, beta=0.01)
    spec = HCLWESpec(p, 0.0, 0.02)
    x = sample_hclwe_direct(spec, np.random.default_rng(2), 100_000)
    perp = x - np.outer(x @ p.w, p.w)
    # any unit vector orthogonal to w sees N(0, 1/(2 pi)); KS at 1e-3
    u = np.linalg.svd(np.eye(5) - np.outer(p.w, p.w))[0][:, 0]
    assert stats.kstest(perp @ u, "norm", args=(0, 1 / math.sqrt(2 * math.pi))).pvalue > 1e-3


def test_projection_cdf_matches_density():
    spec = HCLWESpec(params(gamma=2.0, beta=0.25), 0.5, 0.5).with_default_alpha()
    a, b = -0.3, 0.4
    val, _ = integrate.quad(lambda t: projection_density(spec, t), a, b, points=list(spec.centers(np.arange(-3, 4))),
                            limit=400, epsabs=1e-13)
    assert projection_cdf(spec, b) - projection_cdf(spec, a) == pytest.approx(val, abs=1e-9)


def test_rejection_config_checks():
    cfg = RejectionConfig.build(0.3, 0.2)
    assert cfg.M < 4
    z = np.linspace(0, 1, 1001)
    assert np.all(cfg.g(z) <= 1 + 1e-12)
    with pytest.raises(ParameterError):
        RejectionConfig.build(1.5)
    with pytest.raises(ParameterError):
        RejectionConfig.build(0.3, c=1.0)


def test_acceptance_rate_against_mpmath():
    p = params(n=1, gamma=8.0, beta=0.01)
    cfg = RejectionConfig.build(default_delta(p.beta), 0.0)
    assert acceptance_rate(p, cfg) == pytest.approx(ACCEPT_DESK, rel=1e-12)
    assert null_acceptance_rate(cfg) == pytest.approx(cfg.delta / cfg.M)
    assert reduction_output_spec(p, cfg).out_beta == pytest.approx(2 * p.beta)


def test_reduction_at_half_matches_conditional_form():
    """At c = 1/2 the reduction output follows the conditional law, not the closed form."""
    p = params(n=1, gamma=2.0, beta=0.1)
    cfg = RejectionConfig.build(default_delta(p.beta), 0.5)
    rng = np.random.default_rng(7)
    y = sample_hclwe_via_reduction(p, cfg, rng, 100_000)[:, 0]
    cond = reduction_output_spec(p, cfg)
    closed = HCLWESpec(p, 0.5, cond.out_beta)
    edges = np.linspace(-1.5, 1.5, 61)
    obs = np.histogram(y, np.concatenate([[-np.inf], edges, [np.inf]]))[0]

    def expected(spec):
        c = projection_cdf(spec, edges)
        return np.diff(np.concatenate([[0.0], c, [1.0]])) * y.size

    p_cond = stats.chisquare(obs, expected(cond)).pvalue
    p_closed = stats.chisquare(obs, expected(closed)).pvalue
    assert p_cond > 1e-3
    assert p_closed < 1e-10


def test_clwe_sampler_marginals():
    p = params(n=3, gamma=4.0, beta=0.05)
    s = sample_clwe(p, np.random.default_rng(3), 100_000)
    assert np.all((s.z >= 0) & (s.z < 1))
    # gamma large enough that z is close to uniform
    assert stats.kstest(s.z, "uniform").pvalue > 1e-3
