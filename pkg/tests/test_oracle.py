import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from clwe_hardness.instance import CLWEParams, EmbeddingSpec, MixtureParams, desk_params, generate_mixture, generate_null
from clwe_hardness.oracle import (
    OraclePTF,
    Region,
    build_intervals,
    build_oracle,
    classify,
    conditional_error_class,
    distance_to_roots,
    load_oracle,
    ltf_sign,
    ltf_weights,
    monic_from_roots,
    oracle_error_bound,
    oracle_error_exact,
    oracle_for,
    poly_sign_exact,
    ptf_coefficients,
    region_of_projection,
    save_oracle,
    sign_from_roots,
)
from clwe_hardness.samplers import ParameterError

# mpmath (50 digits) tail sums at gamma = 8, out_beta = 0.02
ERR_D8_CLOSED = 0.0064462123490999547758
ERR_D8_CONDITIONAL = 0.0059194754998108318723
ERR_D4_CLOSED = 0.10691584816465271823
BOUND_D8 = 0.043214766770100188714
D1_CENTRE = -1.9531127930450434685e-7


@pytest.fixture(scope="module")
def desk():
    return desk_params()


def test_interval_family(desk):
    fam = build_intervals(desk)
    g = 8 / 64.0004
    i = fam.index(3)
    assert fam.mu_plus[i] == pytest.approx(3 * g)
    assert fam.mu_minus[i] == pytest.approx(3 * g - 1 / 16)
    assert fam.gap == pytest.approx(0.062499218754882781983, rel=1e-14)
    assert fam.gap > 2 * fam.alpha


def test_intervals_refuse_overlap():
    p = MixtureParams(CLWEParams(1, 8.0, 5.0, np.array([1.0])), 7.0)
    with pytest.raises(ParameterError):
        build_intervals(p)


def test_d1_roots(desk):
    o = oracle_for(desk, 1)
    assert o.roots.size == 4
    centre = o.roots.mean()
    assert centre == pytest.approx(D1_CENTRE, rel=1e-6)
    assert o.roots - centre == pytest.approx(-(o.roots[::-1] - centre), abs=1e-15)


def test_oracle_structure(desk):
    d = 8
    o = oracle_for(desk, d)
    assert o.degree == 4 * d and np.all(np.diff(o.roots) > 0)
    fam = build_intervals(desk, d + 1)
    for k in range(-d + 1, d + 1):
        mu = fam.mu_minus[fam.index(k)]
        assert classify(o, mu * o.w) == -1
        i = np.searchsorted(o.roots, mu)
        assert i % 2 == 1
    for k in range(-20, 21):
        assert classify(o, fam.mu_plus[fam.index(k)] * o.w) == 1
    assert classify(o, 100 * o.w) == 1
    assert classify(o, -100 * o.w) == 1
    assert sign_from_roots(o.roots, o.roots[3]) == 1


def test_build_oracle_validates(desk):
    with pytest.raises(ValueError):
        build_oracle(build_intervals(desk), 0)


def test_classify_matches_product_form(desk):
    o = oracle_for(desk, 8)
    t = np.random.default_rng(0).uniform(-1.2, 1.2, 10_000)
    t = t[distance_to_roots(o, t) >= 1e-9]
    mpmath.mp.dps = 60
    prod = [mpmath.fprod(mpmath.mpf(float(v)) - mpmath.mpf(float(r)) for r in o.roots) for v in t]
    expect = np.array([1 if p >= 0 else -1 for p in prod])
    assert np.array_equal(sign_from_roots(o.roots, t), expect)


def test_quadratic_coefficients():
    r1, r2 = 0.375, -1.25
    assert monic_from_roots([r1, r2]) == [Fraction(r1) * Fraction(r2), -(Fraction(r1) + Fraction(r2)), 1]


@pytest.mark.parametrize("d", [1, 3, 10])
def test_coefficient_sign_matches_root_count(desk, d):
    o = oracle_for(desk, d)
    coeffs = ptf_coefficients(o)
    assert len(coeffs) == 4 * d + 1 and coeffs[-1] == 1
    t = np.random.default_rng(d).uniform(o.roots[0] - 0.2, o.roots[-1] + 0.2, 10_000 if d < 10 else 3_000)
    t = t[distance_to_roots(o, t) >= 1e-6]
    assert np.array_equal(poly_sign_exact(coeffs, t), sign_from_roots(o.roots, t))


@pytest.mark.parametrize("d", [1, 3, 5])
def test_roots_recovered_from_coefficients(desk, d):
    o = oracle_for(desk, d)
    mpmath.mp.dps = 80
    coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(ptf_coefficients(o))]
    found = sorted(float(mpmath.re(r)) for r in mpmath.polyroots(coeffs, maxsteps=400, extraprec=400))
    assert np.max(np.abs(np.array(found) - o.roots)) <= 1e-8


def test_univariate_ltf_is_coefficients(desk):
    o = oracle_for(MixtureParams(CLWEParams(1, 8.0, 0.01, np.array([1.0])), 0.02), 2)
    spec = EmbeddingSpec(1, 8, M=12)
    lw = ltf_weights(o, spec)
    coeffs = ptf_coefficients(o)
    for j, c in enumerate(coeffs):
        assert lw.exact(j) == c
    assert all(v == 0 for v in lw.numerators[len(coeffs):])


def test_ltf_requires_degree(desk):
    o = oracle_for(MixtureParams(CLWEParams(2, 8.0, 0.01, np.array([0.6, 0.8])), 0.02), 2)
    with pytest.raises(ParameterError):
        ltf_weights(o, EmbeddingSpec(2, 7))


def test_ltf_sign_matches_classify_2d():
    w = np.array([0.6, -0.8])
    p = MixtureParams(CLWEParams(2, 8.0, 0.01, w), 0.02)
    o = oracle_for(p, 4)
    lw = ltf_weights(o, EmbeddingSpec(2, 16))
    X = np.random.default_rng(3).standard_normal((10_000, 2)) * 0.5
    keep = distance_to_roots(o, X @ w) >= 1e-6
    s = ltf_sign(lw, X[keep])
    assert np.array_equal(s, classify(o, X[keep]))
    # exact evaluation agrees with the fast path on a sample
    from clwe_hardness.oracle import _ltf_value_exact

    for x, sg in zip(X[keep][:50], s[:50]):
        assert (1 if _ltf_value_exact(lw, x) >= 0 else -1) == sg


def test_ltf_scaling_invariance():
    w = np.array([0.6, -0.8])
    o = oracle_for(MixtureParams(CLWEParams(2, 8.0, 0.01, w), 0.02), 2)
    lw = ltf_weights(o, EmbeddingSpec(2, 8))
    X = np.random.default_rng(4).standard_normal((2000, 2)) * 0.5
    from dataclasses import replace

    scaled = replace(lw, hi=lw.hi * 2.0 ** 40, lo=lw.lo * 2.0 ** 40)
    assert np.array_equal(ltf_sign(lw, X), ltf_sign(scaled, X))


def test_exact_error_against_mpmath(desk):
    assert oracle_error_exact(desk, 8) == pytest.approx(ERR_D8_CLOSED, rel=1e-12)
    assert oracle_error_exact(desk, 4) == pytest.approx(ERR_D4_CLOSED, rel=1e-12)
    assert oracle_error_exact(desk_params(form="conditional"), 8) == pytest.approx(ERR_D8_CONDITIONAL, rel=1e-12)
    assert oracle_error_bound(desk, 8) == pytest.approx(BOUND_D8, rel=1e-13)
    assert oracle_error_exact(desk, 8) <= oracle_error_bound(desk, 8)


def test_exact_error_monotone_and_vanishing(desk):
    errs = [oracle_error_exact(desk, d) for d in range(1, 60)]
    positive = [e for e in errs if e > 0]
    assert all(a > b for a, b in zip(positive, positive[1:]))
    assert errs[-1] < 1e-70


def test_bound_ordering_grid():
    for gamma in (2.0, 4.0, 8.0, 16.0):
        for ob in (0.01, 0.1, 0.5):
            p = MixtureParams(CLWEParams(1, gamma, ob / 2, np.array([1.0])), ob)
            for d in range(math.ceil(gamma), math.ceil(3 * gamma)):
                assert oracle_error_exact(p, d) <= oracle_error_bound(p, d)


def test_regions(desk):
    d = 8
    o = oracle_for(desk, d)
    fam = build_intervals(desk, d + 5)
    assert region_of_projection(desk, d, fam.mu_plus[fam.index(0)]) == Region.ALWAYS_CORRECT
    assert region_of_projection(desk, d, fam.mu_minus[fam.index(d + 3)]) == Region.ALWAYS_WRONG
    assert region_of_projection(desk, d, fam.mu_minus[fam.index(-d)]) == Region.ALWAYS_WRONG
    assert region_of_projection(desk, d, fam.mu_minus[fam.index(d)]) == Region.ALWAYS_CORRECT
    between = 0.5 * (fam.mu_plus[fam.index(0)] + fam.mu_minus[fam.index(1)])
    assert conditional_error_class(o, desk, between * o.w) == Region.OFF_SUPPORT


def test_empirical_error_and_regions(desk):
    o = oracle_for(desk, 8)
    ds = generate_mixture(desk, 300_000, 12)
    wrong = classify(o, ds.x) != ds.y
    sigma = math.sqrt(ERR_D8_CLOSED * (1 - ERR_D8_CLOSED) / len(ds))
    assert abs(wrong.mean() - ERR_D8_CLOSED) <= 3 * sigma
    region = conditional_error_class(o, desk, ds.x)
    assert np.array_equal(wrong, region == Region.ALWAYS_WRONG)


def test_oracle_has_no_edge_on_null(desk):
    o = oracle_for(desk, 8)
    ds = generate_null(16, 200_000, 13)
    err = np.mean(classify(o, ds.x) != ds.y)
    assert abs(err - 0.5) <= 3 * 0.5 / math.sqrt(len(ds))


def test_oracle_json_round_trip(desk, tmp_path):
    o = oracle_for(desk, 3)
    path = tmp_path / "o.json"
    save_oracle(o, path)
    back = load_oracle(path)
    assert np.array_equal(back.roots, o.roots) and np.array_equal(back.w, o.w)
    assert back.d == 3 and back.params["gamma"] == 8.0
    with pytest.raises(ValueError):
        OraclePTF.from_dict({"kind": "other"})
