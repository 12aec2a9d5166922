"""Machine-readable verification suite.

Each ``check_*`` function returns a list of :class:`CheckRecord`.  The
acceptance tests call them at full size; :func:`verify_all` runs all of them
(optionally scaled down) over a parameter grid and collects a
:class:`VerificationReport`.
"""

import hashlib
import json
import math
import tempfile
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from . import _accel
from .gaussian import gaussian_product_decompose, poisson_residual, rho
from .harness import (
    advantage_from_counts,
    coin_flip_distinguisher,
    empirical_error,
    hoeffding_distinguisher,
    DistinguisherConfig,
    tvd_default_alpha_bound,
    tvd_hclwe_truncation,
    tvd_truncation_bound,
)
from .instance import (
    CLWEParams,
    EmbeddingSpec,
    MixtureParams,
    desk_params,
    disjointness_criterion,
    disjointness_margin,
    generate_mixture,
    generate_null,
    secret_for_seed,
    seed_stream,
)
from .learners import FixedHypothesis, LearnerSpec
from .oracle import (
    Region,
    classify,
    conditional_error_class,
    distance_to_roots,
    ltf_sign,
    ltf_weights,
    oracle_error_bound,
    oracle_error_exact,
    oracle_for,
)
from .samplers import (
    HCLWESpec,
    RejectionConfig,
    acceptance_rate,
    clwe_density,
    default_delta,
    null_acceptance_rate,
    projection_cdf,
    projection_density,
    reduction_output_spec,
    reject_transform,
    reject_transform_null,
    sample_clwe,
    sample_gaussian,
    sample_hclwe_direct,
    sample_nhclwe,
)

REPORT_FORMAT_VERSION = 1
SIGNIFICANCE = 1e-3


@dataclass
class CheckRecord:
    name: str
    claimed: str
    measured: float
    passed: bool
    runtime: float = 0.0
    seed: int = 0
    detail: dict = field(default_factory=dict)


@dataclass
class VerificationReport:
    checks: list
    config: dict = field(default_factory=dict)
    format_version: int = REPORT_FORMAT_VERSION

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self, include_timing=True):
        checks = []
        for c in self.checks:
            d = asdict(c)
            if not include_timing:
                d.pop("runtime")
            checks.append(d)
        return {"format_version": self.format_version, "passed": self.passed,
                "config": self.config, "checks": checks}

    def to_json(self, include_timing=True):
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=1, default=_jsonable)

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format_version") != REPORT_FORMAT_VERSION:
            raise ValueError(f"unsupported report version {doc.get('format_version')}")
        checks = [CheckRecord(**{"runtime": 0.0, **c}) for c in doc["checks"]]
        return cls(checks, doc.get("config", {}))


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (Fraction,)):
        return str(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _clean(d):
    return json.loads(json.dumps(d, default=_jsonable))


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _record(name, claimed, measured, passed, timer, seed=0, **detail):
    return CheckRecord(name, claimed, float(measured), bool(passed), round(timer.elapsed, 4),
                       int(seed), _clean(detail))


# --- 1: identities -------------------------------------------------------------

def check_identities(seed=0):
    out = []
    with _Timer() as t:
        widths = np.geomspace(0.1, 16.0, 60)
        worst = max(poisson_residual(float(s)) for s in widths)
    out.append(_record("identity.poisson_residual", "<= 1e-10", worst, worst <= 1e-10, t, seed))

    with _Timer() as t:
        rng = seed_stream(seed, 9, 1)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            r1, r2 = rng.uniform(0.5, 3.0, 2)
            c1, c2, x = rng.uniform(-2, 2, (3, n))
            r0, r3, c3 = gaussian_product_decompose(r1, c1, r2, c2)
            lhs = rho(r1, x - c1) * rho(r2, x - c2)
            rhs = rho(r0, c1 - c2) * rho(r3, x - c3)
            worst = max(worst, abs(lhs - rhs) / abs(lhs))
    out.append(_record("identity.gaussian_product", "rel err <= 1e-12", worst, worst <= 1e-12, t, seed))

    with _Timer() as t:
        worst = 0.0
        for s in (0.05, 0.3, 1.0, 2.5, 16.0):
            val, _ = integrate.quad(lambda x: rho(s, x), -np.inf, np.inf, epsabs=0, epsrel=1e-12, limit=200)
            worst = max(worst, abs(val - s) / s)
    out.append(_record("identity.gaussian_integral", "rel err <= 1e-8", worst, worst <= 1e-8, t, seed))
    return out


# --- 2: densities --------------------------------------------------------------

def _one_dim(gamma, beta):
    return CLWEParams(1, gamma, beta, np.array([1.0]))


def clwe_density_integral(p):
    """``int int`` of the n = 1 joint density, inner integral split at the noise peak."""

    def inner(y):
        peak = (p.gamma * y) % 1.0
        f = lambda z: clwe_density(p, np.array([y]), z)
        pts = sorted({0.0, peak, 1.0})
        return math.fsum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
                         for a, b in zip(pts[:-1], pts[1:]) if b > a)

    val, _ = integrate.quad(inner, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-10, limit=400)
    return val


def projection_integral(spec):
    ks = spec.index_range()
    mu = spec.centers(ks)
    r = spec.alpha if spec.truncated else 8 * spec.component_width
    pts = np.unique(np.concatenate([mu - r, mu, mu + r]))
    f = lambda t: float(projection_density(spec, t))
    return math.fsum(integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-10, limit=200)[0]
                     for a, b in zip(pts[:-1], pts[1:]))


def _clwe_cell_probs(p, y_edges, z_edges):
    sd_y = 1.0 / math.sqrt(2 * math.pi)
    sd_e = p.beta / math.sqrt(2 * math.pi)
    kmax = int(math.ceil(p.gamma * 9 * sd_y)) + 3
    ks = np.arange(-kmax, kmax + 1)

    def z_prob(y, a, b):
        m = p.gamma * y
        return float(np.sum(stats.norm.cdf((b + ks - m) / sd_e) - stats.norm.cdf((a + ks - m) / sd_e)))

    probs = np.empty((len(y_edges) - 1, len(z_edges) - 1))
    for i in range(len(y_edges) - 1):
        for j in range(len(z_edges) - 1):
            f = lambda y: stats.norm.pdf(y, scale=sd_y) * z_prob(y, z_edges[j], z_edges[j + 1])
            probs[i, j] = integrate.quad(f, y_edges[i], y_edges[i + 1], epsabs=1e-12, limit=200)[0]
    return probs


def equiprobable_edges(spec, bins):
    """Bin edges with equal mass under :func:`projection_cdf` (outer edges infinite)."""
    from scipy.optimize import brentq

    ks = spec.index_range()
    lo = float(spec.centers(ks[0])) - 1
    hi = float(spec.centers(ks[-1])) + 1
    edges = [-np.inf]
    for q in np.arange(1, bins) / bins:
        edges.append(brentq(lambda v: float(projection_cdf(spec, v)) - q, lo, hi, xtol=1e-14))
    edges.append(np.inf)
    return np.array(edges)


def _gof(samples, spec, bins):
    edges = equiprobable_edges(spec, bins)
    obs = np.histogram(samples, bins=edges)[0]
    exp = np.concatenate([[projection_cdf(spec, edges[1])], np.diff(projection_cdf(spec, edges[1:-1])),
                          [1.0 - projection_cdf(spec, edges[-2])]])
    return stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue


def check_densities(seed=0, m=1_000_000):
    out = []
    with _Timer() as t:
        vals = {}
        for gamma, beta in ((2.0, 0.25), (8.0, 0.02)):
            vals[f"clwe_{gamma}_{beta}"] = clwe_density_integral(_one_dim(gamma, beta))
        worst = max(abs(v - 1) for v in vals.values())
    out.append(_record("density.clwe_integrates", "|int - 1| <= 1e-6", worst, worst <= 1e-6, t, seed, values=vals))

    with _Timer() as t:
        vals = {}
        for gamma, ob in ((2.0, 0.5), (8.0, 0.02)):
            for c in (0.0, 0.5):
                for form in ("closed", "conditional"):
                    spec = HCLWESpec(_one_dim(gamma, ob / 2), c, ob, form=form)
                    vals[f"h_{gamma}_{ob}_{c}_{form}"] = projection_integral(spec)
                    vals[f"nh_{gamma}_{ob}_{c}_{form}"] = projection_integral(spec.with_default_alpha())
        worst = max(abs(v - 1) for v in vals.values())
    out.append(_record("density.hclwe_integrates", "|int - 1| <= 1e-6", worst, worst <= 1e-6, t, seed, values=vals))

    with _Timer() as t:
        p = _one_dim(2.0, 0.25)
        s = sample_clwe(p, seed_stream(seed, 9, 2), m)
        y_edges = np.concatenate([[-np.inf], stats.norm.ppf(np.arange(1, 12) / 12, scale=1 / math.sqrt(2 * math.pi)), [np.inf]])
        z_edges = np.linspace(0, 1, 11)
        probs = _clwe_cell_probs(p, y_edges, z_edges)
        obs = np.histogram2d(s.y[:, 0], s.z, bins=[y_edges, z_edges])[0]
        pval = stats.chisquare(obs.ravel(), probs.ravel() * m / probs.sum()).pvalue
    out.append(_record("density.clwe_sampler_chi2", f"p >= {SIGNIFICANCE}", pval, pval >= SIGNIFICANCE, t, seed,
                       cells=int(probs.size), prob_mass=float(probs.sum())))

    with _Timer() as t:
        pvals = {}
        rng = seed_stream(seed, 9, 3)
        for gamma, ob in ((2.0, 0.5), (8.0, 0.02)):
            spec = HCLWESpec(_one_dim(gamma, ob / 2), 0.5, ob)
            x = sample_hclwe_direct(spec, rng, m)[:, 0]
            pvals[f"hclwe_{gamma}_{ob}"] = _gof(x, spec, 60)
            tspec = spec.with_default_alpha()
            x = sample_nhclwe(tspec, rng, m)[:, 0]
            pvals[f"nhclwe_{gamma}_{ob}"] = _gof(x, tspec, 60)
        worst = min(pvals.values())
    out.append(_record("density.hclwe_sampler_chi2", f"p >= {SIGNIFICANCE}", worst, worst >= SIGNIFICANCE, t, seed,
                       pvalues=pvals))
    return out


# --- 3: reduction ----------------------------------------------------------------

def check_reduction(seed=0, target=100_000, params=None):
    out = []
    p = (params or desk_params(seed=seed)).base
    cfg = RejectionConfig.build(default_delta(p.beta), 0.0)
    with _Timer() as t:
        rng = seed_stream(seed, 9, 4)
        kept, tried = [], 0
        while sum(len(k) for k in kept) < target:
            batch = 200_000
            ys, _ = reject_transform(p, cfg, sample_clwe(p, rng, batch), rng)
            kept.append(ys)
            tried += batch
        red = np.concatenate(kept)
        accepted = red.shape[0]
        red = red[:target]
        spec = reduction_output_spec(p, cfg)
        direct = sample_hclwe_direct(spec, rng, target)
        edges = equiprobable_edges(spec, 60)
        t_red, t_dir = red @ p.w, direct @ p.w
        table = np.stack([np.histogram(t_red, edges)[0], np.histogram(t_dir, edges)[0]])
        p_proj = stats.chi2_contingency(table).pvalue
        # offset from the nearest pancake centre, binned at Gaussian quantiles
        g = spec.spacing
        sd = spec.component_width / math.sqrt(2 * math.pi)
        off_edges = np.concatenate([[-np.inf], stats.norm.ppf(np.arange(1, 60) / 60, scale=sd), [np.inf]])
        offset = lambda v: v - g * np.rint(v / g)
        table = np.stack([np.histogram(offset(t_red), off_edges)[0], np.histogram(offset(t_dir), off_edges)[0]])
        p_offset = stats.chi2_contingency(table).pvalue
        perp = lambda X: (X - np.outer(X @ p.w, p.w))[:, 0]
        p_perp = stats.ks_2samp(perp(red), perp(direct)).pvalue
        worst = min(p_proj, p_offset, p_perp)
    out.append(_record("reduction.two_sample", f"p >= {SIGNIFICANCE}", worst, worst >= SIGNIFICANCE, t, seed,
                       p_projection=p_proj, p_offset=p_offset, p_orthogonal=p_perp, out_beta=spec.out_beta))

    rate = accepted / tried
    closed = acceptance_rate(p, cfg)
    sigma = math.sqrt(closed * (1 - closed) / tried)
    ok = cfg.delta / 4 <= rate <= 1 and abs(rate - closed) <= 3 * sigma
    out.append(_record("reduction.acceptance_rate", "in [delta/4, 1] and within 3 sigma of closed form",
                       rate, ok, t, seed, closed_form=closed, sigma=sigma, z=(rate - closed) / sigma,
                       delta=cfg.delta, trials=tried))

    with _Timer() as t:
        rng = seed_stream(seed, 9, 5)
        N = int(math.ceil(target / null_acceptance_rate(cfg)))
        y = sample_gaussian(p.n, N, rng)
        z = rng.random(N)
        ys, mask = reject_transform_null(cfg, y, z, rng)
        sd = 1 / math.sqrt(2 * math.pi)
        pks = [stats.kstest(ys[:, i], "norm", args=(0, sd)).pvalue for i in range(p.n)]
        worst = min(pks)
    out.append(_record("reduction.null_ks", f"min p >= {SIGNIFICANCE}", worst, worst >= SIGNIFICANCE, t, seed,
                       pvalues=pks, accepted=int(mask.sum())))
    rate = mask.mean()
    closed = null_acceptance_rate(cfg)
    sigma = math.sqrt(closed * (1 - closed) / N)
    ok = cfg.delta / 4 <= rate <= 1 and abs(rate - closed) <= 3 * sigma
    out.append(_record("reduction.null_acceptance_rate", "in [delta/4, 1] and within 3 sigma of delta/M",
                       rate, ok, t, seed, closed_form=closed, sigma=sigma, z=(rate - closed) / sigma))
    return out


# --- 4: truncation ------------------------------------------------------------------

def check_tvd(params=None, seed=0, tag="desk"):
    params = params or desk_params()
    out = []
    with _Timer() as t:
        res = [tvd_hclwe_truncation(s) for s in (params.spec_plus, params.spec_minus)]
        measured = max(r.value for r in res)
        bound = tvd_default_alpha_bound(params.out_beta)
        general = tvd_truncation_bound(params.spec_plus)
    out.append(_record(f"tvd.truncation[{tag}]", f"< 8 exp(-1/(400 out_beta^2)) = {bound:.6g}",
                       measured, measured < bound and measured < general, t, seed,
                       bound=bound, general_bound=general,
                       quadrature_error=max(r.error_estimate for r in res), pieces=res[0].pieces))
    return out


# --- 5: geometry ----------------------------------------------------------------------

def disjointness_grid():
    """20 x 20 grid of (beta^2, gamma) with beta^2 / gamma^2 in {5/25, ..., 24/25}."""
    gammas = [Fraction(g, 2) for g in range(1, 21)]
    ratios = [Fraction(i, 25) for i in range(5, 25)]
    return [(g, r * g * g) for g in gammas for r in ratios]


def _near_both(params, t):
    plus, minus = params.spec_plus, params.spec_minus
    g = plus.spacing
    dp = np.abs(t - plus.centers(np.rint((t - plus.centers(0)) / g)))
    dm = np.abs(t - minus.centers(np.rint((t - minus.centers(0)) / g)))
    return dp, dm


def check_geometry(seed=0, m=1_000_000, threads=1):
    out = []
    with _Timer() as t:
        grid = disjointness_grid()
        mismatch = [(str(g), str(b2)) for g, b2 in grid
                    if (disjointness_margin(g, b2) > 0) != disjointness_criterion(g, b2)]
        boundary = [(g, b2) for g, b2 in grid if 5 * b2 == 3 * g * g]
        boundary_ok = all(disjointness_margin(g, b2) == 0 for g, b2 in boundary)
    out.append(_record("geometry.disjoint_grid", "agrees with beta^2 < 3/5 gamma^2 on 400 points",
                       len(mismatch), not mismatch and boundary and boundary_ok, t, seed,
                       mismatches=mismatch, boundary_points=len(boundary)))

    for out_beta in (0.02, 0.04):
        with _Timer() as t:
            p = desk_params(out_beta=out_beta, seed=seed)
            ds = generate_mixture(p, m, seed, threads=threads)
            tt = ds.x @ p.base.w
            dp, dm = _near_both(p, tt)
            both = int(np.sum((dp <= p.alpha) & (dm <= p.alpha)))
            pos = ds.y > 0
            off = int(np.sum(dp[pos] > p.alpha) + np.sum(dm[~pos] > p.alpha))
        out.append(_record(f"geometry.no_shared_points[out_beta={out_beta}]", "0 points near both families",
                           both + off, both == 0 and off == 0, t, seed, near_both=both,
                           off_own_support=off, m=m, gap=float(disjointness_margin(p.gamma, Fraction(out_beta) ** 2) + 2 * Fraction(p.alpha)),
                           two_alpha=2 * p.alpha))
    return out


# --- 6: oracle ----------------------------------------------------------------------

def check_oracle(seed=0, m=1_000_000, d=8, params=None, threads=1, tag="desk"):
    out = []
    with _Timer() as t:
        p = params or desk_params(seed=seed)
        o = oracle_for(p, d)
        exact = oracle_error_exact(p, d)
        bound = oracle_error_bound(p, d)
        ds = generate_mixture(p, m, seed + 1, threads=threads)
        pred = classify(o, ds.x)
        est = empirical_error(lambda X: pred, ds)
        sigma = math.sqrt(exact * (1 - exact) / m)
        z = (est.value - exact) / sigma
    out.append(_record(f"oracle.empirical_vs_exact[{tag}]", "within 3 binomial sigma",
                       est.value, abs(z) <= 3, t, seed, exact=exact, sigma=sigma, z=z, m=m, d=d))
    out.append(_record(f"oracle.exact_below_tail_bound[{tag}]", f"<= exp(-pi d^2/S^2) = {bound:.6g}",
                       exact, exact <= bound, t, seed, bound=bound))
    with _Timer() as t:
        region = conditional_error_class(o, p, ds.x)
        wrong = pred != ds.y
        exceptions = int(np.sum(wrong != (region == Region.ALWAYS_WRONG)))
        off = int(np.sum(region == Region.OFF_SUPPORT))
    out.append(_record(f"oracle.region_predicate[{tag}]", "misclassified <=> always_wrong",
                       exceptions, exceptions == 0 and off == 0, t, seed, off_support=off,
                       misclassified=int(wrong.sum())))
    with _Timer() as t:
        errs = [oracle_error_exact(p, k) for k in range(1, 2 * d + 1)]
        mono = all(a > b for a, b in zip(errs, errs[1:]) if a > 0)
    out.append(_record(f"oracle.monotone_in_d[{tag}]", "strictly decreasing", errs[-1], mono, t, seed))
    return out


# --- 7: embedding --------------------------------------------------------------------------

def check_embedding(seed=0, n_random=10_000, m=100_000, d=8, threads=1):
    out = []
    with _Timer() as t:
        w = secret_for_seed(2, seed)
        p = MixtureParams(CLWEParams(2, 8.0, 0.01, w), 0.02)
        o = oracle_for(p, d)
        spec = EmbeddingSpec(2, 4 * d)
        lw = ltf_weights(o, spec)
        X = sample_gaussian(2, n_random, seed_stream(seed, 9, 6))
        ds = generate_mixture(p, m, seed, threads=threads)
        detail = {"embedding_dim": spec.M, "degree": spec.deg}
        bad_total = 0
        for label, pts in (("random", X), ("dataset", ds.x)):
            near = distance_to_roots(o, pts @ o.w) < 1e-9
            keep = pts[~near]
            s, fallbacks = ltf_sign(lw, keep, return_fallbacks=True)
            bad = int(np.sum(s != classify(o, keep)))
            bad_total += bad
            detail[label] = {"points": int(pts.shape[0]), "excluded_near_root": int(near.sum()),
                             "disagreements": bad, "exact_fallbacks": fallbacks}
    out.append(_record("embedding.ltf_matches_classify", "0 disagreements", bad_total, bad_total == 0, t, seed,
                       **detail))
    return out


# --- 8: distinguisher -------------------------------------------------------------------------

def check_distinguisher(seed=0, trials=100, m=100_000, tau=0.1, d=8, coin_trials=400, threads=1):
    out = []
    with _Timer() as t:
        p = desk_params(seed=seed)
        o = oracle_for(p, d)
        cfg = DistinguisherConfig(tau, 0.5, FixedHypothesis(lambda X: classify(o, X)))
        planted_ok = null_ok = 0
        margins = []
        for i in range(trials):
            r = hoeffding_distinguisher(cfg, generate_mixture(p, m, (seed, i, 0), threads=threads))
            planted_ok += r.verdict == "planted"
            margins.append(r.margin)
            r0 = hoeffding_distinguisher(cfg, generate_null(p.n, m, (seed, i, 1), threads=threads))
            null_ok += r0.verdict == "null"
        adv = advantage_from_counts(planted_ok, trials - null_ok, trials)
    need = math.ceil(0.95 * trials)
    out.append(_record("distinguisher.oracle_planted", f">= {need}/{trials} planted verdicts", planted_ok,
                       planted_ok >= need, t, seed, mean_margin=float(np.mean(margins)),
                       failure_bound=r.failure_bound, stated_bound=r.stated_bound))
    out.append(_record("distinguisher.oracle_null", f">= {need}/{trials} null verdicts", null_ok,
                       null_ok >= need, t, seed))
    out.append(_record("distinguisher.oracle_advantage", ">= 0.9", adv.advantage, adv.advantage >= 0.9, t, seed,
                       interval=adv.interval))
    with _Timer() as t:
        coin = coin_flip_distinguisher(seed)
        k1 = sum(coin(None) == "planted" for _ in range(coin_trials))
        k0 = sum(coin(None) == "planted" for _ in range(coin_trials))
        cadv = advantage_from_counts(k1, k0, coin_trials)
    out.append(_record("distinguisher.coin_flip_advantage", "95% interval reaches <= 0.1", cadv.advantage,
                       cadv.interval[0] <= 0.1, t, seed, interval=cadv.interval, trials=coin_trials))
    return out


# --- 9: baselines -----------------------------------------------------------------------------

def hardness_params(n, seed, form="closed"):
    beta = 1.0 / n
    out_beta = math.hypot(beta, default_delta(beta))
    base = CLWEParams(n, 2 * math.sqrt(n), beta, secret_for_seed(n, seed))
    return MixtureParams(base, out_beta, form=form)


def check_hardness_smoke(seed=0, n=32, m=100_000, seeds=10, form="closed", threads=1):
    out = []
    learners = {
        "perceptron": LearnerSpec("perceptron", epochs=5),
        "logistic_gd": LearnerSpec("logistic_gd", epochs=200, learning_rate=1.0),
    }
    with _Timer() as t:
        errs = {k: [] for k in learners}
        for s in range(seed, seed + seeds):
            p = hardness_params(n, s, form)
            ds = generate_mixture(p, m, s, threads=threads)
            half = m // 2
            for name, spec in learners.items():
                h = LearnerSpec(spec.kind, spec.epochs, spec.learning_rate, s).fit(ds.x[:half], ds.y[:half])
                errs[name].append(empirical_error(h, ds.x[half:], ds.y[half:]).value)
    for name, e in errs.items():
        ok = all(0.48 <= v <= 0.52 for v in e)
        worst = max(e, key=lambda v: abs(v - 0.5))
        out.append(_record(f"hardness.{name}[{form}]", "held-out error in [0.48, 0.52] for every seed",
                           worst, ok, t, seed, errors=e, n=n, m=m))
    return out


# --- 10: reproducibility -----------------------------------------------------------------------

def _file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def check_reproducibility(seed=0, m=100_000):
    from .dataset_io import write_dataset

    out = []
    with _Timer() as t:
        p = desk_params(seed=seed)
        digests = {}
        with tempfile.TemporaryDirectory() as tmp:
            for threads in (1, 2, 4):
                for mode in ("planted", "null"):
                    ds = generate_mixture(p, m, seed, threads) if mode == "planted" else generate_null(p.n, m, seed, threads)
                    path = Path(tmp) / f"{mode}_{threads}.clwf"
                    write_dataset(ds, path)
                    digests.setdefault(mode, set()).add(_file_digest(path))
        same = all(len(v) == 1 for v in digests.values())
    out.append(_record("reproducibility.dataset_files", "bitwise identical across thread counts",
                       sum(len(v) for v in digests.values()), same, t, seed,
                       digests={k: sorted(v) for k, v in digests.items()}))
    with _Timer() as t:
        reports = set()
        for threads in (1, 3):
            rep = verify_all(quick=True, threads=threads, only=("geometry", "oracle"), seed=seed)
            reports.add(rep.to_json(include_timing=False))
    out.append(_record("reproducibility.reports", "identical report JSON across thread counts",
                       len(reports), len(reports) == 1, t, seed))
    return out


# --- driver ---------------------------------------------------------------------------------------

DEFAULT_GRID = (
    {"n": 16, "gamma": 8.0, "out_beta": 0.02},
    {"n": 16, "gamma": 8.0, "out_beta": 0.04},
    {"n": 8, "gamma": 2 * math.sqrt(8), "out_beta": 0.25},
)

SECTIONS = ("identities", "densities", "reduction", "tvd", "geometry", "oracle",
            "embedding", "distinguisher", "hardness", "reproducibility")


def grid_params(point, seed=0):
    n, gamma, ob = point["n"], float(point["gamma"]), float(point["out_beta"])
    beta = point.get("beta", ob / 2)
    base = CLWEParams(n, gamma, min(beta, gamma), secret_for_seed(n, seed))
    return MixtureParams(base, ob, point.get("alpha"), form=point.get("form", "closed"))


def check_grid_point(point, seed=0, m=100_000, d=8, threads=1):
    out = []
    tag = ",".join(f"{k}={point[k]:.6g}" if isinstance(point[k], float) else f"{k}={point[k]}" for k in sorted(point))
    with _Timer() as t:
        p = grid_params(point, seed)
        margin = p.margin()
        ok = margin > 0
    out.append(_record(f"grid.disjoint[{tag}]", "beta^2 < 3/5 gamma^2", float(margin), ok, t, seed,
                       out_beta_sq=p.out_beta ** 2, limit=0.6 * p.gamma ** 2))
    if not ok:
        return out
    out.extend(check_tvd(p, seed, tag))
    out.extend(check_oracle(seed, m, d, p, threads, tag))
    return out


def verify_all(grid=DEFAULT_GRID, quick=False, seed=0, threads=1, only=None):
    """Run the suite; ``quick`` shrinks sample sizes, ``only`` restricts sections."""
    sections = SECTIONS if only is None else tuple(only)
    big = 100_000 if quick else 1_000_000
    mid = 20_000 if quick else 100_000
    checks = []
    run = {
        "identities": lambda: check_identities(seed),
        "densities": lambda: check_densities(seed, big),
        "reduction": lambda: check_reduction(seed, mid),
        "tvd": lambda: check_tvd(seed=seed),
        "geometry": lambda: check_geometry(seed, big, threads),
        "oracle": lambda: check_oracle(seed, big, threads=threads),
        "embedding": lambda: check_embedding(seed, 10_000, mid, threads=threads),
        "distinguisher": lambda: check_distinguisher(seed, 100, mid, threads=threads),
        "hardness": lambda: (check_hardness_smoke(seed, m=mid, seeds=3 if quick else 10, threads=threads)
                             + check_hardness_smoke(seed, m=mid, seeds=3 if quick else 10, form="conditional",
                                                    threads=threads)),
        "reproducibility": lambda: check_reproducibility(seed, mid),
    }
    for name in sections:
        if name != "grid":
            checks.extend(run[name]())
    if only is None or "grid" in sections:
        for point in grid:
            checks.extend(check_grid_point(point, seed, mid, threads=threads))
    config = {"quick": quick, "seed": seed, "sections": list(sections),
              "grid": [dict(p) for p in grid], "backend": _accel.backend_name()}
    return VerificationReport(checks, _clean(config))
