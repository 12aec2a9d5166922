"""Error estimation, the learner-to-distinguisher test, quadrature TVD and advantage accounting."""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np
from scipy import integrate
from statsmodels.stats.proportion import confint_proportions_2indep, proportion_confint

from .learners import FixedHypothesis, LearnerSpec


@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    mismatches: int
    m: int

    @property
    def fraction(self):
        return Fraction(self.mismatches, self.m)

    @property
    def sigma(self):
        return math.sqrt(max(self.value * (1 - self.value), 1e-300) / self.m)


def empirical_error(h, X, y=None):
    """Fraction of points where ``h`` disagrees with the label (Dataset or arrays)."""
    if y is None:
        X, y = X.x, X.y
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("empirical error of an empty dataset is undefined")
    pred = np.asarray(h(X)).reshape(-1)
    bad = int(np.count_nonzero(pred != y))
    return ErrorEstimate(bad / y.size, bad, int(y.size))


# --- distinguisher -------------------------------------------------------------

@dataclass(frozen=True)
class DistinguisherConfig:
    tau: float = 0.1
    split: float = 0.5
    learner: Any = field(default_factory=LearnerSpec)

    def __post_init__(self):
        if not 0 < self.tau < 0.5:
            raise ValueError("tau must lie in (0, 1/2)")
        if not 0 < self.split < 1:
            raise ValueError("split must lie in (0, 1)")


@dataclass(frozen=True)
class DistinguisherResult:
    verdict: str
    error: float
    margin: float
    m: int
    m_test: int
    tau: float
    failure_bound: float
    stated_bound: float
    powered: bool
    warning: Optional[str] = None

    def to_dict(self):
        return dict(self.__dict__)


def hoeffding_failure_bound(m_test, tau):
    """``P(|err_hat - err| > tau/3) <= 2 exp(-2 m_test tau^2 / 9)``."""
    return min(1.0, 2.0 * math.exp(-2.0 * m_test * tau * tau / 9.0))


def hoeffding_distinguisher(cfg, ds):
    """Train on the first split, test on the rest; planted iff ``|err - 1/2| > tau/2``."""
    m = len(ds)
    cut = int(round(cfg.split * m))
    if cut < 1 or cut >= m:
        raise ValueError("dataset too small to split")
    h = cfg.learner.fit(ds.x[:cut], ds.y[:cut])
    est = empirical_error(h, ds.x[cut:], ds.y[cut:])
    margin = abs(est.value - 0.5)
    powered = m >= 2.0 / cfg.tau ** 2
    warning = None if powered else f"underpowered: m={m} < 2/tau^2 = {2.0 / cfg.tau ** 2:.0f}"
    return DistinguisherResult(
        verdict="planted" if margin > cfg.tau / 2 else "null",
        error=est.value,
        margin=margin,
        m=m,
        m_test=est.m,
        tau=cfg.tau,
        failure_bound=hoeffding_failure_bound(est.m, cfg.tau),
        stated_bound=min(1.0, 2.0 * math.exp(-2.0 * m * cfg.tau ** 2 / 9.0)),
        powered=powered,
        warning=warning,
    )


def oracle_distinguisher(oracle, tau=0.1):
    from .oracle import classify

    cfg = DistinguisherConfig(tau, 0.5, FixedHypothesis(lambda X: classify(oracle, X)))
    return lambda ds: hoeffding_distinguisher(cfg, ds).verdict


def coin_flip_distinguisher(seed):
    rng = np.random.default_rng(seed)
    return lambda ds: "planted" if rng.random() < 0.5 else "null"


# --- quadrature TVD ------------------------------------------------------------

class QuadratureError(ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class TVDResult:
    value: float
    error_estimate: float
    pieces: int


def tvd_1d_numeric(p, q, breakpoints, abs_tol=1e-10, limit=200):
    """``1/2 int |p - q|`` over ``[min(breakpoints), max(breakpoints)]``.

    The interval is cut at every breakpoint, so densities that jump (truncated
    components) are only ever integrated over smooth pieces.
    """
    pts = np.unique(np.asarray(breakpoints, dtype=np.float64))
    if pts.size < 2:
        raise ValueError("need at least two breakpoints")

    def f(t):
        return abs(float(p(t)) - float(q(t)))

    total = []
    err = 0.0
    tol = abs_tol / (pts.size - 1)
    for a, b in zip(pts[:-1], pts[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, e = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError("quadrature did not converge",
                                      {"piece": (float(a), float(b)), "message": str(exc)}) from exc
        if not math.isfinite(val):
            raise QuadratureError("non-finite integrand", {"piece": (float(a), float(b))})
        total.append(val)
        err += e
    return TVDResult(0.5 * math.fsum(total), 0.5 * err, pts.size - 1)


def projection_breakpoints(*specs, pad=None):
    """Centres and truncation edges of every component that carries mass."""
    pts = []
    for spec in specs:
        ks = spec.index_range()
        mu = spec.centers(ks)
        r = spec.alpha if spec.truncated else 6 * spec.component_width
        pts.extend([mu - r, mu, mu + r])
    pts = np.concatenate(pts)
    pad = pad if pad is not None else 0.0
    return np.concatenate([pts, [pts.min() - pad, pts.max() + pad]])


def tvd_hclwe_truncation(spec):
    """Quadrature TVD between the untruncated and truncated projections of ``spec``."""
    from .samplers import projection_density

    full = spec.untruncated()
    trunc = spec if spec.truncated else spec.with_default_alpha()
    pts = projection_breakpoints(full, trunc)
    return tvd_1d_numeric(lambda t: projection_density(full, t),
                          lambda t: projection_density(trunc, t), pts)


def tvd_truncation_bound(spec):
    """``8 exp(-alpha^2 S^2 / (2 out_beta^2))`` for the truncation radius of ``spec``."""
    return 8.0 * math.exp(-(spec.alpha ** 2) * spec.total_width ** 2 / (2 * spec.out_beta ** 2))


def tvd_default_alpha_bound(out_beta):
    """``8 exp(-1 / (400 out_beta^2))``, valid for the default radius."""
    return 8.0 * math.exp(-1.0 / (400.0 * out_beta ** 2))


# --- advantage -------------------------------------------------------------------

@dataclass(frozen=True)
class AdvantageReport:
    trials: int
    planted_says_planted: int
    null_says_planted: int
    advantage: float
    interval: tuple
    planted_interval: tuple
    null_interval: tuple
    tvd_per_sample: Optional[float] = None
    samples_per_dataset: Optional[int] = None

    @property
    def tvd_dataset_bound(self):
        """Advantage lost by swapping truncated for untruncated data, via the union bound."""
        if self.tvd_per_sample is None or self.samples_per_dataset is None:
            return None
        return min(1.0, self.samples_per_dataset * self.tvd_per_sample)

    def to_dict(self):
        d = dict(self.__dict__)
        d["interval"] = list(self.interval)
        d["planted_interval"] = list(self.planted_interval)
        d["null_interval"] = list(self.null_interval)
        d["tvd_dataset_bound"] = self.tvd_dataset_bound
        return d


def _abs_interval(lo, hi):
    if lo <= 0 <= hi:
        return (0.0, max(-lo, hi))
    return (min(abs(lo), abs(hi)), max(abs(lo), abs(hi)))


def advantage_report(distinguisher, m_trials, seed, make_planted, make_null,
                     threads=1, tvd_per_sample=None, samples_per_dataset=None, alpha=0.05):
    """Run ``distinguisher`` on ``m_trials`` fresh datasets from each world.

    ``make_planted(seed_tuple)`` / ``make_null(seed_tuple)`` build the datasets;
    trial ``i`` uses seeds ``(seed, i, 0)`` and ``(seed, i, 1)``.
    """
    if m_trials < 100:
        raise ValueError("advantage_report needs at least 100 trials")

    def trial(i):
        a = distinguisher(make_planted((seed, i, 0))) == "planted"
        b = distinguisher(make_null((seed, i, 1))) == "planted"
        return a, b

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = list(pool.map(trial, range(m_trials)))
    else:
        res = [trial(i) for i in range(m_trials)]
    k1 = sum(a for a, _ in res)
    k0 = sum(b for _, b in res)
    return advantage_from_counts(k1, k0, m_trials, alpha, tvd_per_sample, samples_per_dataset)


def advantage_from_counts(k_planted, k_null, trials, alpha=0.05, tvd_per_sample=None, samples_per_dataset=None):
    lo, hi = confint_proportions_2indep(k_planted, trials, k_null, trials, method="newcomb", alpha=alpha)
    p1 = proportion_confint(k_planted, trials, alpha=alpha, method="wilson")
    p0 = proportion_confint(k_null, trials, alpha=alpha, method="wilson")
    return AdvantageReport(
        trials=trials,
        planted_says_planted=int(k_planted),
        null_says_planted=int(k_null),
        advantage=abs(k_planted - k_null) / trials,
        interval=_abs_interval(float(lo), float(hi)),
        planted_interval=(float(p1[0]), float(p1[1])),
        null_interval=(float(p0[0]), float(p0[1])),
        tvd_per_sample=tvd_per_sample,
        samples_per_dataset=samples_per_dataset,
    )
