"""CLWE, homogeneous CLWE (hCLWE) and truncated hCLWE samplers and densities.

Two parameterisations of the c-shifted pancake mixture are supported through
``HCLWESpec.form``:

``"closed"``
    component ``k`` has weight ``rho_S(k)`` and centre ``gamma k / S^2 - c / gamma``
    (``S^2 = beta^2 + gamma^2``).  This is the default and the form every
    interval/oracle formula in :mod:`clwe_hardness.oracle` is written for.

``"conditional"``
    component ``k`` has weight ``rho_S(k - c)`` and centre ``gamma (k - c) / S^2``.
    Its density is proportional to ``rho(y) sum_k rho_beta(gamma <w, y> - k + c)``,
    i.e. a CLWE sample conditioned on ``z = -c mod 1``, which is what
    :func:`reject_transform` outputs.

Both forms coincide at ``c = 0``.  For ``c != 0`` the closed form's overall
mean along ``w`` is ``-c / gamma`` rather than ~0, which a linear classifier
can pick up (see README).
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import special

from .gaussian import (
    TailTruncation,
    discrete_gaussian_sample,
    rho,
    rho1,
    theta_mass,
    wrapped_rho,
)

FORMS = ("closed", "conditional")
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class ParameterError(ValueError):
    """A parameter combination violates a required inequality."""


@dataclass(frozen=True, eq=False)
class CLWEParams:
    n: int
    gamma: float
    beta: float
    w: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("dimension n must be >= 1")
        if not (self.gamma > 0 and self.beta > 0):
            raise ParameterError("gamma and beta must be positive")
        if self.beta > self.gamma:
            raise ParameterError(f"need beta <= gamma, got beta={self.beta}, gamma={self.gamma}")
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        if w.size != self.n:
            raise ParameterError(f"w has {w.size} entries, expected n={self.n}")
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise ParameterError("w must be a unit vector")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def hardness_regime(cls, n, rng, gamma=None, beta=None):
        """Default instantiation: ``gamma = 2 sqrt(n)``, ``beta = 1/n``, random ``w``."""
        gamma = 2.0 * math.sqrt(n) if gamma is None else gamma
        beta = 1.0 / n if beta is None else beta
        if gamma < 2.0 * math.sqrt(n):
            raise ParameterError(f"hardness regime needs gamma >= 2 sqrt(n) = {2 * math.sqrt(n):.6g}")
        return cls(n, gamma, beta, sample_secret_direction(n, rng))


def default_alpha(gamma, out_beta):
    """Truncation radius ``gamma / (10 (gamma^2 + beta^2))``."""
    return 0.1 * gamma / (gamma * gamma + out_beta * out_beta)


@dataclass(frozen=True, eq=False)
class HCLWESpec:
    base: CLWEParams
    c: float
    out_beta: float
    alpha: float = None
    form: str = "closed"

    def __post_init__(self):
        if not 0.0 <= self.c < 1.0:
            raise ParameterError(f"phase offset c must lie in [0, 1), got {self.c}")
        if not self.out_beta > 0:
            raise ParameterError("out_beta must be positive")
        if self.alpha is not None and not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if self.form not in FORMS:
            raise ParameterError(f"form must be one of {FORMS}, got {self.form!r}")

    @property
    def gamma(self):
        return self.base.gamma

    @property
    def truncated(self):
        return self.alpha is not None

    @property
    def total_width(self):
        """``S = sqrt(out_beta^2 + gamma^2)``, the width of the component-index law."""
        return math.hypot(self.out_beta, self.gamma)

    @property
    def component_width(self):
        """rho-width ``out_beta / S`` of each pancake along ``w``."""
        return self.out_beta / self.total_width

    @property
    def spacing(self):
        return self.gamma / (self.out_beta ** 2 + self.gamma ** 2)

    @property
    def weight_shift(self):
        return self.c if self.form == "conditional" else 0.0

    def centers(self, k):
        k = np.asarray(k, dtype=np.float64)
        if self.form == "conditional":
            return self.spacing * (k - self.c)
        return self.spacing * k - self.c / self.gamma

    def index_range(self):
        K = TailTruncation.for_width(self.total_width).K
        base = math.floor(self.weight_shift)
        return np.arange(-K, K + 1) + base

    def with_default_alpha(self):
        return replace(self, alpha=default_alpha(self.gamma, self.out_beta))

    def untruncated(self):
        return replace(self, alpha=None)


class CLWESamples(NamedTuple):
    y: np.ndarray
    z: np.ndarray


def mod1(v):
    """Reduce to ``[0, 1)``; a rounding result of exactly 1.0 maps to 0.0."""
    v = np.asarray(v, dtype=np.float64)
    r = v - np.floor(v)
    return np.where(r >= 1.0, 0.0, r)


def sample_secret_direction(n, rng):
    g = rng.standard_normal(n)
    while True:
        norm = np.linalg.norm(g)
        if norm > 0:
            break
        g = rng.standard_normal(n)
    w = g / norm
    return w / np.linalg.norm(w)


def sample_gaussian(n, size, rng):
    """Draws from ``N(0, I_n / (2 pi))``."""
    return rng.standard_normal((size, n)) / _SQRT_2PI


def sample_clwe(p, rng, size):
    y = sample_gaussian(p.n, size, rng)
    e = rng.standard_normal(size) * (p.beta / _SQRT_2PI)
    z = mod1(p.gamma * (y @ p.w) + e)
    return CLWESamples(y, z)


def clwe_density(p, y, z):
    """Joint density ``(1/beta) rho(y) sum_k rho_beta(z + k - gamma <w, y>)``."""
    z = np.asarray(z, dtype=np.float64)
    if np.any((z < 0) | (z >= 1)):
        raise ValueError("z must lie in [0, 1)")
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1 and p.n > 1:
        y = y[None, :]
    y = y.reshape(-1, p.n)
    inner = y @ p.w
    vals = rho(1.0, y) * wrapped_rho(p.beta, z.reshape(-1) - p.gamma * inner) / p.beta
    return vals if vals.size > 1 else float(vals[0])


def _component_sums(spec, t, unnormalized):
    t = np.asarray(t, dtype=np.float64)
    flat = t.reshape(-1)
    ks = spec.index_range().astype(np.float64)
    weights = rho1(spec.total_width, ks - spec.weight_shift)
    mus = spec.centers(ks)
    sw = spec.component_width
    if spec.truncated:
        tz = 1.0 / (1.0 - math.erfc(math.sqrt(math.pi) * spec.alpha / sw))
    out = np.empty_like(flat)
    step = max(1, (1 << 21) // ks.size)
    for lo in range(0, flat.size, step):
        diff = flat[lo:lo + step, None] - mus[None, :]
        comp = rho1(sw, diff)
        if spec.truncated:
            comp = np.where(np.abs(diff) <= spec.alpha, comp * tz, 0.0)
        out[lo:lo + step] = comp @ weights
    if not unnormalized:
        out /= sw * math.fsum(weights)
    return out.reshape(t.shape)


def hclwe_unnormalized_1d(spec, t):
    """The mixture sum along ``w`` before normalisation (integrates to :func:`hclwe_normalizer`)."""
    return _component_sums(spec, t, unnormalized=True)


def hclwe_normalizer(spec):
    """``(beta / S) rho_S(Z - shift)``, the integral of :func:`hclwe_unnormalized_1d`."""
    return spec.component_width * theta_mass(spec.total_width, shift=-spec.weight_shift)


def projection_density(spec, t):
    """Normalised density of ``<w, x>`` for ``x`` drawn from the (truncated) mixture."""
    return _component_sums(spec, t, unnormalized=False)


def projection_cdf(spec, t):
    """``P(<w, x> <= t)`` under the (truncated) mixture, in closed form."""
    t = np.asarray(t, dtype=np.float64)
    flat = t.reshape(-1)
    ks = spec.index_range().astype(np.float64)
    weights = rho1(spec.total_width, ks - spec.weight_shift)
    weights /= math.fsum(weights)
    mus = spec.centers(ks)
    sd = spec.component_width / _SQRT_2PI
    out = np.empty_like(flat)
    for i, v in enumerate(flat):
        diff = v - mus
        if spec.truncated:
            a = spec.alpha / sd
            z = np.clip(diff, -spec.alpha, spec.alpha) / sd
            comp = (special.ndtr(z) - special.ndtr(-a)) / (special.ndtr(a) - special.ndtr(-a))
        else:
            comp = special.ndtr(diff / sd)
        out[i] = math.fsum(comp * weights)
    return out.reshape(t.shape)


def hclwe_density(spec, x):
    """Normalised n-dimensional density: projection density times ``rho`` on ``w^perp``."""
    w = spec.base.w
    x = np.asarray(x, dtype=np.float64).reshape(-1, spec.base.n)
    t = x @ w
    perp = x - t[:, None] * w[None, :]
    vals = projection_density(spec, t) * rho(1.0, perp)
    return vals if vals.size > 1 else float(vals[0])


def _sample_offsets(spec, size, rng):
    sigma = spec.component_width / _SQRT_2PI
    off = rng.standard_normal(size) * sigma
    if spec.truncated:
        bad = np.flatnonzero(np.abs(off) > spec.alpha)
        while bad.size:
            off[bad] = rng.standard_normal(bad.size) * sigma
            bad = bad[np.abs(off[bad]) > spec.alpha]
    return off


def sample_projection(spec, rng, size):
    """Component indices and ``<w, x>`` values of mixture draws."""
    k = discrete_gaussian_sample(spec.total_width, rng, size, shift=spec.weight_shift)
    k = np.atleast_1d(k)
    t = spec.centers(k) + _sample_offsets(spec, k.size, rng)
    return k, t


def _embed(spec, t, rng):
    w = spec.base.w
    g = sample_gaussian(spec.base.n, t.size, rng)
    g -= np.outer(g @ w, w)
    return g + t[:, None] * w[None, :]


def sample_hclwe_direct(spec, rng, size):
    if spec.truncated:
        raise ParameterError("sample_hclwe_direct expects an untruncated spec")
    _, t = sample_projection(spec, rng, size)
    return _embed(spec, t, rng)


def sample_nhclwe(spec, rng, size):
    if not spec.truncated:
        raise ParameterError("sample_nhclwe needs a truncation radius alpha")
    _, t = sample_projection(spec, rng, size)
    return _embed(spec, t, rng)


# --- rejection reduction -----------------------------------------------------

@dataclass(frozen=True)
class RejectionConfig:
    """Acceptance function ``g(z) = g0(z) / M`` with ``g0(z) = sum_k rho_delta(z + k + c)``."""

    delta: float
    c: float
    M: float

    @classmethod
    def build(cls, delta, c=0.0, grid=10_000):
        if not 0 < delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {delta}")
        if not 0 <= c < 1:
            raise ParameterError(f"c must lie in [0, 1), got {c}")
        M = theta_mass(delta)
        cfg = cls(delta, c, M)
        zs = np.arange(grid) / grid
        peak = float(np.max(cfg.g0(zs)))
        if peak > M * (1 + 1e-12):
            raise ArithmeticError(f"g0 exceeds its presumed supremum: {peak} > {M}")
        if not M < 4:
            raise ArithmeticError(f"normaliser M={M} is not below 4")
        return cfg

    def g0(self, z):
        return wrapped_rho(self.delta, np.asarray(z, dtype=np.float64) + self.c)

    def g(self, z):
        return self.g0(z) / self.M


def default_delta(beta):
    """``sqrt(3) beta``: the reduction then outputs noise width exactly ``2 beta``."""
    return math.sqrt(3.0) * beta


def _accept(cfg, z, rng):
    u = rng.random(np.shape(z))
    return u < cfg.g(z)


def reject_transform(p, cfg, samples, rng):
    """Keep each CLWE ``y`` with probability ``g(z)``; returns ``(accepted_y, mask)``."""
    if p.beta > p.gamma:
        raise ParameterError("reduction needs beta <= gamma")
    mask = _accept(cfg, samples.z, rng)
    return samples.y[mask], mask


def reject_transform_null(cfg, y, z, rng):
    """Same acceptance rule applied to independent Gaussian/uniform input."""
    mask = _accept(cfg, z, rng)
    return np.asarray(y)[mask], mask


def acceptance_rate(p, cfg):
    """Closed-form probability that :func:`reject_transform` keeps a CLWE sample."""
    s = math.sqrt(p.beta ** 2 + cfg.delta ** 2 + p.gamma ** 2)
    return cfg.delta * theta_mass(s, shift=-cfg.c) / (s * cfg.M)


def null_acceptance_rate(cfg):
    return cfg.delta / cfg.M


def reduction_output_spec(p, cfg, alpha=None):
    """The hCLWE law produced by :func:`reject_transform` (always the conditional form)."""
    out_beta = math.hypot(p.beta, cfg.delta)
    return HCLWESpec(p, cfg.c, out_beta, alpha=alpha, form="conditional")


def sample_hclwe_via_reduction(p, cfg, rng, size, batch=None):
    """Run CLWE samples through :func:`reject_transform` until ``size`` are accepted."""
    rate = acceptance_rate(p, cfg)
    batch = batch or max(1024, int(1.2 * size / rate))
    out = []
    have = 0
    while have < size:
        ys, _ = reject_transform(p, cfg, sample_clwe(p, rng, batch), rng)
        out.append(ys)
        have += ys.shape[0]
    return np.concatenate(out)[:size]
