"""Gaussian mass functions in the rho-parameterisation and discrete Gaussians over Z.

Widths ``s`` follow ``rho_s(x) = exp(-pi ||x / s||^2)``; the probability
density ``rho_s / s^n`` has per-coordinate variance ``s^2 / (2 pi)``.  Use
:func:`width_to_sigma` / :func:`sigma_to_width` to move between the two
conventions; nothing else in the package converts implicitly.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels

DEFAULT_EPS_TAIL = 1e-16
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_width(s):
    if not (math.isfinite(s) and s > 0):
        raise ValueError(f"width must be positive and finite, got {s!r}")


def width_to_sigma(s):
    """Standard deviation of the density ``rho_s / s`` (i.e. ``s / sqrt(2 pi)``)."""
    _check_width(s)
    return s / _SQRT_2PI


def sigma_to_width(sigma):
    """Inverse of :func:`width_to_sigma`."""
    _check_width(sigma)
    return sigma * _SQRT_2PI


def rho(s, x):
    """``exp(-pi ||x/s||^2)`` with the norm taken over the last axis.

    Scalars and 1-d arrays are treated as a single vector; an ``(m, n)``
    array gives ``m`` values.
    """
    _check_width(s)
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("rho is undefined for non-finite input")
    if x.ndim == 0:
        return math.exp(-math.pi * float(x) ** 2 / (s * s))
    sq = np.sum((x / s) ** 2, axis=-1)
    out = np.exp(-math.pi * sq)
    return float(out) if out.ndim == 0 else out


def rho1(s, t):
    """Elementwise scalar ``rho_s`` on an array of reals."""
    t = np.asarray(t, dtype=np.float64)
    return np.exp(-math.pi * (t / s) ** 2)


@dataclass(frozen=True)
class TailTruncation:
    """Cutoff ``K`` for sums over Z together with its certified neglected mass."""

    K: int
    eps_tail: float

    @classmethod
    def for_width(cls, s, eps_tail=DEFAULT_EPS_TAIL):
        _check_width(s)
        if not 0 < eps_tail < 1:
            raise ValueError("eps_tail must lie in (0, 1)")
        K = math.ceil(s * math.sqrt(math.log(2.0 / eps_tail) / math.pi)) + 1
        while tail_mass_bound(s, K) > eps_tail:
            K += 1
        return cls(K, eps_tail)


def tail_mass_bound(s, K):
    """Upper bound on ``sum_{|k| > K} rho_s(k)``.

    The integral comparison ``sum_{k>K} f(k) <= int_K^inf f`` gives
    ``s * erfc(sqrt(pi) K / s)`` for both tails together; the cited
    ``2 exp(-pi K^2 / s^2)`` bound is also returned when it is smaller.
    """
    integral = s * special.erfc(math.sqrt(math.pi) * K / s)
    first_terms = 2.0 * math.exp(-math.pi * (K + 1) ** 2 / (s * s))
    ratio = math.exp(-math.pi * (2 * K + 3) / (s * s))
    geometric = first_terms / (1.0 - ratio) if ratio < 1 else math.inf
    return min(integral, geometric)


def _trunc(s, trunc):
    return trunc if trunc is not None else TailTruncation.for_width(s)


def theta_mass(s, trunc=None, shift=0.0):
    """``rho_s(Z + shift) = sum_k rho_s(k + shift)`` summed smallest term first."""
    _check_width(s)
    trunc = _trunc(s, trunc)
    r = shift - math.floor(shift)
    ks = np.arange(-trunc.K - 1, trunc.K + 1, dtype=np.float64) + r
    terms = np.sort(rho1(s, ks))
    return math.fsum(terms)


def wrapped_rho(s, t, trunc=None):
    """``sum_{k in Z} rho_s(t + k)`` for an array of ``t`` (period-1 Gaussian comb)."""
    _check_width(s)
    trunc = _trunc(s, trunc)
    return kernels.wrapped_rho_sum(s, t, trunc.K)


@dataclass(frozen=True)
class TruncatedGaussianSpec:
    """``rho_s(. ; c)`` restricted to ``|x - c| <= alpha`` and rescaled by ``1/Z``.

    ``Z`` is the full mass over the truncated mass, so the truncated function
    integrates to ``s`` like the untruncated one.
    """

    center: float
    width: float
    radius: float

    def __post_init__(self):
        _check_width(self.width)
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"truncation radius must be positive, got {self.radius!r}")

    @property
    def normalizer(self):
        inside = 1.0 - special.erfc(math.sqrt(math.pi) * self.radius / self.width)
        return 1.0 / inside


def rho_truncated(spec, x):
    x = np.asarray(x, dtype=np.float64)
    vals = rho1(spec.width, x - spec.center) * spec.normalizer
    out = np.where(np.abs(x - spec.center) <= spec.radius, vals, 0.0)
    return float(out) if out.ndim == 0 else out


def discrete_gaussian_support(s, trunc=None):
    """Support ``[-K, K]`` and normalised probabilities of ``D_{Z,s}``."""
    trunc = _trunc(s, trunc)
    ks = np.arange(-trunc.K, trunc.K + 1)
    p = rho1(s, ks.astype(np.float64))
    return ks, p / theta_mass(s, trunc)


def discrete_gaussian_sample(s, rng, size=None, trunc=None, shift=0.0):
    """Draw from ``D_{Z,s}`` (or from ``k`` with mass ``rho_s(k - shift)``) by inverse CDF."""
    _check_width(s)
    trunc = _trunc(s, trunc)
    base = math.floor(shift)
    ks = np.arange(-trunc.K, trunc.K + 1) + base
    w = rho1(s, ks - shift)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, ks.size - 1)
    out = ks[idx]
    return int(out) if np.ndim(out) == 0 else out


def discrete_gaussian_two_sided_tail(s, d, trunc=None):
    """Exact ``P(|U| >= d)`` for ``U ~ D_{Z,s}``."""
    _check_width(s)
    if d < 1:
        raise ValueError("d must be a positive integer")
    trunc = _trunc(s, trunc)
    stop = max(d, trunc.K) + trunc.K + 1
    ks = np.arange(d, stop + 1, dtype=np.float64)
    tail = math.fsum(np.sort(rho1(s, ks)))
    return 2.0 * tail / theta_mass(s, trunc)


def discrete_gaussian_tail_bound(s, d):
    return 2.0 * math.exp(-math.pi * d * d / (s * s))


def gaussian_product_decompose(r1, c1, r2, c2):
    """Widths and centre with ``rho_r1(x-c1) rho_r2(x-c2) = rho_r0(c1-c2) rho_r3(x-c3)``."""
    _check_width(r1)
    _check_width(r2)
    c1 = np.asarray(c1, dtype=np.float64)
    c2 = np.asarray(c2, dtype=np.float64)
    if c1.shape != c2.shape:
        raise ValueError(f"centre dimensions differ: {c1.shape} vs {c2.shape}")
    r0 = math.hypot(r1, r2)
    r3 = r1 * r2 / r0
    c3 = (r3 * r3 / (r1 * r1)) * c1 + (r3 * r3 / (r2 * r2)) * c2
    return r0, r3, c3


def poisson_residual(s, trunc=None):
    """Relative gap between ``rho_s(Z)`` and its dual form ``s * rho_{1/s}(Z)``."""
    _check_width(s)
    direct = theta_mass(s, trunc)
    dual = s * theta_mass(1.0 / s)
    return abs(direct - dual) / direct
