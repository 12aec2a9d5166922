"""Planted polynomial threshold classifier for the pancake mixture.

The classifier looks only at ``t = <w, x>``.  Its polynomial is the monic
product of ``(t - r)`` over ``4d`` roots, two around each of the ``2d``
central negative bands, so it is negative exactly on those bands.  Signs are
computed by counting roots below ``t``; coefficient and lifted-halfspace
forms are kept in exact dyadic arithmetic because the expansion is far too
ill-conditioned for plain float64.
"""

import enum
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .gaussian import TailTruncation, rho1, theta_mass
from .instance import EmbeddingSpec, MixtureParams, _exact
from .samplers import CLWEParams, ParameterError

ORACLE_FORMAT_VERSION = 1


# --- intervals ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IntervalFamily:
    """Band centres of both label families over a certified index range."""

    params: MixtureParams
    k: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    alpha: float
    spacing: float
    gap: float

    @property
    def w(self):
        return self.params.base.w

    def index(self, k):
        return int(k) - int(self.k[0])


def band_gap(params):
    """Smallest distance between a positive and a negative band centre (exact)."""
    return params.margin() + 2 * _exact(params.alpha)


def build_intervals(params, min_index=0, eps_tail=1e-16):
    params.check_disjoint()
    K = TailTruncation.for_width(params.spec_plus.total_width, eps_tail).K
    K = max(K, int(min_index)) + 2
    ks = np.arange(-K, K + 1)
    return IntervalFamily(
        params=params,
        k=ks,
        mu_plus=params.spec_plus.centers(ks),
        mu_minus=params.spec_minus.centers(ks),
        alpha=params.alpha,
        spacing=params.spec_plus.spacing,
        gap=float(band_gap(params)),
    )


# --- the oracle --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OraclePTF:
    w: np.ndarray
    roots: np.ndarray
    d: int
    params: dict

    @property
    def degree(self):
        return self.roots.size

    def to_dict(self):
        return {
            "format_version": ORACLE_FORMAT_VERSION,
            "kind": "oracle_ptf",
            "d": self.d,
            "degree": self.degree,
            "w": [float(v) for v in self.w],
            "roots": [float(r) for r in self.roots],
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format_version") != ORACLE_FORMAT_VERSION or doc.get("kind") != "oracle_ptf":
            raise ValueError("not a supported oracle document")
        roots = np.array(doc["roots"], dtype=np.float64)
        return cls(np.array(doc["w"], dtype=np.float64), roots, int(doc["d"]), doc.get("params", {}))


def params_echo(params):
    return {
        "n": params.n, "gamma": params.gamma, "beta": params.base.beta,
        "out_beta": params.out_beta, "alpha": params.alpha,
        "c_plus": params.c_plus, "c_minus": params.c_minus, "form": params.form,
    }


def build_oracle(fam, d):
    """Roots halfway between each central negative band and its two positive neighbours."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if fam.k[0] > -d or fam.k[-1] < d + 1:
        raise ValueError("interval family does not cover the central bands")
    plus = fam.params.spec_plus
    roots = []
    for k in range(-d + 1, d + 1):
        mu = fam.mu_minus[fam.index(k)]
        j = math.floor((mu - plus.centers(0)) / fam.spacing)
        left, right = plus.centers(j), plus.centers(j + 1)
        roots.append(0.5 * (left + mu))
        roots.append(0.5 * (mu + right))
    roots = np.array(roots)
    if np.any(np.diff(roots) <= 0):
        raise ArithmeticError("oracle roots are not strictly increasing")
    return OraclePTF(np.array(fam.w), roots, int(d), params_echo(fam.params))


def oracle_for(params, d):
    return build_oracle(build_intervals(params, d + 1), d)


def sign_from_roots(roots, t):
    """+1 when an even number of roots lies strictly below ``t`` (or ``t`` is a root)."""
    t = np.asarray(t, dtype=np.float64)
    below = np.searchsorted(roots, t, side="left")
    on_root = np.searchsorted(roots, t, side="right") != below
    out = np.where((below % 2 == 0) | on_root, 1, -1).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def classify(o, x):
    x = np.asarray(x, dtype=np.float64)
    return sign_from_roots(o.roots, x @ o.w)


def distance_to_roots(o, t):
    t = np.asarray(t, dtype=np.float64)
    i = np.clip(np.searchsorted(o.roots, t), 1, o.roots.size - 1)
    return np.minimum(np.abs(t - o.roots[i - 1]), np.abs(t - o.roots[i]))


# --- exact coefficient form ----------------------------------------------------

def _dyadic(values):
    """Common power-of-two exponent ``E`` and integers ``N`` with ``v = N / 2^E``."""
    fr = [Fraction(float(v)) for v in values]
    E = max((f.denominator.bit_length() - 1 for f in fr), default=0)
    return [f.numerator << (E - (f.denominator.bit_length() - 1)) for f in fr], E


def _int_poly_from_roots(R):
    coeffs = [1]
    for r in R:
        nxt = [0] * (len(coeffs) + 1)
        for j, c in enumerate(coeffs):
            nxt[j + 1] += c
            nxt[j] -= r * c
        coeffs = nxt
    return coeffs


def monic_from_roots(roots):
    """Exact coefficients (constant term first) of ``prod (t - r)`` for float roots."""
    R, E = _dyadic(roots)
    N = _int_poly_from_roots(R)
    D = len(R)
    return [Fraction(c, 1 << (E * (D - j))) for j, c in enumerate(N)]


def ptf_coefficients(o):
    return monic_from_roots(o.roots)


def poly_sign_exact(coeffs, t):
    """Sign of ``sum c_j t^j`` evaluated exactly (Horner over rationals); zero maps to +1."""
    out = np.empty(np.size(t), dtype=np.int8)
    for i, tv in enumerate(np.atleast_1d(np.asarray(t, dtype=np.float64))):
        tf = Fraction(float(tv))
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * tf + c
        out[i] = 1 if acc >= 0 else -1
    return out


# --- lifted halfspace --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LTFWeights:
    """Halfspace ``W = V / 2^exponent`` in the monomial basis of ``spec``.

    ``hi + lo`` is a double-double copy of ``V / 2^scale``; rescaling by a
    positive constant does not change any sign.
    """

    spec: EmbeddingSpec
    numerators: tuple
    exponent: int
    scale: int
    hi: np.ndarray
    lo: np.ndarray

    def exact(self, i):
        return Fraction(self.numerators[i], 1 << self.exponent)

    def as_float(self):
        return self.hi.copy()

    def to_dict(self):
        return {
            "format_version": ORACLE_FORMAT_VERSION,
            "kind": "ltf_weights",
            "embedding": self.spec.to_dict(),
            "exponent": self.exponent,
            "numerators": [str(v) for v in self.numerators],
            "weights_scaled": [float(v) for v in self.hi],
            "scale": self.scale,
        }


def ltf_weights(o, spec):
    """Expand ``sum_j c_j <w, x>^j`` into the monomial basis of ``spec``."""
    if spec.deg < o.degree:
        raise ParameterError(f"embedding degree {spec.deg} is below the oracle degree {o.degree}")
    if spec.n != o.w.size:
        raise ParameterError("embedding dimension differs from the secret dimension")
    R, E = _dyadic(o.roots)
    N = _int_poly_from_roots(R)
    D = len(R)
    A, F = _dyadic(o.w)
    G = max(E * (D - j) + F * j for j in range(D + 1))
    exps = spec.exponents
    fact = [math.factorial(i) for i in range(spec.deg + 1)]
    # w^alpha built incrementally along the same parent links as the embedding
    wpow = [1] * spec.n_monomials
    nums = [0] * spec.M
    for i in range(spec.n_monomials):
        if i:
            wpow[i] = wpow[spec.parent[i]] * A[spec.var[i]]
        j = int(exps[i].sum())
        if j > D:
            continue
        mult = fact[j]
        for a in exps[i]:
            mult //= fact[a]
        nums[i] = N[j] * mult * wpow[i] << (G - E * (D - j) - F * j)
    top = max(abs(v) for v in nums)
    scale = top.bit_length()
    hi = np.empty(spec.M)
    lo = np.empty(spec.M)
    for i, v in enumerate(nums):
        fv = Fraction(v, 1 << scale)
        hi[i] = float(fv)
        lo[i] = float(fv - Fraction(hi[i]))
    return LTFWeights(spec, tuple(nums), G, scale, hi, lo)


def _ltf_value_exact(lw, x):
    X, H = _dyadic(x)
    spec = lw.spec
    mono = [1] * spec.n_monomials
    total = 0
    deg = spec.deg
    for i in range(spec.n_monomials):
        if i:
            mono[i] = mono[spec.parent[i]] * X[spec.var[i]]
        v = lw.numerators[i]
        if v:
            j = int(spec.exponents[i].sum())
            total += v * mono[i] << (H * (deg - j))
    return total


def ltf_sign(lw, X, return_fallbacks=False):
    """``sign(<W, phi(x)>)`` per row with ties mapped to +1.

    A double-double pass settles every point whose value clears a
    conservative rounding bound; the rest are evaluated exactly.
    """
    spec = lw.spec
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != spec.n:
        raise ValueError(f"expected {spec.n} coordinates")
    k = spec.n_monomials
    hi, lo, absum = kernels.monomial_dot_dd(X, spec.parent, spec.var, lw.hi[:k], lw.lo[:k])
    bound = (spec.deg + k + 4) * 4.0 * 2.0 ** -100 * absum + 1e-290
    val = hi + lo
    out = np.where(val >= 0, 1, -1).astype(np.int8)
    unsure = np.flatnonzero(~(np.abs(val) > bound) | ~np.isfinite(absum))
    for i in unsure:
        out[i] = 1 if _ltf_value_exact(lw, X[i]) >= 0 else -1
    if return_fallbacks:
        return out, int(unsure.size)
    return out


# --- exact error and regions ---------------------------------------------------

def oracle_error_exact(params, d, eps_tail=1e-16):
    """Half the negative-family mass on components outside ``-d+1 .. d``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    spec = params.spec_minus
    s = spec.total_width
    shift = spec.weight_shift
    K = TailTruncation.for_width(s, eps_tail).K
    far = max(K, d) + K + 2
    left = np.arange(-far, -d + 1, dtype=np.float64)
    right = np.arange(d + 1, far + 1, dtype=np.float64)
    terms = np.sort(rho1(s, np.concatenate([left, right]) - shift))
    return 0.5 * math.fsum(terms) / theta_mass(s, shift=-shift)


def oracle_error_bound(params, d):
    """``exp(-pi d^2 / (out_beta^2 + gamma^2))``."""
    return math.exp(-math.pi * d * d / (params.out_beta ** 2 + params.gamma ** 2))


class Region(enum.IntEnum):
    ALWAYS_CORRECT = 0
    ALWAYS_WRONG = 1
    OFF_SUPPORT = 2


def region_of_projection(params, d, t):
    t = np.asarray(t, dtype=np.float64)
    plus, minus = params.spec_plus, params.spec_minus
    g = plus.spacing
    kp = np.rint((t - plus.centers(0)) / g)
    km = np.rint((t - minus.centers(0)) / g)
    in_plus = np.abs(t - plus.centers(kp)) <= params.alpha
    in_minus = np.abs(t - minus.centers(km)) <= params.alpha
    central = (km >= -d + 1) & (km <= d)
    out = np.full(t.shape, Region.OFF_SUPPORT, dtype=np.int8)
    out[in_minus & ~central] = Region.ALWAYS_WRONG
    out[in_minus & central] = Region.ALWAYS_CORRECT
    out[in_plus] = Region.ALWAYS_CORRECT
    return int(out) if out.ndim == 0 else out


def conditional_error_class(o, params, x):
    x = np.asarray(x, dtype=np.float64)
    return region_of_projection(params, o.d, x @ o.w)


def save_oracle(o, path):
    with open(path, "w") as fh:
        json.dump(o.to_dict(), fh, indent=1, sort_keys=True)


def load_oracle(path):
    with open(path) as fh:
        return OraclePTF.from_dict(json.load(fh))


def params_from_echo(echo, w):
    base = CLWEParams(echo["n"], echo["gamma"], echo["beta"], w)
    return MixtureParams(base, echo["out_beta"], echo["alpha"], echo["c_plus"], echo["c_minus"], echo["form"])
