"""Labelled pancake mixtures, the null instance, and the monomial embedding."""

import hashlib
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .samplers import (
    CLWEParams,
    HCLWESpec,
    ParameterError,
    RejectionConfig,
    default_alpha,
    sample_clwe,
    sample_gaussian,
    sample_nhclwe,
    sample_secret_direction,
    reject_transform,
)

FORMAT_VERSION = 1
MONOMIAL_ORDER = "graded-lex-v1"
SHARD_SIZE = 1 << 15
MAX_EMBEDDING_DIM = 5_000_000

# spawn-key prefixes for SeedSequence streams
STREAM_SECRET = 0
STREAM_DATA = 1


def seed_stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def secret_for_seed(n, seed):
    return sample_secret_direction(n, seed_stream(seed, STREAM_SECRET))


# --- support geometry --------------------------------------------------------

def _exact(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def disjointness_margin(gamma, beta_sq, alpha=None, c_plus=0.0, c_minus=0.5, form="closed"):
    """Exact ``gap - 2 alpha`` between the two interval families, as a Fraction.

    Float inputs are converted exactly, so the sign is free of rounding.
    ``beta_sq`` is the squared output noise width, which lets callers place a
    point exactly on ``beta^2 = (3/5) gamma^2``.
    """
    g = _exact(gamma)
    b2 = _exact(beta_sq)
    s2 = b2 + g * g
    spacing = g / s2
    dc = _exact(c_minus) - _exact(c_plus)
    offset = dc * spacing if form == "conditional" else dc / g
    offset %= spacing
    gap = min(offset, spacing - offset)
    two_alpha = 2 * (g / (10 * s2) if alpha is None else _exact(alpha))
    return gap - two_alpha


def supports_disjoint(gamma, beta, alpha=None, c_plus=0.0, c_minus=0.5, form="closed"):
    return disjointness_margin(gamma, _exact(beta) ** 2, alpha, c_plus, c_minus, form) > 0


def disjointness_criterion(gamma, beta_sq):
    """Closed-form condition ``beta^2 < (3/5) gamma^2`` evaluated exactly."""
    return 5 * _exact(beta_sq) < 3 * _exact(gamma) ** 2


# --- mixture -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MixtureParams:
    """``D = 1/2 (D_+, +1) + 1/2 (D_-, -1)`` with truncated pancake components."""

    base: CLWEParams
    out_beta: float
    alpha: Optional[float] = None
    c_plus: float = 0.0
    c_minus: float = 0.5
    form: str = "closed"

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", default_alpha(self.base.gamma, self.out_beta))

    @property
    def gamma(self):
        return self.base.gamma

    @property
    def n(self):
        return self.base.n

    @property
    def spec_plus(self):
        return HCLWESpec(self.base, self.c_plus, self.out_beta, self.alpha, self.form)

    @property
    def spec_minus(self):
        return HCLWESpec(self.base, self.c_minus, self.out_beta, self.alpha, self.form)

    def margin(self):
        return disjointness_margin(self.gamma, _exact(self.out_beta) ** 2, self.alpha,
                                   self.c_plus, self.c_minus, self.form)

    def check_disjoint(self):
        if self.margin() <= 0:
            raise ParameterError(
                "interval families overlap: need beta^2 < (3/5) gamma^2 "
                f"(out_beta^2 = {self.out_beta ** 2:.6g}, (3/5) gamma^2 = {0.6 * self.gamma ** 2:.6g}, "
                f"alpha = {self.alpha:.6g})")

    def with_w(self, w):
        return replace(self, base=replace(self.base, w=w))


def desk_params(n=16, gamma=8.0, out_beta=0.02, seed=0, form="closed"):
    """Small parameter set used throughout the verification suite."""
    base = CLWEParams(n, gamma, out_beta / 2.0, secret_for_seed(n, seed))
    return MixtureParams(base, out_beta, form=form)


# --- datasets ----------------------------------------------------------------

class LabeledSample(NamedTuple):
    x: np.ndarray
    label: int


@dataclass
class DatasetManifest:
    mode: str
    n: int
    m: int
    seed: int
    gamma: Optional[float] = None
    beta: Optional[float] = None
    out_beta: Optional[float] = None
    alpha: Optional[float] = None
    c_plus: Optional[float] = None
    c_minus: Optional[float] = None
    form: Optional[str] = None
    source: str = "direct"
    embedding: Optional[dict] = None
    secret_digest: Optional[str] = None
    format_version: int = FORMAT_VERSION
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def secret_digest(w):
    return hashlib.sha256(np.asarray(w, dtype="<f8").tobytes()).hexdigest()


@dataclass(eq=False)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    manifest: DatasetManifest
    secret: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int8)
        m, n = self.x.shape
        if self.y.shape != (m,):
            raise ValueError("label vector does not match sample count")
        if self.manifest.m != m or self.manifest.n != n:
            raise ValueError(f"manifest says m={self.manifest.m}, n={self.manifest.n}; data is {m}x{n}")
        if not np.all((self.y == 1) | (self.y == -1)):
            raise ValueError("labels must be -1 or +1")

    def __len__(self):
        return self.x.shape[0]

    def __getitem__(self, i):
        return LabeledSample(self.x[i], int(self.y[i]))

    def head(self, k):
        man = replace(self.manifest, m=min(k, len(self)))
        return Dataset(self.x[:k], self.y[:k], man, self.secret)

    def tail(self, k):
        man = replace(self.manifest, m=len(self) - k)
        return Dataset(self.x[k:], self.y[k:], man, self.secret)


def _shard_sizes(m):
    return [min(SHARD_SIZE, m - lo) for lo in range(0, m, SHARD_SIZE)]


def _run_shards(fn, m, threads):
    sizes = _shard_sizes(m)
    if threads and threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, range(len(sizes)), sizes))
    else:
        parts = [fn(i, s) for i, s in enumerate(sizes)]
    if not parts:
        return np.empty((0, 0)), np.empty(0, dtype=np.int8)
    xs, ys = zip(*parts)
    return np.concatenate(xs), np.concatenate(ys)


def _reduce_family(params, spec, count, rng):
    """Reduction route: CLWE -> rejection -> keep points inside their own bands."""
    base = params.base
    delta = math.sqrt(params.out_beta ** 2 - base.beta ** 2)
    cfg = RejectionConfig.build(delta, spec.c)
    out = []
    have = 0
    batch = max(256, int(40 * count / delta) + 64)
    while have < count:
        ys, _ = reject_transform(base, cfg, sample_clwe(base, rng, batch), rng)
        t = ys @ base.w
        k = np.rint((t - spec.centers(0)) / spec.spacing)
        keep = np.abs(t - spec.centers(k)) <= spec.alpha
        out.append(ys[keep])
        have += int(keep.sum())
    return np.concatenate(out)[:count]


def generate_mixture(params, m, seed, threads=1, source="direct", check=True):
    """Labelled planted instance; each shard of ``SHARD_SIZE`` rows has its own stream."""
    if check:
        params.check_disjoint()
    if source == "reduction" and params.form != "conditional":
        raise ParameterError("the reduction route produces the conditional form; set form='conditional'")
    if source not in ("direct", "reduction"):
        raise ParameterError(f"unknown source {source!r}")
    plus, minus = params.spec_plus, params.spec_minus
    n = params.n

    def shard(i, size):
        rng = seed_stream(seed, STREAM_DATA, i)
        labels = np.where(rng.integers(0, 2, size) == 1, 1, -1).astype(np.int8)
        pos = labels > 0
        x = np.empty((size, n))
        if source == "direct":
            x[pos] = sample_nhclwe(plus, rng, int(pos.sum()))
            x[~pos] = sample_nhclwe(minus, rng, int(size - pos.sum()))
        else:
            x[pos] = _reduce_family(params, plus, int(pos.sum()), rng)
            x[~pos] = _reduce_family(params, minus, int(size - pos.sum()), rng)
        return x, labels

    x, y = _run_shards(shard, m, threads)
    x = x.reshape(m, n)
    base = params.base
    manifest = DatasetManifest(
        mode="planted", n=n, m=m, seed=seed, gamma=base.gamma, beta=base.beta,
        out_beta=params.out_beta, alpha=params.alpha, c_plus=params.c_plus,
        c_minus=params.c_minus, form=params.form, source=source,
        secret_digest=secret_digest(base.w))
    return Dataset(x, y, manifest, secret=np.array(base.w))


def generate_null(n, m, seed, threads=1):
    """``x ~ N(0, I/(2 pi))`` with independent fair labels."""

    def shard(i, size):
        rng = seed_stream(seed, STREAM_DATA, i)
        labels = np.where(rng.integers(0, 2, size) == 1, 1, -1).astype(np.int8)
        return sample_gaussian(n, size, rng), labels

    x, y = _run_shards(shard, m, threads)
    manifest = DatasetManifest(mode="null", n=n, m=m, seed=seed)
    return Dataset(x.reshape(m, n), y, manifest)


# --- monomial embedding ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmbeddingSpec:
    """Graded-lexicographic monomials of degree <= ``deg`` in ``n`` variables, padded to ``M``."""

    n: int
    deg: int
    M: Optional[int] = None
    limit: int = MAX_EMBEDDING_DIM

    def __post_init__(self):
        if self.n < 1 or self.deg < 0:
            raise ValueError("need n >= 1 and deg >= 0")
        full = math.comb(self.n + self.deg, self.n)
        if full > self.limit:
            raise ValueError(f"embedding would have {full} coordinates (limit {self.limit})")
        M = full if self.M is None else self.M
        if M < full:
            raise ValueError(f"M={M} is smaller than the {full} monomials of degree <= {self.deg}")
        object.__setattr__(self, "M", M)
        exps, parent, var = _graded_lex(self.n, self.deg)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "var", var)

    @property
    def n_monomials(self):
        return self.exponents.shape[0]

    def to_dict(self):
        return {"n": self.n, "deg": self.deg, "M": self.M, "order": MONOMIAL_ORDER}

    @classmethod
    def from_dict(cls, d):
        if d.get("order", MONOMIAL_ORDER) != MONOMIAL_ORDER:
            raise ValueError(f"unsupported monomial order {d['order']!r}")
        return cls(d["n"], d["deg"], d["M"])


def _graded_lex(n, deg):
    combos = [()]
    for j in range(1, deg + 1):
        combos.extend(itertools.combinations_with_replacement(range(n), j))
    index = {c: i for i, c in enumerate(combos)}
    exps = np.zeros((len(combos), n), dtype=np.int64)
    parent = np.full(len(combos), -1, dtype=np.int64)
    var = np.zeros(len(combos), dtype=np.int64)
    for i, c in enumerate(combos):
        for v in c:
            exps[i, v] += 1
        if c:
            parent[i] = index[c[:-1]]
            var[i] = c[-1]
    return exps, parent, var


def embed_monomials(spec, x):
    """``phi(x) = ((x^alpha)_{|alpha| <= deg}, 0)`` in float64, one row per input row."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x.reshape(-1, spec.n)
    if X.shape[1] != spec.n:
        raise ValueError(f"expected {spec.n} coordinates, got {X.shape[1]}")
    phi = kernels.monomials(X, spec.parent, spec.var)
    if not np.all(np.isfinite(phi)):
        raise OverflowError("monomial embedding overflowed")
    if spec.M > phi.shape[1]:
        phi = np.hstack([phi, np.zeros((phi.shape[0], spec.M - phi.shape[1]))])
    return phi[0] if single else phi
