"""Hot inner loops, each with a numba-compiled and a pure-numpy implementation.

The public names (``wrapped_rho_sum``, ``monomials``, ``monomial_dot_dd``,
``perceptron_train``) dispatch on :data:`clwe_hardness._accel.USE_NUMBA`.
The ``*_numpy`` and ``*_numba`` variants stay importable so tests and the
benchmark can compare them directly.

Double-double helpers follow Dekker/Knuth error-free transformations and
avoid FMA so that both backends perform the same IEEE operations.
"""

import math

import numpy as np

from . import _accel

_SPLITTER = 134217729.0  # 2**27 + 1
_CHUNK = 8192


# --- double-double primitives (scalar- and array-polymorphic) ---------------

def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a, b):
    s = a + b
    err = b - (s - a)
    return s, err


def split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def dd_mul_d(ah, al, b):
    p, e = two_prod(ah, b)
    e = e + al * b
    return quick_two_sum(p, e)


def dd_mul_dd(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return quick_two_sum(p, e)


def dd_add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    t, f = two_sum(al, bl)
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    return quick_two_sum(s, e)


# --- periodic Gaussian sum ---------------------------------------------------

def wrapped_rho_sum_numpy(s, t, K):
    """Return ``sum_{|k| <= K+1} exp(-pi ((frac(t) + k) / s)^2)`` for each t."""
    t = np.asarray(t, dtype=np.float64)
    flat = t.ravel()
    r = flat - np.floor(flat)
    ks = np.arange(-K - 1, K + 1, dtype=np.float64)
    out = np.empty_like(r)
    step = max(1, (1 << 22) // ks.size)
    for lo in range(0, r.size, step):
        u = (r[lo:lo + step, None] + ks[None, :]) / s
        out[lo:lo + step] = np.exp(-math.pi * u * u).sum(axis=1)
    return out.reshape(t.shape)


def _wrapped_rho_sum_loop(s, t, K):
    out = np.empty(t.size)
    for i in range(t.size):
        r = t[i] - math.floor(t[i])
        acc = 0.0
        for k in range(-K - 1, K + 1):
            u = (r + k) / s
            acc += math.exp(-math.pi * u * u)
        out[i] = acc
    return out


_wrapped_rho_sum_jit = _accel.jit(_wrapped_rho_sum_loop)


def wrapped_rho_sum_numba(s, t, K):
    t = np.asarray(t, dtype=np.float64)
    out = _wrapped_rho_sum_jit(float(s), np.ascontiguousarray(t.ravel()), int(K))
    return out.reshape(t.shape)


# --- monomial feature map ----------------------------------------------------

def monomials_numpy(X, parent, var):
    m = X.shape[0]
    out = np.empty((m, parent.size))
    out[:, 0] = 1.0
    for j in range(1, parent.size):
        out[:, j] = out[:, parent[j]] * X[:, var[j]]
    return out


def _monomials_loop(X, parent, var):
    m = X.shape[0]
    M = parent.size
    out = np.empty((m, M))
    for i in range(m):
        out[i, 0] = 1.0
        for j in range(1, M):
            out[i, j] = out[i, parent[j]] * X[i, var[j]]
    return out


_monomials_jit = _accel.jit(_monomials_loop)


def monomials_numba(X, parent, var):
    return _monomials_jit(np.ascontiguousarray(X, dtype=np.float64), parent, var)


# --- extended-precision <W, phi(x)> -----------------------------------------

def monomial_dot_dd_numpy(X, parent, var, w_hi, w_lo):
    """Double-double evaluation of ``sum_j W_j x^{alpha_j}`` for each row of X.

    Returns ``(hi, lo, absum)`` where ``absum`` is the float sum of the term
    magnitudes, used by callers to bound the rounding error.
    """
    m = X.shape[0]
    M = parent.size
    hi_out = np.empty(m)
    lo_out = np.empty(m)
    abs_out = np.empty(m)
    for start in range(0, m, _CHUNK):
        Xc = X[start:start + _CHUNK]
        c = Xc.shape[0]
        mh = np.empty((M, c))
        ml = np.empty((M, c))
        mh[0] = 1.0
        ml[0] = 0.0
        acc_h = np.full(c, w_hi[0])
        acc_l = np.full(c, w_lo[0])
        absum = np.full(c, abs(w_hi[0]))
        for j in range(1, M):
            p = parent[j]
            xv = Xc[:, var[j]]
            mh[j], ml[j] = dd_mul_d(mh[p], ml[p], xv)
            th, tl = dd_mul_dd(w_hi[j], w_lo[j], mh[j], ml[j])
            acc_h, acc_l = dd_add(acc_h, acc_l, th, tl)
            absum += np.abs(th)
        hi_out[start:start + c] = acc_h
        lo_out[start:start + c] = acc_l
        abs_out[start:start + c] = absum
    return hi_out, lo_out, abs_out


if _accel.HAVE_NUMBA:
    _two_sum_nb = _accel.jit(two_sum)
    _quick_two_sum_nb = _accel.jit(quick_two_sum)
    _split_nb = _accel.jit(split)

    @_accel.numba.njit(cache=True, nogil=True)
    def _two_prod_nb(a, b):
        p = a * b
        ah, al = _split_nb(a)
        bh, bl = _split_nb(b)
        err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
        return p, err

    @_accel.numba.njit(cache=True, nogil=True)
    def _monomial_dot_dd_loop(X, parent, var, w_hi, w_lo):
        m = X.shape[0]
        M = parent.size
        hi_out = np.empty(m)
        lo_out = np.empty(m)
        abs_out = np.empty(m)
        mh = np.empty(M)
        ml = np.empty(M)
        for i in range(m):
            mh[0] = 1.0
            ml[0] = 0.0
            acc_h = w_hi[0]
            acc_l = w_lo[0]
            absum = abs(w_hi[0])
            for j in range(1, M):
                p = parent[j]
                xv = X[i, var[j]]
                ph, pl = _two_prod_nb(mh[p], xv)
                pl = pl + ml[p] * xv
                mh[j], ml[j] = _quick_two_sum_nb(ph, pl)
                th, tl = _two_prod_nb(w_hi[j], mh[j])
                tl = tl + (w_hi[j] * ml[j] + w_lo[j] * mh[j])
                th, tl = _quick_two_sum_nb(th, tl)
                s, e = _two_sum_nb(acc_h, th)
                t, f = _two_sum_nb(acc_l, tl)
                e = e + t
                s, e = _quick_two_sum_nb(s, e)
                e = e + f
                acc_h, acc_l = _quick_two_sum_nb(s, e)
                absum += abs(th)
            hi_out[i] = acc_h
            lo_out[i] = acc_l
            abs_out[i] = absum
        return hi_out, lo_out, abs_out


def monomial_dot_dd_numba(X, parent, var, w_hi, w_lo):
    return _monomial_dot_dd_loop(np.ascontiguousarray(X, dtype=np.float64),
                                 parent, var, w_hi, w_lo)


# --- perceptron --------------------------------------------------------------

def perceptron_train_numpy(X, y, order, lr):
    """Online perceptron over the visit schedule ``order`` (epochs x m).

    Returns ``(w, b, w_avg, b_avg)``; the averaged iterate uses the lazy
    accumulator trick so each update costs O(n).
    """
    n = X.shape[1]
    w = np.zeros(n)
    u = np.zeros(n)
    b = 0.0
    ub = 0.0
    c = 1.0
    for epoch in range(order.shape[0]):
        for i in order[epoch]:
            xi = X[i]
            yi = y[i]
            if yi * (np.dot(xi, w) + b) <= 0.0:
                w += (lr * yi) * xi
                b += lr * yi
                u += (c * lr * yi) * xi
                ub += c * lr * yi
            c += 1.0
    return w, b, w - u / c, b - ub / c


def _perceptron_loop(X, y, order, lr):
    m, n = X.shape
    w = np.zeros(n)
    u = np.zeros(n)
    b = 0.0
    ub = 0.0
    c = 1.0
    for epoch in range(order.shape[0]):
        for idx in range(order.shape[1]):
            i = order[epoch, idx]
            yi = y[i]
            act = b
            for k in range(n):
                act += X[i, k] * w[k]
            if yi * act <= 0.0:
                for k in range(n):
                    w[k] += lr * yi * X[i, k]
                    u[k] += c * lr * yi * X[i, k]
                b += lr * yi
                ub += c * lr * yi
            c += 1.0
    return w, b, w - u / c, b - ub / c


_perceptron_jit = _accel.jit(_perceptron_loop)


def perceptron_train_numba(X, y, order, lr):
    return _perceptron_jit(np.ascontiguousarray(X, dtype=np.float64),
                           np.ascontiguousarray(y, dtype=np.float64),
                           np.ascontiguousarray(order, dtype=np.int64), float(lr))


# --- dispatch ----------------------------------------------------------------

if _accel.USE_NUMBA:
    wrapped_rho_sum = wrapped_rho_sum_numba
    monomials = monomials_numba
    monomial_dot_dd = monomial_dot_dd_numba
    perceptron_train = perceptron_train_numba
else:
    wrapped_rho_sum = wrapped_rho_sum_numpy
    monomials = monomials_numpy
    monomial_dot_dd = monomial_dot_dd_numpy
    perceptron_train = perceptron_train_numpy
