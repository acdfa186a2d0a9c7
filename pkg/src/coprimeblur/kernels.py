"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names at the bottom of the module are bound to one backend at
import time (see :mod:`coprimeblur._accel`). Both variants stay importable
under ``*_nb`` / ``*_np`` so the benchmark and the tests can compare them.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# -- full 2D convolution -----------------------------------------------------

def conv2_full_np(a, b):
    ma, na = a.shape
    mb, nb = b.shape
    if ma * na < mb * nb:
        a, b = b, a
        ma, na, mb, nb = mb, nb, ma, na
    out = np.zeros((ma + mb - 1, na + nb - 1), dtype=np.result_type(a, b))
    # shift-and-add over the taps of the smaller operand
    for i in range(mb):
        for j in range(nb):
            w = b[i, j]
            if w != 0:
                out[i:i + ma, j:j + na] += w * a
    return out


@njit
def _conv2_full_loop(a, b, out):
    ma, na = a.shape
    mb, nb = b.shape
    for i in range(mb):
        for j in range(nb):
            w = b[i, j]
            if w == 0:
                continue
            for m in range(ma):
                for n in range(na):
                    out[i + m, j + n] += w * a[m, n]


def conv2_full_nb(a, b):
    if a.size < b.size:
        a, b = b, a
    dtype = np.result_type(a, b)
    if dtype == object:
        return conv2_full_np(a, b)
    a = np.ascontiguousarray(a, dtype=dtype)
    b = np.ascontiguousarray(b, dtype=dtype)
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=dtype)
    _conv2_full_loop(a, b, out)
    return out


# -- Bezout matrix leading block ---------------------------------------------

def bezout_block_np(p, q, s):
    dtype = np.result_type(p, q)
    pp = np.zeros(2 * s + 1, dtype=dtype)
    qq = np.zeros(2 * s + 1, dtype=dtype)
    n = min(len(p), 2 * s + 1)
    pp[:n] = p[:n]
    n = min(len(q), 2 * s + 1)
    qq[:n] = q[:n]
    i, j = np.indices((s, s))
    idx = i + j + 1
    out = np.zeros((s, s), dtype=dtype)
    for k in range(s):
        mask = (i >= k) & (j >= k)
        term = pp[idx - k] * qq[k] - qq[idx - k] * pp[k]
        out = np.where(mask, out + term, out)
    return out


@njit
def _bezout_loop(pp, qq, out):
    s = out.shape[0]
    for i in range(s):
        for j in range(s):
            acc = out[i, j] * 0
            for k in range(min(i, j) + 1):
                acc += pp[i + j + 1 - k] * qq[k] - qq[i + j + 1 - k] * pp[k]
            out[i, j] = acc


def bezout_block_nb(p, q, s):
    dtype = np.result_type(p, q)
    if dtype == object:
        return bezout_block_np(p, q, s)
    pp = np.zeros(2 * s + 1, dtype=dtype)
    qq = np.zeros(2 * s + 1, dtype=dtype)
    n = min(len(p), 2 * s + 1)
    pp[:n] = p[:n]
    n = min(len(q), 2 * s + 1)
    qq[:n] = q[:n]
    out = np.zeros((s, s), dtype=dtype)
    _bezout_loop(pp, qq, out)
    return out


# -- banded Toeplitz (multiplication) matrix ----------------------------------

def conv_matrix_np(p, t, rows):
    """Columns are ``p`` shifted down by 0..t-1; ``T @ k == convolve(p, k)``."""
    out = np.zeros((rows, t), dtype=np.result_type(p, np.float64))
    n = len(p)
    for c in range(t):
        out[c:c + n, c] = p
    return out


@njit
def _conv_matrix_loop(p, out):
    t = out.shape[1]
    n = p.shape[0]
    for c in range(t):
        for r in range(n):
            out[c + r, c] = p[r]


def conv_matrix_nb(p, t, rows):
    dtype = np.result_type(p, np.float64)
    p = np.ascontiguousarray(p, dtype=dtype)
    out = np.zeros((rows, t), dtype=dtype)
    _conv_matrix_loop(p, out)
    return out


# -- regularized spectral division --------------------------------------------

def wiener_divide_np(num, den, eps):
    """In place: ``num *= conj(den) / (|den|**2 + eps)``; zero where undefined."""
    power = den.real ** 2 + den.imag ** 2
    num *= np.conj(den)
    if eps > 0:
        num /= power + eps
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            num /= power
        num[~np.isfinite(num)] = 0
    return num


@njit
def _wiener_divide_loop(num, den, eps):
    flat_n = num.ravel()
    flat_d = den.ravel()
    for i in range(flat_n.size):
        d = flat_d[i]
        p = d.real * d.real + d.imag * d.imag + eps
        if p > 0:
            flat_n[i] = flat_n[i] * d.conjugate() / p
        else:
            flat_n[i] = 0


def wiener_divide_nb(num, den, eps):
    if not (num.flags.c_contiguous and den.flags.c_contiguous):
        return wiener_divide_np(num, den, eps)
    _wiener_divide_loop(num, den, float(eps))
    return num


if USE_NUMBA:
    conv2_full = conv2_full_nb
    bezout_block = bezout_block_nb
    conv_matrix = conv_matrix_nb
    wiener_divide = wiener_divide_nb
else:
    conv2_full = conv2_full_np
    bezout_block = bezout_block_np
    conv_matrix = conv_matrix_np
    wiener_divide = wiener_divide_np

BACKEND = "numba" if USE_NUMBA else "numpy"
