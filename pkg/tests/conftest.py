"""Shared fixtures and the independent oracles the tests check against.

The oracles never call into the package's numerical paths: convolution is a
plain double loop, Bezout matrices and GCDs come from sympy in exact
rational arithmetic.
"""
from fractions import Fraction

import numpy as np
import pytest
import sympy

from coprimeblur.encoder import BlurKernel, CoprimePair, encode_frame, generate_coprime_pair
from coprimeblur.frames import Frame

X, Y = sympy.symbols("x y")


def conv_loop(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=np.result_type(a, b))
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            acc = 0
            for m in range(a.shape[0]):
                for n in range(a.shape[1]):
                    if 0 <= i - m < b.shape[0] and 0 <= j - n < b.shape[1]:
                        acc += a[m, n] * b[i - m, j - n]
            out[i, j] = acc
    return out


def poly1(coeffs, var=X):
    return sum(sympy.Rational(c) * var ** k for k, c in enumerate(coeffs))


def poly2(arr):
    arr = np.asarray(arr)
    return sum(sympy.Integer(int(arr[m, n])) * X ** m * Y ** n
               for m in range(arr.shape[0]) for n in range(arr.shape[1]))


def coeffs2(expr, shape):
    p = sympy.Poly(sympy.expand(expr), X, Y)
    out = np.zeros(shape, dtype=object)
    for (m, n), c in p.terms():
        out[m, n] = c
    return out


def bezout_sympy(p, q, size):
    """Full ``size x size`` Bezout matrix from the generating function, exactly."""
    fx, gx = poly1(p, X), poly1(q, X)
    fy, gy = fx.subs(X, Y), gx.subs(X, Y)
    gen = sympy.Poly(sympy.cancel((fx * gy - fy * gx) / (X - Y)), X, Y)
    out = sympy.zeros(size, size)
    for (i, j), c in gen.terms():
        if i < size and j < size:
            out[i, j] = c
    return out


def exact_rank(mtx):
    return sympy.Matrix(mtx).rank()


def aligned_error(got, truth):
    got = np.asarray(got, dtype=complex)
    truth = np.asarray(truth, dtype=complex)
    c = np.vdot(got, truth) / np.vdot(got, got)
    return np.max(np.abs(c * got - truth))


def exact_cofactor_case(rng, deg_l=6, t=3):
    """Integer l, u, v with gcd(u, v) = 1, checked exactly."""
    while True:
        lo = rng.integers(-5, 6, deg_l + 1)
        u = rng.integers(-5, 6, t)
        v = rng.integers(-5, 6, t)
        if lo[-1] == 0 or u[-1] == 0 or v[-1] == 0:
            continue
        if sympy.degree(sympy.gcd(poly1(u), poly1(v)), X) == 0:
            return lo, u, v


def frac_array(values):
    return np.array([Fraction(int(v)) if not isinstance(v, Fraction) else v for v in values], dtype=object)


def random_latent(rng, shape):
    return Frame(rng.random(shape))


def synthetic_pair(t, seed, shape=(64, 64), latent_seed=None):
    """Latent, coprime pair and blurred pair for a seeded synthetic scene."""
    rng = np.random.default_rng(10_000 + seed if latent_seed is None else latent_seed)
    latent = Frame(rng.random(shape))
    pair = generate_coprime_pair(t, seed)
    return latent, pair, encode_frame(latent, pair)


def kernel_pair(w1, w2, seed=0):
    return CoprimePair(BlurKernel.normalized(w1), BlurKernel.normalized(w2), 1.0, seed)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance report -----------------------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records and prints one pass/fail line."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
