"""Images as bivariate polynomials, and the small dense linear algebra on them.

Coefficient arrays are low-degree-first everywhere. For an image plane the
row index is the power of ``z1`` and the column index the power of ``z2``,
so ``plane[m, n]`` is the coefficient of ``z1**m * z2**n``.
"""
import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft

from . import kernels
from .errors import DegenerateInput, IllConditioned, NonUnitSamplePoint

UNIT_TOL = 1e-12
DEFAULT_TAU = 1e-6
# second-smallest/largest singular value below this => null space is not 1-D
DEFAULT_MIN_GAP = 1e-11


class Axis(enum.IntEnum):
    Z1 = 0  # rows
    Z2 = 1  # columns

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(value)


@dataclass(frozen=True)
class SpectralSliceSet:
    """1D polynomials obtained by fixing one variable at unit-circle points.

    ``slices[i]`` holds the coefficients (in the other variable) of the plane
    evaluated at ``points[i]``.
    """

    axis: Axis
    points: np.ndarray
    slices: np.ndarray


class CofactorSolution(NamedTuple):
    k1: np.ndarray
    k2: np.ndarray
    gap: float


def as_plane(a, name="plane"):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2D array, got shape {a.shape}")
    if a.dtype != object and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite samples")
    if a.dtype.kind in "biu":
        a = a.astype(np.float64)
    return a


def conv2_full(a, b):
    """Full 2D linear convolution; the coefficients of the product polynomial."""
    return kernels.conv2_full(as_plane(a, "a"), as_plane(b, "b"))


def roots_of_unity(n):
    """``exp(-2j*pi*k/n)`` for k in 0..n-1 (the sample points of an n-point DFT)."""
    return np.exp(-2j * np.pi * np.arange(n) / n)


def _vandermonde(points, degree_count):
    points = np.asarray(points, dtype=np.complex128).ravel()
    if np.any(np.abs(np.abs(points) - 1.0) > UNIT_TOL):
        bad = points[np.argmax(np.abs(np.abs(points) - 1.0))]
        raise NonUnitSamplePoint(f"sample point {bad} is not on the unit circle (|w|={abs(bad)!r})")
    m = np.arange(degree_count, dtype=np.float64)
    phase = np.outer(np.angle(points), m)
    return np.power(np.abs(points)[:, None], m) * (np.cos(phase) + 1j * np.sin(phase))


def axis_dft(plane, axis, points):
    """Evaluate the plane polynomial at ``points`` in one variable.

    ``axis=Z1`` substitutes ``z1 = w`` and leaves polynomials in ``z2`` (one
    per point, length N); ``axis=Z2`` is the transpose.
    """
    plane = as_plane(plane)
    axis = Axis.parse(axis)
    points = np.asarray(points, dtype=np.complex128).ravel()
    data = plane if axis is Axis.Z1 else plane.T
    vander = _vandermonde(points, data.shape[0])
    if np.iscomplexobj(data):
        slices = vander @ data
    else:
        # one real GEMM on a contiguous [Re; Im] stack
        stacked = np.concatenate([vander.real, vander.imag]) @ data
        k = len(points)
        slices = stacked[:k] + 1j * stacked[k:]
    return SpectralSliceSet(axis=axis, points=points, slices=slices)


def bezout_leading_block(p, q, s):
    """Leading ``s x s`` block of the Bezout matrix of ``p`` and ``q``.

    Uses the generating function ``(p(x)q(y) - p(y)q(x)) / (x - y)``, so only
    the first ``2s`` coefficients of each polynomial are read. Object arrays
    (e.g. of ``fractions.Fraction``) are supported for exact arithmetic.
    """
    p = np.asarray(p)
    q = np.asarray(q)
    if s < 1:
        raise ValueError("block size must be >= 1")
    if not np.any(p != 0) or not np.any(q != 0):
        raise DegenerateInput("Bezout matrix of a zero polynomial")
    return kernels.bezout_block(p.ravel(), q.ravel(), int(s))


def singular_values(mtx):
    return np.linalg.svd(np.asarray(mtx), compute_uv=False)


def numerical_singularity(mtx, tau=DEFAULT_TAU):
    """Return ``(singular, sigma_min / sigma_max)``; a zero matrix has ratio 0."""
    mtx = np.asarray(mtx)
    if mtx.ndim != 2 or mtx.shape[0] != mtx.shape[1]:
        raise ValueError(f"expected a square matrix, got {mtx.shape}")
    sv = singular_values(mtx)
    if sv[0] == 0:
        return True, 0.0
    ratio = float(sv[-1] / sv[0])
    return ratio < tau, ratio


def normalize_phase(v):
    """Rotate ``v`` so its largest-magnitude entry is real and positive."""
    v = np.asarray(v, dtype=np.complex128)
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        return v
    return v * (abs(v[k]) / v[k])


def homogeneous_lsq(a):
    """Unit vector minimizing ``||a @ x||``, phase-normalized."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError(f"need a tall or square matrix, got {a.shape}")
    _, _, vh = np.linalg.svd(a, full_matrices=False)
    return normalize_phase(vh[-1].conj())


def cofactor_system(p, q, t):
    """Stacked matrix ``[T(p), -T(q)]`` whose null vectors ``(k2, k1)`` solve ``p*k2 = q*k1``."""
    p = np.asarray(p).ravel()
    q = np.asarray(q).ravel()
    rows = max(len(p), len(q)) + t - 1
    return np.hstack([kernels.conv_matrix(p, t, rows), -kernels.conv_matrix(q, t, rows)])


def cofactor_null_solve(p, q, t, min_gap=DEFAULT_MIN_GAP):
    """Cofactors of degree ``t-1`` of a polynomial pair with a common factor.

    For ``p = l*u`` and ``q = l*v`` with coprime ``u, v`` of degree ``t-1``
    the returned ``k1, k2`` are proportional to ``u, v``. The joint vector
    ``(k2, k1)`` has unit norm. ``gap`` is the second-smallest over the
    largest singular value of the system; a small gap means the null space
    is not one-dimensional.
    """
    t = int(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    p = np.asarray(p).ravel()
    q = np.asarray(q).ravel()
    if len(p) < t or len(q) < t:
        raise ValueError(f"polynomials of length {len(p)}, {len(q)} cannot have cofactors of length {t}")
    system = cofactor_system(p, q, t)
    _, sv, vh = np.linalg.svd(system, full_matrices=False)
    gap = float(sv[-2] / sv[0]) if sv[0] > 0 and len(sv) > 1 else (1.0 if sv[0] > 0 else 0.0)
    if gap < min_gap:
        raise IllConditioned(f"cofactor null space is not one-dimensional (gap {gap:.3g})")
    x = normalize_phase(vh[-1].conj())
    return CofactorSolution(k1=x[t:], k2=x[:t], gap=gap)


def sylvester_matrix(p, q):
    """Sylvester matrix of ``p`` and ``q`` at their actual degrees.

    Trailing zero high-order coefficients are dropped first. The result is
    square of size ``deg p + deg q``; empty when both are constants.
    """
    p = np.trim_zeros(np.asarray(p).ravel(), "b")
    q = np.trim_zeros(np.asarray(q).ravel(), "b")
    if len(p) == 0 or len(q) == 0:
        raise DegenerateInput("Sylvester matrix of a zero polynomial")
    m, n = len(p) - 1, len(q) - 1
    size = m + n
    if size == 0:
        return np.zeros((0, 0), dtype=np.result_type(p, q, np.float64))
    blocks = []
    if n:
        blocks.append(kernels.conv_matrix(p, n, size))
    if m:
        blocks.append(kernels.conv_matrix(q, m, size))
    return np.hstack(blocks)


def fft2(x, shape=None):
    """Unnormalized 2D DFT (any sizes, no padding to powers of two)."""
    return scipy.fft.fft2(np.asarray(x), s=shape)


def ifft2(x, shape=None):
    """Inverse 2D DFT with the ``1/(M*N)`` normalization."""
    return scipy.fft.ifft2(np.asarray(x), s=shape)
