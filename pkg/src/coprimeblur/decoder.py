"""Blind recovery of the kernel and the latent frame from a blurred pair.

The pipeline follows the four timed stages

1. polynomial evaluation: both blurred planes are evaluated on the unit
   circle along each axis;
2. kernel degree estimation: leading blocks of the Bezout matrix of one
   1D slice pair become singular at the kernel width;
3. 1D kernel estimation: per root of unity, the degree ``t-1`` cofactor of
   the slice pair is the null vector of a stacked convolution system;
4. 2D kernel estimation and FFT: the two row/column scaled spectra are
   reconciled by homogeneous least squares, inverted, averaged, and the
   public frame is divided by the kernel in the Fourier domain.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.fft

from . import kernels, polycore
from .encoder import BlurKernel
from .errors import (CBPError, DegenerateScales, FrameTooSmall, IllConditioned, IllConditionedSlice,
                     InconsistentAxes, NonRealKernel)
from .frames import Frame
from .polycore import Axis

log = logging.getLogger(__name__)

STAGES = (
    "polynomial_evaluation",
    "kernel_degree_estimation",
    "kernel_estimation_1d",
    "kernel_estimation_2d_fft",
)
DEFAULT_SEARCH = tuple(range(3, 26, 2))
PRODUCTION_SEARCH = tuple(range(9, 26, 2))
DEFAULT_EPSILON_REL = 1e-8
# calibrated: singular blocks of float32-stored streams sit near 1e-9, the
# nonsingular t-2 block at t=23, 640x480 dips to ~1e-7
DECODE_TAU = 1e-8


@dataclass
class DecodeConfig:
    search: tuple = DEFAULT_SEARCH
    tau: float = DECODE_TAU
    # absolute regularizer; None means epsilon_rel * max|K(w)|**2
    epsilon: Optional[float] = None
    epsilon_rel: float = DEFAULT_EPSILON_REL
    trust_hint: bool = False
    min_gap: float = polycore.DEFAULT_MIN_GAP
    negative_tol: float = 0.01
    imag_tol: float = 0.01
    workers: int = 1


@dataclass
class StageTimings:
    """Wall-clock milliseconds per pipeline stage."""

    polynomial_evaluation: float = 0.0
    kernel_degree_estimation: float = 0.0
    kernel_estimation_1d: float = 0.0
    kernel_estimation_2d_fft: float = 0.0
    total: float = 0.0

    def stage_sum(self):
        return sum(getattr(self, s) for s in STAGES)

    def largest_stage(self):
        return max(STAGES, key=lambda s: getattr(self, s))

    def as_dict(self):
        return asdict(self)


class _StageClock:
    def __init__(self):
        self.timings = StageTimings()

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        except CBPError as exc:
            if exc.stage is None:
                exc.stage = name
            raise
        finally:
            setattr(self.timings, name, getattr(self.timings, name) + (time.perf_counter() - t0) * 1e3)


@dataclass
class WidthEstimate:
    t: int
    clamped: bool
    per_axis: dict
    ratios: dict = field(default_factory=dict)


@dataclass
class ScaledKernelTransform:
    """Kernel spectrum estimate along one axis, each slice with an unknown scale.

    For ``axis=Z1`` row ``i`` holds the coefficients of ``k1(w_i, z2)``
    (unit norm); for ``axis=Z2`` column ``j`` holds ``k1(z1, w_j)``.
    """

    axis: Axis
    values: np.ndarray
    gaps: np.ndarray

    @property
    def t(self):
        return self.values.shape[0]

    def completed(self):
        """DFT along the unsolved axis: ``lambda_i * K[i, j]`` or ``mu_j * K[i, j]``."""
        return np.fft.fft(self.values, axis=1 if self.axis is Axis.Z1 else 0)


@dataclass
class ScaleResolution:
    lam: np.ndarray
    mu: np.ndarray
    residual: float


@dataclass
class DecodedFrame:
    latent: Frame
    kernel_estimate: BlurKernel
    width_used: int
    stage_timings: StageTimings
    validation_residual: float
    diagnostics: dict = field(default_factory=dict)


def _pair_planes(pair):
    return pair.public_frame.luma(), pair.private_frame.luma()


# -- kernel width ----------------------------------------------------------------

def degree_slices(b1, b2, axis, coefficients):
    """Max-energy DFT slice pair along ``axis``, truncated to ``coefficients`` terms.

    The Bezout leading blocks only read the low-order coefficients, so only
    that many columns (rows for ``Z2``) are transformed.
    """
    axis = Axis.parse(axis)
    if axis is Axis.Z2:
        b1, b2 = b1.T, b2.T
    f1 = scipy.fft.fft(b1[:, :coefficients], axis=0)
    f2 = scipy.fft.fft(b2[:, :coefficients], axis=0)
    energy = np.sum(np.abs(f1) ** 2 + np.abs(f2) ** 2, axis=1)
    k = int(np.argmax(energy))
    return f1[k], f2[k]


def width_from_slices(p, q, search, tau=polycore.DEFAULT_TAU):
    """Kernel width from the Bezout leading blocks of one slice pair.

    Blocks of size ``>= t`` are all singular and smaller ones generically
    are not, so the blocks are scanned from the largest size down and the
    smallest size of the trailing all-singular run is returned. An isolated
    near-singular small block therefore cannot cut the estimate short.
    Returns ``(t, clamped, ratios)``; ``clamped`` is set when the largest
    tested block is already nonsingular and ``max(search)`` is returned.
    """
    search = sorted(search)
    full = polycore.bezout_leading_block(p, q, search[-1])
    ratios = {}
    t = None
    for s in reversed(search):
        singular, ratio = polycore.numerical_singularity(full[:s, :s], tau)
        ratios[s] = ratio
        if not singular:
            break
        t = s
    if t is None:
        return search[-1], True, ratios
    return t, False, ratios


def _check_search(search):
    search = tuple(int(s) for s in search)
    if not search or any(s % 2 != 1 or not 3 <= s <= 63 for s in search):
        raise ValueError(f"search sizes must be odd and within [3, 63], got {search}")
    return search


def width_diagnostics(pair, search=DEFAULT_SEARCH, tau=polycore.DEFAULT_TAU, _clock=None):
    search = _check_search(search)
    clock = _clock or _StageClock()
    b1, b2 = _pair_planes(pair)
    ncoef = 2 * max(search) + 1
    with clock.stage("polynomial_evaluation"):
        slices = {axis: degree_slices(b1, b2, axis, ncoef) for axis in Axis}
    per_axis, ratios, clamped = {}, {}, False
    with clock.stage("kernel_degree_estimation"):
        for axis, (p, q) in slices.items():
            t, c, r = width_from_slices(p, q, search, tau)
            per_axis[axis.name] = t
            ratios[axis.name] = r
            clamped |= c
        if per_axis["Z1"] != per_axis["Z2"]:
            raise InconsistentAxes(per_axis["Z1"], per_axis["Z2"])
    if clamped:
        log.warning("no singular Bezout block in search %s; clamped to %d", search, max(search))
    return WidthEstimate(per_axis["Z1"], clamped, per_axis, ratios)


def estimate_kernel_width(pair, search=DEFAULT_SEARCH, tau=polycore.DEFAULT_TAU):
    """Kernel width from the singularity of Bezout leading blocks on both axes."""
    return width_diagnostics(pair, search, tau).t


# -- 1D cofactors ----------------------------------------------------------------

def evaluate_at_roots(plane, t, axis):
    """The plane evaluated at the t-th roots of unity along ``axis``."""
    return polycore.axis_dft(plane, axis, polycore.roots_of_unity(t))


def solve_slices(set1, set2, t, min_gap=polycore.DEFAULT_MIN_GAP, workers=1):
    """Cofactor of the first plane on every slice, stacked into a transform."""
    axis = set1.axis

    def solve(i):
        try:
            sol = polycore.cofactor_null_solve(set1.slices[i], set2.slices[i], t, min_gap)
        except IllConditioned:
            return None, 0.0
        k1 = sol.k1 / np.linalg.norm(sol.k1)
        return polycore.normalize_phase(k1), sol.gap

    n = len(set1.slices)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(solve, range(n)))
    else:
        results = [solve(i) for i in range(n)]
    gaps = np.array([g for _, g in results])
    bad = [i for i, (k, _) in enumerate(results) if k is None or not np.all(np.isfinite(k))]
    if bad:
        raise IllConditionedSlice(bad, axis.name, gaps)
    rows = np.array([k for k, _ in results])
    values = rows if axis is Axis.Z1 else rows.T
    return ScaledKernelTransform(axis=axis, values=values, gaps=gaps)


def sample_cofactors(pair, t, axis, min_gap=polycore.DEFAULT_MIN_GAP, workers=1):
    """Scaled spectrum of the public kernel from ``t`` 1D GCD sub-problems."""
    axis = Axis.parse(axis)
    b1, b2 = _pair_planes(pair)
    return solve_slices(evaluate_at_roots(b1, t, axis), evaluate_at_roots(b2, t, axis), t, min_gap, workers)


# -- 2D kernel ---------------------------------------------------------------------

def scale_system(a_full, b_full):
    """Rows ``mu_j * A'[i, j] - lambda_i * B'[i, j]`` over unknowns ``(lambda, mu)``."""
    t = a_full.shape[0]
    i, j = np.indices((t, t))
    rows = np.arange(t * t)
    system = np.zeros((t * t, 2 * t), dtype=np.complex128)
    system[rows, i.ravel()] = -b_full.ravel()
    system[rows, t + j.ravel()] = a_full.ravel()
    return system


def resolve_scales_full(a_full, b_full):
    system = scale_system(a_full, b_full)
    x = polycore.homogeneous_lsq(system)
    t = a_full.shape[0]
    lam, mu = x[:t], x[t:]
    top = np.max(np.abs(x))
    if top == 0 or np.min(np.abs(lam)) < 1e-10 * top or np.min(np.abs(mu)) < 1e-10 * top:
        raise DegenerateScales("a slice scale vanished; the consistency system carries no information for it")
    return ScaleResolution(lam=lam, mu=mu, residual=float(np.linalg.norm(system @ x)))


def resolve_scales(a, b):
    """Per-row and per-column scales that make the two spectrum estimates agree."""
    if a.t != b.t:
        raise ValueError(f"transforms differ in size: {a.t} vs {b.t}")
    if a.axis is not Axis.Z1 or b.axis is not Axis.Z2:
        raise ValueError("expected the Z1 transform first and the Z2 transform second")
    return resolve_scales_full(a.completed(), b.completed())


def _real_kernel(spectrum, negative_tol, imag_tol):
    k = np.fft.ifft2(spectrum)
    total = k.sum()
    if abs(total) < 1e-300:
        raise NonRealKernel("kernel estimate has zero mass")
    k = k / total
    energy = np.sum(np.abs(k) ** 2)
    if np.sum(k.imag ** 2) > imag_tol * energy:
        raise NonRealKernel(f"kernel estimate is not real (imaginary energy fraction "
                            f"{np.sum(k.imag ** 2) / energy:.3g})")
    k = k.real
    if k.min() < -negative_tol * k.max():
        raise NonRealKernel(f"kernel estimate has a negative lobe ({k.min():.3g} vs max {k.max():.3g})")
    k = np.clip(k, 0.0, None)
    return k / k.sum()


def assemble_kernel(a_full, b_full, scales, negative_tol=0.01, imag_tol=0.01):
    """Unscale both spectrum estimates, invert them, and average the two kernels."""
    ka = _real_kernel(a_full / scales.lam[:, None], negative_tol, imag_tol)
    kb = _real_kernel(b_full / scales.mu[None, :], negative_tol, imag_tol)
    avg = 0.5 * (ka + kb)
    return BlurKernel(avg / avg.sum())


def kernel_rfft2(w, shape):
    """``rfft2(w, s=shape)`` for a small kernel, as two thin DFT-matrix products."""
    t0, t1 = w.shape
    rows = np.exp(-2j * np.pi * np.outer(np.arange(shape[0]), np.arange(t0)) / shape[0])
    cols = np.exp(-2j * np.pi * np.outer(np.arange(t1), np.arange(shape[1] // 2 + 1)) / shape[1])
    return rows @ (w @ cols)


def spectral_deblur(b1, kernel, epsilon=None, epsilon_rel=DEFAULT_EPSILON_REL):
    """Divide ``b1`` by the kernel in the Fourier domain and crop to the latent size.

    The transform size is at least the blurred size, so with exact data and
    ``epsilon=0`` circular division equals exact polynomial division.
    """
    b1 = polycore.as_plane(b1, "b1")
    w = kernel.weights if isinstance(kernel, BlurKernel) else polycore.as_plane(kernel, "kernel")
    t = w.shape[0]
    m, n = b1.shape
    if m < t or n < t:
        raise FrameTooSmall(f"blurred plane {m}x{n} is smaller than the {t}x{t} kernel")
    shape = (scipy.fft.next_fast_len(m, real=True), scipy.fft.next_fast_len(n, real=True))
    fk = kernel_rfft2(w, shape)
    if epsilon is None:
        epsilon = epsilon_rel * float(np.max(fk.real ** 2 + fk.imag ** 2))
    ratio = kernels.wiener_divide(scipy.fft.rfft2(b1, s=shape), fk, epsilon)
    out = scipy.fft.irfft2(ratio, s=shape, overwrite_x=True)
    return out[:m - t + 1, :n - t + 1]


# -- full pipeline ---------------------------------------------------------------

def relative_residual(a, b):
    den = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / den) if den > 0 else float(np.linalg.norm(a))


def decode_frame(pair, cfg=None):
    """Recover the public kernel and the latent frame from one blurred pair."""
    cfg = cfg or DecodeConfig()
    clock = _StageClock()
    b1, b2 = _pair_planes(pair)
    diagnostics = {}
    start = time.perf_counter()

    if cfg.trust_hint and pair.kernel_width_hint:
        t = int(pair.kernel_width_hint)
    else:
        est = width_diagnostics(pair, cfg.search, cfg.tau, _clock=clock)
        t = est.t
        diagnostics["width_clamped"] = est.clamped
    if t > min(b1.shape):
        exc = FrameTooSmall(f"kernel width {t} exceeds blurred frame {b1.shape}")
        exc.stage = "kernel_degree_estimation"
        raise exc

    with clock.stage("polynomial_evaluation"):
        sets = {axis: (evaluate_at_roots(b1, t, axis), evaluate_at_roots(b2, t, axis)) for axis in Axis}
    with clock.stage("kernel_estimation_1d"):
        transforms = {axis: solve_slices(s1, s2, t, cfg.min_gap, cfg.workers) for axis, (s1, s2) in sets.items()}
    with clock.stage("kernel_estimation_2d_fft"):
        a_full = transforms[Axis.Z1].completed()
        b_full = transforms[Axis.Z2].completed()
        scales = resolve_scales_full(a_full, b_full)
        kernel = assemble_kernel(a_full, b_full, scales, cfg.negative_tol, cfg.imag_tol)
        latent = np.stack([spectral_deblur(p, kernel, cfg.epsilon, cfg.epsilon_rel)
                           for p in pair.public_frame.planes])
    clock.timings.total = (time.perf_counter() - start) * 1e3

    reblurred = np.stack([polycore.conv2_full(p, kernel.weights) for p in latent])
    residual = relative_residual(reblurred, pair.public_frame.planes)
    diagnostics.update(
        scale_residual=scales.residual,
        min_gap=float(min(tr.gaps.min() for tr in transforms.values())),
    )
    return DecodedFrame(
        latent=Frame(latent, "float32", pair.public_frame.index),
        kernel_estimate=kernel,
        width_used=t,
        stage_timings=clock.timings,
        validation_residual=residual,
        diagnostics=diagnostics,
    )


def validate_pair(pair, k1, k2):
    """Cross-convolution residual ``||B1*k2 - B2*k1|| / ||B1*k2||``."""
    w1 = k1.weights if isinstance(k1, BlurKernel) else np.asarray(k1, dtype=np.float64)
    w2 = k2.weights if isinstance(k2, BlurKernel) else np.asarray(k2, dtype=np.float64)
    lhs = np.stack([polycore.conv2_full(p, w2) for p in pair.public_frame.planes])
    rhs = np.stack([polycore.conv2_full(p, w1) for p in pair.private_frame.planes])
    return relative_residual(rhs, lhs)
