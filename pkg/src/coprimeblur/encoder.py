"""Coprime kernel pairs, the forward blur, and bit-depth reduction."""
import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from . import polycore
from .errors import CoprimalityFailure, FrameTooSmall, NotQuantized, RangeExceeded
from .frames import BITS, LEVELS, BlurredPair, Frame

log = logging.getLogger(__name__)

COPRIME_THRESHOLD = 1e-6
COPRIME_TRIALS = 4
MAX_KERNEL_WIDTH = 63


@dataclass(frozen=True, eq=False)
class BlurKernel:
    """Square nonnegative blur weights summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"kernel must be square, got {w.shape}")
        if w.shape[0] % 2 != 1:
            raise ValueError(f"kernel width must be odd, got {w.shape[0]}")
        if np.any(w < 0):
            raise ValueError("kernel weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"kernel weights sum to {w.sum()!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def t(self):
        return self.weights.shape[0]

    @classmethod
    def normalized(cls, weights):
        w = np.asarray(weights, dtype=np.float64)
        return cls(w / w.sum())


@dataclass(frozen=True)
class CoprimePair:
    k1: BlurKernel
    k2: BlurKernel
    coprimality_margin: float
    seed: int

    @property
    def t(self):
        return self.k1.t


def _weights(k):
    return k.weights if isinstance(k, BlurKernel) else np.asarray(k, dtype=np.float64)


def coprimality_check(k1, k2, trials=COPRIME_TRIALS, seed=0):
    """Smallest Sylvester sigma ratio over random 1D restrictions of the kernels.

    Each trial draws a unit-circle point ``r`` and restricts both kernels to
    ``k(z1, r)`` and ``k(r, z2)``. A common bivariate factor survives every
    restriction and drives the ratio to rounding level.
    """
    w1, w2 = _weights(k1), _weights(k2)
    if w1.shape != w2.shape:
        raise ValueError(f"kernel shapes differ: {w1.shape} vs {w2.shape}")
    rng = np.random.default_rng(seed)
    points = np.exp(2j * np.pi * rng.random(trials))
    margin = np.inf
    for axis in polycore.Axis:
        s1 = polycore.axis_dft(w1, axis, points).slices
        s2 = polycore.axis_dft(w2, axis, points).slices
        for p, q in zip(s1, s2):
            if not np.any(p) or not np.any(q):
                return 0.0
            syl = polycore.sylvester_matrix(p, q)
            if syl.size == 0:
                continue
            _, ratio = polycore.numerical_singularity(syl)
            margin = min(margin, ratio)
    return 1.0 if margin == np.inf else float(margin)


def generate_coprime_pair(t, seed, max_retries=16, threshold=COPRIME_THRESHOLD, trials=COPRIME_TRIALS):
    """Draw two seeded uniform random ``t x t`` kernels that pass the coprimality check."""
    if not isinstance(t, (int, np.integer)) or t % 2 != 1 or not 3 <= t <= MAX_KERNEL_WIDTH:
        raise ValueError(f"kernel width must be odd and in [3, {MAX_KERNEL_WIDTH}], got {t!r}")
    rng = np.random.default_rng(seed)
    worst = np.inf
    for attempt in range(max(1, max_retries)):
        k1 = BlurKernel.normalized(rng.random((t, t)))
        k2 = BlurKernel.normalized(rng.random((t, t)))
        margin = coprimality_check(k1, k2, trials=trials, seed=seed)
        if margin > threshold:
            return CoprimePair(k1, k2, margin, int(seed))
        log.debug("seed %s attempt %d rejected, margin %.3g", seed, attempt, margin)
        worst = min(worst, margin)
    raise CoprimalityFailure(
        f"no coprime pair for t={t}, seed={seed} after {max_retries} draws (last margin {worst:.3g})")


def frame_seed(stream_seed, index):
    """Per-frame kernel seed derived from the stream seed and frame number."""
    return int(np.random.SeedSequence([int(stream_seed), int(index)]).generate_state(1, dtype=np.uint64)[0])


def default_pair_id(pair):
    h = hashlib.sha256(pair.k1.weights.tobytes() + pair.k2.weights.tobytes())
    return "cbp-" + h.hexdigest()[:16]


def encode_frame(latent, pair, pair_id=None):
    """Blur every plane of ``latent`` with both kernels (full convolution, no crop)."""
    t = pair.k1.t
    if latent.height < t or latent.width < t:
        raise FrameTooSmall(f"frame {latent.index} is {latent.height}x{latent.width}, kernel is {t}x{t}")
    public = np.stack([polycore.conv2_full(p, pair.k1.weights) for p in latent.planes])
    private = np.stack([polycore.conv2_full(p, pair.k2.weights) for p in latent.planes])
    return BlurredPair(
        Frame(public, "float32", latent.index),
        Frame(private, "float32", latent.index),
        kernel_width_hint=t,
        pair_id=pair_id or default_pair_id(pair),
        meta={"coprimality_margin": pair.coprimality_margin, "seed": pair.seed},
    )


def _check_unit_range(f):
    lo, hi = f.planes.min(), f.planes.max()
    if lo < -1e-9 or hi > 1 + 1e-9:
        raise RangeExceeded(f"frame {f.index} samples span [{lo!r}, {hi!r}], outside [0, 1]")


def quantize_frame(f, depth):
    """Round samples to the nearest ``k / (2**b - 1)`` level."""
    if depth not in LEVELS:
        raise ValueError(f"quantization depth must be one of {sorted(LEVELS)}, got {depth!r}")
    _check_unit_range(f)
    top = LEVELS[depth]
    levels = np.rint(np.clip(f.planes, 0.0, 1.0) * top)
    return Frame(levels / top, depth, f.index)


def integer_levels(f):
    if f.bit_depth not in LEVELS:
        raise NotQuantized(f"frame {f.index} has bit depth {f.bit_depth}, expected u8 or u16")
    return np.rint(f.planes * LEVELS[f.bit_depth]).astype(np.uint32)


def degrade_bits(f, drop):
    """Zero the ``drop`` least significant bits of every integer sample."""
    ints = integer_levels(f)
    bits = BITS[f.bit_depth]
    if not 0 <= drop < bits:
        raise ValueError(f"drop must be in [0, {bits}) for {f.bit_depth}, got {drop}")
    mask = np.uint32(~((1 << drop) - 1) & ((1 << bits) - 1))
    return Frame((ints & mask) / LEVELS[f.bit_depth], f.bit_depth, f.index)
