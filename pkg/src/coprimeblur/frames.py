"""Frame and blurred-pair containers shared by the encoder, decoder and I/O."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

BIT_DEPTHS = ("float32", "u16", "u8")
LEVELS = {"u8": 255, "u16": 65535}
BITS = {"u8": 8, "u16": 16}

# ITU-R BT.601 luma weights
REC601 = np.array([0.299, 0.587, 0.114])


@dataclass
class Frame:
    """One video frame as a stack of planes, shape ``(channels, height, width)``.

    Samples are held as float64 in memory. ``bit_depth`` names the storage
    representation: for ``u8``/``u16`` every sample is an exact level
    ``k / (2**b - 1)``.
    """

    planes: np.ndarray
    bit_depth: str = "float32"
    index: int = 0

    def __post_init__(self):
        planes = np.asarray(self.planes, dtype=np.float64)
        if planes.ndim == 2:
            planes = planes[None]
        if planes.ndim != 3 or planes.shape[0] not in (1, 3):
            raise ValueError(f"frame must have 1 or 3 planes, got array of shape {planes.shape}")
        if planes.shape[1] < 1 or planes.shape[2] < 1:
            raise ValueError("frame dims must be >= 1")
        if not np.all(np.isfinite(planes)):
            raise ValueError("frame has non-finite samples")
        if self.bit_depth not in BIT_DEPTHS:
            raise ValueError(f"unknown bit depth {self.bit_depth!r}")
        self.planes = planes

    @property
    def channels(self):
        return self.planes.shape[0]

    @property
    def height(self):
        return self.planes.shape[1]

    @property
    def width(self):
        return self.planes.shape[2]

    @property
    def shape(self):
        return self.planes.shape

    def luma(self):
        if self.channels == 1:
            return self.planes[0]
        return np.tensordot(REC601, self.planes, axes=1)

    def with_planes(self, planes, bit_depth=None):
        return Frame(planes, bit_depth or self.bit_depth, self.index)


@dataclass
class BlurredPair:
    """The public and private blurrings of one latent frame."""

    public_frame: Frame
    private_frame: Frame
    kernel_width_hint: Optional[int] = None
    pair_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.public_frame.shape != self.private_frame.shape:
            raise ValueError(
                f"public {self.public_frame.shape} and private {self.private_frame.shape} frames differ in shape")

    def swapped(self):
        return BlurredPair(self.private_frame, self.public_frame, self.kernel_width_hint, self.pair_id, dict(self.meta))

    def scaled(self, c):
        return BlurredPair(
            self.public_frame.with_planes(self.public_frame.planes * c),
            self.private_frame.with_planes(self.private_frame.planes * c),
            self.kernel_width_hint, self.pair_id, dict(self.meta))
