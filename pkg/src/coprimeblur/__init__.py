"""Coprime blurred pair codec: hide a frame in two blurred streams, recover it from both."""
from .decoder import (DecodeConfig, DecodedFrame, StageTimings, decode_frame, estimate_kernel_width,
                      spectral_deblur, validate_pair)
from .encoder import (BlurKernel, CoprimePair, coprimality_check, degrade_bits, encode_frame,
                      generate_coprime_pair, quantize_frame)
from .frames import BlurredPair, Frame
from .kernels import BACKEND
from .metrics import psnr

__version__ = "0.1.0"
