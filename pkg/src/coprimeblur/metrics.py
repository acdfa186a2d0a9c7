import math

import numpy as np

# identical frames
PSNR_INF = math.inf


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB over all channels."""
    a = getattr(a, "planes", a)
    b = getattr(b, "planes", b)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return PSNR_INF
    return 10.0 * math.log10(peak * peak / mse)
