"""Compare the numba and numpy implementations of the hot kernels.

    python benchmarks/bench_backends.py [--reps N]

Each kernel is timed on inputs sized like a 640x480 decode; the full decode
is timed in a subprocess per backend because the backend is fixed at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from coprimeblur import _accel, kernels

DECODE_SNIPPET = """
import time, numpy as np
from coprimeblur import kernels
from coprimeblur.decoder import decode_frame
from coprimeblur.encoder import encode_frame, generate_coprime_pair
from coprimeblur.frames import Frame
bp = encode_frame(Frame(np.random.default_rng(0).random((480, 640))), generate_coprime_pair({t}, 1))
decode_frame(bp)
best = min(decode_frame(bp).stage_timings.total for _ in range({reps}))
print(kernels.BACKEND, best)
"""


def cases(rng):
    img = rng.random((480, 640))
    k = rng.random((9, 9))
    p = rng.standard_normal(51) + 1j * rng.standard_normal(51)
    q = rng.standard_normal(51) + 1j * rng.standard_normal(51)
    slice_ = rng.standard_normal(648) + 1j * rng.standard_normal(648)
    num = rng.standard_normal((500, 325)) + 1j * rng.standard_normal((500, 325))
    den = rng.standard_normal((500, 325)) + 1j * rng.standard_normal((500, 325))
    return {
        "conv2_full 480x640 * 9x9": ("conv2_full", (img, k)),
        "bezout_block s=25": ("bezout_block", (p, q, 25)),
        "conv_matrix 648, t=23": ("conv_matrix", (slice_, 23, 670)),
        "wiener_divide 500x325": ("wiener_divide", (num, den, 1e-9)),
    }


def time_kernel(fn, args, reps):
    fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])
    return min(timeit.repeat(lambda: fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args]),
                             number=1, repeat=reps)) * 1e3


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for label, (name, fn_args) in cases(rng).items():
        t_np = time_kernel(getattr(kernels, name + "_np"), fn_args, args.reps)
        t_nb = time_kernel(getattr(kernels, name + "_nb"), fn_args, args.reps)
        print(f"{label:<28}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>9.1f}x")

    print(f"\n{'decode 640x480 total':<28}{'numpy ms':>12}{'numba ms':>12}")
    for t in (9, 17, 23):
        row = {}
        for flag in ("1", "0"):
            env = dict(os.environ, **{_accel.ENV_FLAG: flag})
            out = subprocess.run([sys.executable, "-c", DECODE_SNIPPET.format(t=t, reps=args.reps)], env=env,
                                 capture_output=True, text=True, check=True).stdout.split()
            row[out[0]] = float(out[1])
        print(f"{'t=%d' % t:<28}{row['numpy']:>12.2f}{row['numba']:>12.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
