"""Per-stage timing of the decoder on synthetic frames."""
import csv
from dataclasses import dataclass, field

import numpy as np

from .decoder import STAGES, DecodeConfig, StageTimings, decode_frame
from .encoder import encode_frame, generate_coprime_pair
from .frames import Frame

CSV_HEADER = ["kernel_width"] + [f"{s}_ms" for s in STAGES] + ["total_ms"]


@dataclass
class BenchRow:
    kernel_width: int
    timings: StageTimings

    def csv_row(self):
        t = self.timings
        return [self.kernel_width] + [f"{getattr(t, s):.3f}" for s in STAGES] + [f"{t.total:.3f}"]


@dataclass
class BenchReport:
    width: int
    height: int
    repetitions: int
    rows: list = field(default_factory=list)


def _mean_timings(samples):
    out = StageTimings()
    for name in (*STAGES, "total"):
        setattr(out, name, float(np.mean([getattr(s, name) for s in samples])))
    return out


def run_bench(width, height, kernel_widths, reps=1, seed=0, cfg=None, warmup=True):
    """Encode and decode ``reps`` random latents per kernel width and average the stage timings.

    Disk I/O is excluded; the untimed warm-up decode absorbs JIT compilation
    and first-call allocation.
    """
    cfg = cfg or DecodeConfig()
    rng = np.random.default_rng(seed)
    report = BenchReport(width, height, reps)
    for t in kernel_widths:
        samples = []
        for r in range(reps + (1 if warmup else 0)):
            latent = Frame(rng.random((height, width)))
            pair = encode_frame(latent, generate_coprime_pair(int(t), seed * 1000 + r))
            decoded = decode_frame(pair, cfg)
            if warmup and r == 0:
                continue
            samples.append(decoded.stage_timings)
        report.rows.append(BenchRow(int(t), _mean_timings(samples)))
    return report


def write_csv(report, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in report.rows:
            writer.writerow(row.csv_row())


def format_table(report):
    names = {"polynomial_evaluation": "Polynomial Evaluation",
             "kernel_degree_estimation": "Kernel Degree Estimation",
             "kernel_estimation_1d": "1D Kernel Estimation",
             "kernel_estimation_2d_fft": "2D Kernel Est. and FFT",
             "total": "Total Time"}
    head = f"{'stage (ms) @ %dx%d' % (report.width, report.height):<28}" + "".join(
        f"{'%dx%d' % (r.kernel_width, r.kernel_width):>10}" for r in report.rows)
    lines = [head]
    for key, label in names.items():
        lines.append(f"{label:<28}" + "".join(f"{getattr(r.timings, key):>10.2f}" for r in report.rows))
    return "\n".join(lines)
