"""``cbp`` command line: encode, decode, degrade, psnr, synth, bench.

Exit codes: 0 ok, 1 usage/invalid input, 2 coprimality failure, 3 I/O,
4 decode pipeline failure (stage named on stderr), 5 unpaired streams.
"""
import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bench, streamio
from .decoder import DEFAULT_EPSILON_REL, DecodeConfig, decode_frame
from .encoder import MAX_KERNEL_WIDTH, degrade_bits, encode_frame, frame_seed, generate_coprime_pair, quantize_frame
from .errors import (CBPError, CoprimalityFailure, CorruptManifest, FormatViolation, IoFailure, MissingFrame,
                     PairMismatch)
from .frames import BITS, Frame
from .metrics import psnr

EXIT_OK, EXIT_USAGE, EXIT_COPRIME, EXIT_IO, EXIT_PIPELINE, EXIT_PAIR = 0, 1, 2, 3, 4, 5
IO_ERRORS = (IoFailure, CorruptManifest, MissingFrame, FormatViolation, OSError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _fail(code, message):
    print(f"cbp: {message}", file=sys.stderr)
    return code


def _kernel_width(text):
    t = int(text)
    if t % 2 != 1 or not 3 <= t <= MAX_KERNEL_WIDTH:
        raise argparse.ArgumentTypeError(f"kernel width must be odd and in [3, {MAX_KERNEL_WIDTH}], got {t}")
    return t


def _width_list(text):
    return [_kernel_width(x) for x in text.split(",") if x.strip()]


def _stream_pair_id(seed, t, frames):
    h = hashlib.sha256(f"{seed}:{t}".encode())
    for f in frames:
        h.update(np.ascontiguousarray(f.planes).tobytes())
    return "cbp-" + h.hexdigest()[:16]


def cmd_encode(args):
    frames, _ = streamio.read_stream(args.input)
    pair_id = _stream_pair_id(args.seed, args.kernel_width, frames)
    public, private = [], []
    for frame in frames:
        try:
            pair = generate_coprime_pair(args.kernel_width, frame_seed(args.seed, frame.index))
        except CoprimalityFailure as exc:
            return _fail(EXIT_COPRIME, f"frame {frame.index}: {exc}")
        print(f"frame {frame.index}: coprimality margin {pair.coprimality_margin:.6e}")
        try:
            bp = encode_frame(frame, pair, pair_id)
            pub, priv = bp.public_frame, bp.private_frame
            if args.bit_depth != "float32":
                pub, priv = quantize_frame(pub, args.bit_depth), quantize_frame(priv, args.bit_depth)
        except CBPError as exc:
            return _fail(EXIT_USAGE, f"frame {frame.index}: {exc}")
        public.append(pub)
        private.append(priv)
    h, w = public[0].height, public[0].width
    for role, out, data in (("public", args.out_public, public), ("private", args.out_private, private)):
        manifest = streamio.StreamManifest(role=role, frame_count=len(data), width=w, height=h,
                                           bit_depth=args.bit_depth, pair_id=pair_id,
                                           kernel_width_hint=args.kernel_width, seed=args.seed)
        streamio.write_stream(data, manifest, out)
    return EXIT_OK


def cmd_decode(args):
    cfg = DecodeConfig(trust_hint=args.trust_hint, epsilon_rel=args.epsilon, workers=1)
    if args.tau is not None:
        cfg.tau = args.tau
    try:
        pairs = list(streamio.pair_streams(args.public, args.private))
    except PairMismatch as exc:
        return _fail(EXIT_PAIR, str(exc))

    def run(pair):
        try:
            return decode_frame(pair, cfg), None
        except CBPError as exc:
            return None, exc

    workers = args.workers or os.cpu_count() or 1
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]

    for pair, (_, exc) in zip(pairs, results):
        if exc is not None:
            return _fail(EXIT_PIPELINE, f"frame {pair.public_frame.index}: stage {exc.stage or 'unknown'} "
                                        f"failed: {exc}")
    decoded = [d for d, _ in results]
    latents = [d.latent for d in decoded]
    manifest = streamio.StreamManifest(role="latent", frame_count=len(latents), width=latents[0].width,
                                       height=latents[0].height, bit_depth="float32",
                                       pair_id=pairs[0].pair_id)
    streamio.write_stream(latents, manifest, args.out)
    worst = None
    for i, d in enumerate(decoded):
        sidecar = {"width_used": d.width_used, "validation_residual": d.validation_residual,
                   "stage_timings": d.stage_timings.as_dict()}
        path = os.path.join(args.out, f"frame_{i:06d}.json")
        streamio._write(path, (json.dumps(sidecar, sort_keys=True, indent=2) + "\n").encode())
        print(f"frame {i}: width {d.width_used}, validation residual {d.validation_residual:.3e}, "
              f"total {d.stage_timings.total:.2f} ms")
        if d.validation_residual > args.max_residual and worst is None:
            worst = (i, d.validation_residual)
    if worst is not None:
        return _fail(EXIT_PIPELINE, f"frame {worst[0]}: stage validation failed: residual {worst[1]:.3e} "
                                    f"exceeds bound {args.max_residual:.3e}")
    return EXIT_OK


def cmd_degrade(args):
    frames, manifest = streamio.read_stream(args.input)
    if manifest.bit_depth not in BITS:
        return _fail(EXIT_USAGE, f"stream is {manifest.bit_depth}; degrade needs a u8 or u16 stream")
    if not 0 <= args.drop < BITS[manifest.bit_depth]:
        return _fail(EXIT_USAGE, f"--drop must be in [0, {BITS[manifest.bit_depth]}) for {manifest.bit_depth}")
    streamio.write_stream([degrade_bits(f, args.drop) for f in frames], manifest, args.out)
    return EXIT_OK


def cmd_psnr(args):
    a, _ = streamio.read_stream(args.a)
    b, _ = streamio.read_stream(args.b)
    if len(a) != len(b):
        return _fail(EXIT_USAGE, f"frame counts differ: {len(a)} vs {len(b)}")
    values = []
    for fa, fb in zip(a, b):
        if fa.shape != fb.shape:
            return _fail(EXIT_USAGE, f"frame {fa.index}: shapes differ {fa.shape} vs {fb.shape}")
        values.append(psnr(fa, fb))
        print(f"frame {fa.index}: {values[-1]:.2f} dB")
    print(f"mean: {np.mean(values):.2f} dB")
    return EXIT_OK


def cmd_synth(args):
    rng = np.random.default_rng(args.seed)
    frames = [Frame(rng.random((args.channels, args.height, args.width)), "float32", i)
              for i in range(args.frames)]
    frames = [f.with_planes(f.planes.astype(np.float32)) for f in frames]
    manifest = streamio.StreamManifest(role="latent", frame_count=args.frames, width=args.width,
                                       height=args.height, bit_depth="float32", seed=args.seed)
    streamio.write_stream(frames, manifest, args.out)
    return EXIT_OK


def cmd_bench(args):
    report = bench.run_bench(args.width, args.height, args.kernel_widths, args.reps, args.seed)
    print(bench.format_table(report))
    bench.write_csv(report, args.out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="cbp", description="Coprime blurred pair codec")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("encode", help="blur a latent stream into public/private streams")
    e.add_argument("--input", required=True)
    e.add_argument("--out-public", required=True)
    e.add_argument("--out-private", required=True)
    e.add_argument("--kernel-width", type=_kernel_width, required=True)
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--bit-depth", choices=["float32", "u16", "u8"], default="float32")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="recover the latent stream from a public/private pair")
    d.add_argument("--public", required=True)
    d.add_argument("--private", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--tau", type=float, default=None, help="Bezout singularity threshold")
    d.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON_REL,
                   help="division regularizer relative to max |K(w)|^2")
    d.add_argument("--trust-hint", action="store_true", help="use the manifests' kernel width hint")
    d.add_argument("--max-residual", type=float, default=1e-3)
    d.add_argument("--workers", type=int, default=0, help="frames decoded in parallel (0 = all cores)")
    d.set_defaults(func=cmd_decode)

    g = sub.add_parser("degrade", help="zero least significant bits of a quantized stream")
    g.add_argument("--input", required=True)
    g.add_argument("--drop", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_degrade)

    m = sub.add_parser("psnr", help="per-frame PSNR between two streams")
    m.add_argument("--a", required=True)
    m.add_argument("--b", required=True)
    m.set_defaults(func=cmd_psnr)

    s = sub.add_parser("synth", help="write a random latent stream")
    s.add_argument("--out", required=True)
    s.add_argument("--frames", type=int, default=1)
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--height", type=int, default=64)
    s.add_argument("--channels", type=int, choices=[1, 3], default=1)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="per-stage decode timings on synthetic frames")
    b.add_argument("--width", type=int, default=640)
    b.add_argument("--height", type=int, default=480)
    b.add_argument("--kernel-widths", type=_width_list, default=[9, 17, 23])
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))


if __name__ == "__main__":
    sys.exit(main())
