"""Command-line entry point.

Subcommands: enhance, simulate, eval, bench, inspect-weights,
inspect-layout, dump-features, probe-mask.  Logs go to stderr; machine
output goes to stdout or files.  A key=value config file can supply
defaults that flags override.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bands, filterbank, metrics, nnet, pipeline, simulate, weights
from .audio import read_wav, wav_format, write_wav
from .wiener import SuppressorConfig


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: bad config line {line!r}")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _suppressor_config(args) -> SuppressorConfig:
    cfg = SuppressorConfig()
    if args.alpha_dd is not None:
        cfg.alpha_dd = args.alpha_dd
    if args.alpha_noise is not None:
        cfg.alpha_noise = args.alpha_noise
    if args.alpha_speech is not None:
        cfg.alpha_speech = args.alpha_speech
    if args.minstat_window_s is not None:
        cfg.minstat_window_s = args.minstat_window_s
    return cfg


def _enhance_one(path: Path, out_dir: Path, args) -> None:
    buf = read_wav(path)
    fmt = wav_format(path)
    start = time.perf_counter()
    out = pipeline.enhance_buffer(
        buf, args.engine, weights_path=args.weights,
        max_atten_db=args.max_atten_db,
        suppressor_config=_suppressor_config(args))
    elapsed = time.perf_counter() - start
    write_wav(out_dir / path.name, out, fmt=fmt)
    rtf = buf.duration / elapsed if elapsed > 0 else float("inf")
    _log(f"enhance: {path.name}: {buf.duration:.2f}s audio in {elapsed:.2f}s "
         f"(RTF {rtf:.1f}x, engine {args.engine})")


def cmd_enhance(args) -> int:
    if args.engine in ("gru", "unet") and not args.weights:
        _log(f"enhance: engine {args.engine!r} requires --weights")
        return 2
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [Path(p) for p in args.inputs]
    failures = 0

    def run(path):
        try:
            _enhance_one(path, out_dir, args)
            return None
        except (OSError, ValueError) as exc:
            return f"enhance: {path}: {exc}"

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, paths))
    else:
        results = [run(p) for p in paths]
    for err in results:
        if err:
            _log(err)
            failures += 1
    return 1 if failures else 0


def cmd_simulate(args) -> int:
    spec = simulate.MixSpec(snr_range=(args.snr_min, args.snr_max),
                            hp_cutoff=args.hp_cutoff, seed=args.seed)
    manifest = simulate.make_test_set(args.speech_dir, args.noise_dir, spec,
                                      args.count, args.out_dir,
                                      ir_dir=args.ir_dir)
    _log(f"simulate: wrote {manifest}")
    return 0


def cmd_eval(args) -> int:
    report = metrics.evaluate_set(args.manifest, args.enhanced_dir)
    print(report.to_tsv())
    if args.summary:
        Path(args.summary).write_text(report.to_json(), encoding="utf-8")
        _log(f"eval: summary written to {args.summary}")
    return 0 if report.n_failed == 0 else 1


def cmd_bench(args) -> int:
    if args.duration_s <= 0:
        _log("bench: duration must be positive")
        return 2
    rng = np.random.default_rng(0)
    fs = pipeline.PROCESS_FS
    samples = 0.05 * rng.standard_normal(int(args.duration_s * fs))
    engine = pipeline.make_engine(args.engine, args.weights)
    enhancer = pipeline.StreamingEnhancer(engine)
    hop = enhancer.hop
    n_chunks = len(samples) // hop
    times = np.empty(n_chunks)
    for i in range(n_chunks):
        chunk = samples[i * hop:(i + 1) * hop]
        t0 = time.perf_counter()
        enhancer.process_chunk(chunk)
        times[i] = time.perf_counter() - t0
    wall = float(np.sum(times))
    audio_s = n_chunks * hop / fs
    print(f"engine\t{args.engine}")
    print(f"audio_seconds\t{audio_s:.3f}")
    print(f"wall_seconds\t{wall:.3f}")
    print(f"rtf\t{audio_s / wall:.2f}")
    print(f"frame_ms_mean\t{1e3 * float(np.mean(times)):.3f}")
    print(f"frame_ms_p95\t{1e3 * float(np.percentile(times, 95)):.3f}")
    print(f"frame_ms_max\t{1e3 * float(np.max(times)):.3f}")
    if args.engine in ("gru", "unet"):
        model = nnet.load_model(args.weights)
        print(f"macs_per_second\t{nnet.count_macs_per_second(model)}")
    return 0


def cmd_inspect_weights(args) -> int:
    kind, tensors = weights.load_tensors(args.file)
    model = (nnet.GruModel(tensors) if kind == weights.KIND_GRU
             else nnet.UnetModel(tensors))
    print(f"kind\t{'gru' if kind == weights.KIND_GRU else 'unet'}")
    print(f"param_count\t{nnet.count_params(model)}")
    print(f"macs_per_frame\t{nnet.count_macs_per_frame(model)}")
    print(f"macs_per_second\t{nnet.count_macs_per_second(model)}")
    print("tensor\tshape")
    for name, arr in tensors.items():
        print(f"{name}\t{'x'.join(map(str, arr.shape))}")
    return 0


def cmd_inspect_layout(args) -> int:
    del args
    print(bands.layout_table(bands.make_layout()))
    return 0


def cmd_dump_features(args) -> int:
    """Engine-side feature frames for a WAV, for interop validation."""
    buf = read_wav(args.wav)
    if buf.sample_rate != pipeline.PROCESS_FS:
        buf = simulate.resample_2x(buf, "up")
    wp = filterbank.design_windows()
    layout = bands.make_layout()
    hop = wp.hop
    pad = (-len(buf.samples)) % hop
    samples = np.concatenate([buf.samples, np.zeros(pad)])
    window = np.zeros(wp.analysis_len)
    feats = []
    for start in range(0, len(samples), hop):
        window = np.concatenate([window[hop:], samples[start:start + hop]])
        spec = filterbank.analyze(window, wp)
        feats.append(bands.compress(np.abs(spec), layout))
    np.savez(args.out, features=np.stack(feats))
    _log(f"dump-features: {len(feats)} frames -> {args.out}")
    return 0


def cmd_probe_mask(args) -> int:
    """Run a weight file over saved feature frames; save the masks."""
    model = nnet.load_model(args.weights)
    feats = np.load(args.features)["features"]
    masks = np.stack([model.step(f) for f in feats])
    np.savez(args.out, masks=masks)
    _log(f"probe-mask: {len(masks)} frames -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llse", description="Low-latency speech enhancement toolkit")
    parser.add_argument("--config", help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="enhance WAV files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--engine", choices=pipeline.ENGINE_NAMES,
                   default="baseline")
    p.add_argument("--weights", help="weight file for gru/unet engines")
    p.add_argument("--max-atten-db", type=float, default=None,
                   help="attenuation limit (default 12 baseline, 15 neural)")
    p.add_argument("--alpha-dd", type=float, default=None)
    p.add_argument("--alpha-noise", type=float, default=None)
    p.add_argument("--alpha-speech", type=float, default=None)
    p.add_argument("--minstat-window-s", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("simulate", help="generate a simulated mixture set")
    p.add_argument("--speech-dir", required=True)
    p.add_argument("--noise-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr-min", type=float, default=-5.0)
    p.add_argument("--snr-max", type=float, default=5.0)
    p.add_argument("--hp-cutoff", type=float, default=simulate.HP_CUTOFF_HZ)
    p.add_argument("--ir-dir", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score enhanced files against references")
    p.add_argument("--manifest", required=True)
    p.add_argument("--enhanced-dir", required=True)
    p.add_argument("--summary", help="write a JSON summary here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="measure realtime factor")
    p.add_argument("--engine", choices=pipeline.ENGINE_NAMES,
                   default="baseline")
    p.add_argument("--weights")
    p.add_argument("--duration-s", type=float, default=10.0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect-weights", help="describe a weight file")
    p.add_argument("file")
    p.set_defaults(func=cmd_inspect_weights)

    p = sub.add_parser("inspect-layout", help="print the band layout table")
    p.set_defaults(func=cmd_inspect_layout)

    p = sub.add_parser("dump-features", help="save engine feature frames")
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump_features)

    p = sub.add_parser("probe-mask", help="save masks for saved features")
    p.add_argument("--weights", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe_mask)
    return parser


# Config-file keys a flag may leave unset; flags always win.
_CONFIG_KEYS = {"max_atten_db": float, "alpha_dd": float,
                "alpha_noise": float, "alpha_speech": float,
                "minstat_window_s": float, "weights": str}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        for key, val in _load_config_file(args.config).items():
            cast = _CONFIG_KEYS.get(key)
            if cast is None:
                _log(f"llse: ignoring unknown config key {key!r}")
                continue
            if hasattr(args, key) and getattr(args, key) is None:
                setattr(args, key, cast(val))
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        _log(f"llse: error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
