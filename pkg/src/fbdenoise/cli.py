"""Command-line interface.

Exit codes: 0 ok, 1 usage, 2 I/O, 3 file format.
"""

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import audio
from .engine import EngineConfig, bench, enhance_signal, oracle_enhance_signal
from .errors import FormatError, UsageError
from .model import ModelState, infer, load_model_file
from .pitch import CombConfig
from .targets import (
    DegenerateExampleError,
    LossConfig,
    extract_targets,
    gain_loss,
    manifest_line,
    mix_example,
    read_pnft,
    strength_loss,
    write_pnft,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_FORMAT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _engine_config(args, rate: int) -> EngineConfig:
    return EngineConfig(
        sample_rate=rate,
        pitch_enabled=not getattr(args, "no_pitch", False),
        postfilter_enabled=not getattr(args, "no_postfilter", False),
    )


def _load_input(path, expected_rate=None):
    rate, samples = audio.read_wav(path)
    if expected_rate is not None and rate != expected_rate:
        raise UsageError(f"{path}: sample rate {rate} does not match --rate")
    if rate not in (16000, 48000):
        raise UsageError(f"{path}: sample rate {rate} not supported; "
                         "use 16 kHz or 48 kHz")
    return rate, samples


def cmd_enhance(args):
    rate, samples = _load_input(args.input, args.rate)
    weights = load_model_file(args.model)
    out = enhance_signal(weights, samples, _engine_config(args, rate))
    audio.write_wav(args.output, rate, out)
    return EXIT_OK


def cmd_oracle_enhance(args):
    rate_c, clean = _load_input(args.clean)
    rate_n, noisy = _load_input(args.noisy)
    if rate_c != rate_n:
        raise UsageError("clean and noisy sample rates differ")
    if len(clean) != len(noisy):
        raise UsageError("clean and noisy lengths differ")
    out = oracle_enhance_signal(clean, noisy, _engine_config(args, rate_n))
    audio.write_wav(args.output, rate_n, out)
    return EXIT_OK


def _wav_listing(directory) -> list[Path]:
    files = sorted(Path(directory).rglob("*.wav"))
    if not files:
        raise UsageError(f"no .wav files under {directory}")
    return files


def _build_example(task):
    """One dataset example; returns (manifest line, records) or None for a
    degenerate draw.  Runs in worker processes, so arguments and results
    stay picklable; files are written by the parent to keep numbering
    contiguous."""
    seed, speech_path, noise_path, rir_path = task
    rate, speech = audio.read_wav(speech_path)
    rate_n, noise = audio.read_wav(noise_path)
    _, rir = audio.read_wav(rir_path)
    if rate != 48000 or rate_n != 48000:
        raise UsageError("dataset corpora must be 48 kHz")
    try:
        ex = mix_example(speech, noise, rir, seed=seed,
                         rir_id=Path(rir_path).name)
    except DegenerateExampleError:
        return None
    return manifest_line(ex), extract_targets(ex.clean, ex.noisy,
                                              ex.sample_rate)


def cmd_make_dataset(args):
    speech_files = _wav_listing(args.speech)
    noise_files = _wav_listing(args.noise)
    rir_files = _wav_listing(args.rir)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    # seeds and file picks are drawn up front so results do not depend on
    # worker scheduling; degenerate draws are retried with fresh seeds
    rng = np.random.default_rng(args.seed)
    lines = []
    made = 0
    attempts = 0
    while made < args.count and attempts < args.count * 4:
        batch = []
        for _ in range(args.count - made):
            attempts += 1
            seed = int(rng.integers(0, 2**31))
            pick = np.random.default_rng(seed)
            batch.append((
                seed,
                str(speech_files[pick.integers(len(speech_files))]),
                str(noise_files[pick.integers(len(noise_files))]),
                str(rir_files[pick.integers(len(rir_files))]),
            ))
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_build_example, batch))
        else:
            results = [_build_example(t) for t in batch]
        for result in results:
            if result is not None:
                line, records = result
                write_pnft(outdir / f"ex{made:05d}.pnft", records)
                lines.append(line)
                made += 1
    if made < args.count:
        raise UsageError(f"only {made}/{args.count} usable examples "
                         "(inputs too degenerate)")
    (outdir / "manifest.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {made} examples to {outdir}")
    return EXIT_OK


def cmd_make_targets(args):
    rate_c, clean = _load_input(args.clean)
    rate_n, noisy = _load_input(args.noisy)
    if rate_c != rate_n or len(clean) != len(noisy):
        raise UsageError("clean and noisy must share rate and length")
    records = extract_targets(clean, noisy, rate_n)
    write_pnft(args.output, records)
    print(f"wrote {len(records.features)} frames to {args.output}")
    return EXIT_OK


def cmd_eval_loss(args):
    records = read_pnft(args.targets)
    weights = load_model_file(args.model)
    state = ModelState(weights)
    cfg = LossConfig()
    g_losses, r_losses = [], []
    predictions = []
    for i in range(len(records.features)):
        gains, strengths = infer(state, records.features[i])
        g_losses.append(gain_loss(records.gains[i], gains, cfg))
        r_losses.append(strength_loss(records.strengths[i], strengths, cfg))
        if args.dump_predictions:
            predictions.append(np.concatenate([[i], gains, strengths]))
    if args.dump_predictions:
        with open(args.dump_predictions, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame"]
                            + [f"gain_{b}" for b in range(34)]
                            + [f"strength_{b}" for b in range(34)])
            for row in predictions:
                writer.writerow([int(row[0])] + [f"{v:.8f}" for v in row[1:]])
    if args.plot:
        from .plots import loss_trace_figure
        loss_trace_figure(g_losses, r_losses, args.plot)
    n = max(len(g_losses), 1)
    print(f"frames={len(g_losses)} gain_loss={sum(g_losses) / n:.6f} "
          f"strength_loss={sum(r_losses) / n:.6f} "
          f"combined={(sum(g_losses) + sum(r_losses)) / n:.6f}")
    return EXIT_OK


def cmd_comb_response(args):
    if args.pitch_hz <= 0:
        raise UsageError("--pitch-hz must be positive")
    rate = args.rate
    period = int(round(rate / args.pitch_hz))
    cfg = CombConfig.make(args.m)
    lags, taps, _ = cfg.taps_for_period(period)
    freqs = np.arange(0.0, args.max_hz + args.step_hz / 2, args.step_hz)
    phases = np.exp(-2j * np.pi * np.outer(freqs / rate, lags * period))
    mags = np.abs(phases @ taps)
    mags_db = 20.0 * np.log10(np.maximum(mags, 1e-8))

    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frequency_hz", "magnitude_db"])
        for f, m in zip(freqs, mags_db):
            writer.writerow([f"{f:.2f}", f"{m:.4f}"])
    if not args.no_plot:
        from .plots import comb_response_figure
        fig_path = Path(args.output).with_suffix(".png")
        comb_response_figure(freqs, mags_db, args.pitch_hz, fig_path)
        print(f"wrote {args.output} and {fig_path}")
    else:
        print(f"wrote {args.output}")
    return EXIT_OK


def cmd_bench(args):
    weights = load_model_file(args.model)
    report = bench(weights, seconds=args.seconds, batch_frames=args.batch)
    print(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fbdenoise",
                     description="Streaming fullband speech enhancement")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="denoise a WAV file with a model")
    p.add_argument("--model", required=True)
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--no-pitch", action="store_true",
                   help="disable pitch comb filtering")
    p.add_argument("--no-postfilter", action="store_true",
                   help="disable the envelope postfilter and output high-pass")
    p.add_argument("--rate", type=int, choices=(16000, 48000),
                   help="require this input sample rate")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("oracle-enhance",
                       help="denoise using ideal targets from a clean reference")
    p.add_argument("clean")
    p.add_argument("noisy")
    p.add_argument("output")
    p.add_argument("--no-pitch", action="store_true")
    p.add_argument("--no-postfilter", action="store_true")
    p.set_defaults(func=cmd_oracle_enhance)

    p = sub.add_parser("make-dataset",
                       help="synthesize training mixtures and target records")
    p.add_argument("--speech", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--rir", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for example generation")
    p.add_argument("out")
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("make-targets",
                       help="extract feature/target records from a pair of WAVs")
    p.add_argument("clean")
    p.add_argument("noisy")
    p.add_argument("output")
    p.set_defaults(func=cmd_make_targets)

    p = sub.add_parser("eval-loss", help="evaluate model losses on records")
    p.add_argument("targets")
    p.add_argument("--model", required=True)
    p.add_argument("--dump-predictions", metavar="CSV",
                   help="write per-frame gains/strengths to a CSV file")
    p.add_argument("--plot", metavar="PNG",
                   help="render the per-frame loss traces to a figure")
    p.set_defaults(func=cmd_eval_loss)

    p = sub.add_parser("comb-response",
                       help="export the comb filter magnitude response")
    p.add_argument("--pitch-hz", type=float, required=True)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--rate", type=int, default=48000)
    p.add_argument("--max-hz", type=float, default=2000.0)
    p.add_argument("--step-hz", type=float, default=1.0)
    p.add_argument("--no-plot", action="store_true",
                   help="skip the PNG figure next to the CSV")
    p.add_argument("output")
    p.set_defaults(func=cmd_comb_response)

    p = sub.add_parser("bench", help="measure throughput of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--batch", type=int, default=1,
                   help="frames per call (e.g. 4 for 40 ms batching)")
    p.add_argument("--seconds", type=float, default=5.0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
