"""Command-line front end: ``rfpipe {synth,run,bench,report}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error
(unreadable or malformed input), 4 pipeline failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import (
    BenchResult,
    BenchSpec,
    ExternalCommandProvider,
    MemoryTracker,
    ScriptedTraceProvider,
    emit_report,
    run_benchmark,
)
from .config import RunConfig, load_config
from .core import Modality, Variant
from .modalities import write_pgm, write_raw
from .pipeline import Pipeline
from .rfio import RfFileHeader, RfFormatError, load_rf, save_rf, synth_rf

EXIT_USAGE, EXIT_DATA, EXIT_PIPELINE = 2, 3, 4

log = logging.getLogger("rfpipe")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_run_config(args) -> RunConfig:
    try:
        cfg = load_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_USAGE) from exc
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid config: {exc}", EXIT_USAGE) from exc
    return cfg


def _load_input(args):
    try:
        rf, header = load_rf(args.input)
    except (OSError, RfFormatError) as exc:
        raise CliError(f"cannot load {args.input}: {exc}", EXIT_DATA) from exc
    return rf, header


def _build_pipeline(args, header: RfFileHeader, memory=None) -> tuple[Pipeline, RunConfig]:
    cfg = _load_run_config(args)
    if header.n_c != cfg.probe.n_elements:
        raise CliError(f"file has {header.n_c} channels, probe has {cfg.probe.n_elements} elements", EXIT_DATA)
    changes = {}
    if args.variant:
        changes["variant"] = args.variant
    if args.modality:
        changes["modality"] = args.modality
    try:
        cfg = cfg.with_header(header).with_pipeline(**changes)
        pipe = Pipeline(cfg.pipeline, cfg.probe, cfg.grid, cfg.n_l, memory=memory)
    except ValueError as exc:
        raise CliError(f"unsupported configuration: {exc}", EXIT_USAGE) from exc
    return pipe, cfg


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    rf = synth_rf(list(cfg.scatterers), cfg.probe, cfg.pipeline, cfg.n_l)
    if args.dtype == "int16":
        data = np.round(rf.data.astype(np.float64) * args.int16_scale)
        if np.abs(data).max(initial=0) > 32767:
            raise CliError("int16 scale overflows; lower --int16-scale", EXIT_USAGE)
        rf = type(rf)(data.astype(np.int16))
    header = RfFileHeader.from_config(rf, cfg.pipeline, 0 if args.dtype == "int16" else 1)
    try:
        n = save_rf(args.out, rf, header)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_DATA) from exc
    print(f"wrote {args.out}: n_l={rf.n_l} n_c={rf.n_c} n_f={rf.n_f} dtype={args.dtype}")
    print(f"payload_bytes={n}")
    return 0


def _display_range(modality: Modality, cfg: RunConfig):
    if modality is Modality.BMODE:
        return 0.0, 1.0
    if modality is Modality.COLOR_DOPPLER:
        vn = cfg.pipeline.v_nyquist
        return -vn, vn
    return None, None


def cmd_run(args) -> int:
    rf, header = _load_input(args)
    pipe, cfg = _build_pipeline(args, header)
    try:
        img = pipe(rf)
    except Exception as exc:
        raise CliError(f"pipeline failed: {exc}", EXIT_PIPELINE) from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    first = img[0] if img.ndim == 3 else img
    lo, hi = _display_range(cfg.pipeline.modality, cfg)
    write_pgm(out.with_suffix(".pgm"), first, lo, hi)
    write_raw(out.with_suffix(".f32"), img)
    print(f"{pipe.pipeline_id} [{cfg.pipeline.variant.label}] -> {out.with_suffix('.pgm')}, {out.with_suffix('.f32')}")
    print(f"raw_shape={'x'.join(map(str, img.shape))}")
    return 0


def _power_provider(args):
    if args.no_energy:
        return None
    try:
        if args.power_trace:
            return ScriptedTraceProvider.from_file(args.power_trace, args.idle_watts)
        if args.power_cmd:
            return ExternalCommandProvider(args.power_cmd, args.power_rate, args.idle_window)
    except (OSError, ValueError) as exc:
        log.warning("power provider disabled: %s", exc)
    return None


def cmd_bench(args) -> int:
    rf, header = _load_input(args)
    memory = MemoryTracker()
    pipe, cfg = _build_pipeline(args, header, memory=memory)
    spec = BenchSpec(
        input_bytes=header.payload_bytes,
        warmup_iters=cfg.warmup_iters if args.warmup is None else args.warmup,
        timed_iters=cfg.timed_iters if args.iters is None else args.iters,
        pipeline=pipe.pipeline_id,
        variant=cfg.pipeline.variant.label,
        modality=cfg.pipeline.modality.value,
    )
    try:
        result = run_benchmark(pipe, rf, spec, power=_power_provider(args), memory=memory)
    except Exception as exc:
        raise CliError(str(exc), EXIT_PIPELINE) from exc
    if args.json:
        Path(args.json).write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    text = emit_report([result], args.format)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    results = []
    for path in args.results:
        try:
            payload = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read {path}: {exc}", EXIT_DATA) from exc
        for item in payload if isinstance(payload, list) else [payload]:
            results.append(BenchResult.from_dict(item))
    text = emit_report(results, args.format)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfpipe", description="Deterministic ultrasound RF-to-image pipelines and benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic RFB1 file")
    s.add_argument("--config", help="JSON run configuration (defaults if omitted)")
    s.add_argument("--out", required=True)
    s.add_argument("--dtype", choices=("float32", "int16"), default="float32")
    s.add_argument("--int16-scale", type=float, default=1000.0, help="multiplier before rounding to int16")
    s.set_defaults(func=cmd_synth)

    def pipeline_args(sp):
        sp.add_argument("--input", required=True, help="RFB1 file")
        sp.add_argument("--config", help="JSON run configuration for probe, grid and processing")
        sp.add_argument("--variant", choices=[v.value for v in Variant])
        sp.add_argument("--modality", choices=[m.value for m in Modality])

    r = sub.add_parser("run", help="one forward pass, writes PGM + raw float32")
    pipeline_args(r)
    r.add_argument("--out", required=True, help="output prefix; .pgm and .f32 are appended")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="steady-state benchmark with a markdown or CSV report")
    pipeline_args(b)
    b.add_argument("--warmup", type=int)
    b.add_argument("--iters", type=int)
    b.add_argument("--power-cmd", help="command printing instantaneous watts")
    b.add_argument("--power-trace", help="file of 't_seconds watts' lines; t < 0 is the idle window")
    b.add_argument("--power-rate", type=float, default=10.0, help="sampling rate for --power-cmd (Hz)")
    b.add_argument("--idle-window", type=float, default=2.0, help="idle baseline window for --power-cmd (s)")
    b.add_argument("--idle-watts", type=float, help="override the idle baseline")
    b.add_argument("--no-energy", action="store_true")
    b.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    b.add_argument("--out", help="also write the report here")
    b.add_argument("--json", help="write the BenchResult as JSON (input for 'report')")
    b.set_defaults(func=cmd_bench)

    rp = sub.add_parser("report", help="merge BenchResult JSON files into one report")
    rp.add_argument("results", nargs="+")
    rp.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "warmup", None) is not None and args.warmup < 0 or getattr(args, "iters", None) is not None and args.iters < 1:
        print("rfpipe: error: --warmup must be >= 0 and --iters >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CliError as exc:
        print(f"rfpipe: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
