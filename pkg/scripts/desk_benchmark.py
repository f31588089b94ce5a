"""Benchmark all nine modality/variant pipelines on synthetic data.

    python scripts/desk_benchmark.py [--config run.json] [--iters 20] [--warmup 3]
                                     [--format markdown|csv] [--out report.md]

Uses the default run configuration unless ``--config`` is given. Energy is
only reported when ``--power-cmd`` names a command that prints watts.
"""

import argparse
import sys
from dataclasses import replace

from rfpipe.bench import BenchSpec, ExternalCommandProvider, MemoryTracker, emit_report, run_benchmark
from rfpipe.config import load_config
from rfpipe.core import Modality, Variant
from rfpipe.pipeline import Pipeline
from rfpipe.rfio import synth_rf


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--iters", type=int, default=20)
    ap.add_argument("--warmup", type=int, default=3)
    ap.add_argument("--power-cmd")
    ap.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    rc = load_config(args.config)
    rf = synth_rf(list(rc.scatterers), rc.probe, rc.pipeline, rc.n_l)
    print(f"input {rf.n_l}x{rf.n_c}x{rf.n_f} float32, {rf.nbytes} bytes per call", file=sys.stderr)

    results = []
    for modality in Modality:
        for variant in Variant:
            memory = MemoryTracker()
            cfg = replace(rc.pipeline, variant=variant, modality=modality)
            pipe = Pipeline(cfg, rc.probe, rc.grid, rc.n_l, memory=memory)
            spec = BenchSpec(rf.nbytes, args.warmup, args.iters, pipe.pipeline_id, variant.label, modality.value)
            power = ExternalCommandProvider(args.power_cmd) if args.power_cmd else None
            r = run_benchmark(pipe, rf, spec, power=power, memory=memory)
            print(f"{pipe.pipeline_id:24} {variant.label:17} {r.t_avg * 1e3:9.3f} ms", file=sys.stderr)
            results.append(r)
            pipe.release()

    text = emit_report(results, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
