"""Recompute FPS and MB/s for the reference benchmark rows from their T_avg.

    python scripts/reproduce_tables.py [--tolerance 0.005]

Prints each row with the recomputed values and the relative error, and exits
non-zero if any row is outside the tolerance.
"""

import argparse
import sys

from rfpipe.bench import fps, throughput_mbps
from rfpipe.reference import GPU_ROWS, REFERENCE_INPUT_BYTES, TPU_ROWS


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tolerance", type=float, default=0.005)
    args = ap.parse_args(argv)

    bad = 0
    print(f"{'set':4} {'pipeline':24} {'variant':17} {'T_avg ms':>9} {'FPS':>8} {'ref':>8} {'MB/s':>9} {'ref':>9}  worst")
    for label, rows in (("gpu", GPU_ROWS), ("tpu", TPU_ROWS)):
        for name, variant, t_ms, f_ref, mb_ref, *_ in rows:
            f = fps(t_ms * 1e-3)
            mb = throughput_mbps(REFERENCE_INPUT_BYTES, t_ms * 1e-3)
            err = max(abs(f / f_ref - 1), abs(mb / mb_ref - 1))
            flag = "" if err <= args.tolerance else "  <-- outside tolerance"
            bad += bool(flag)
            print(f"{label:4} {name:24} {variant:17} {t_ms:9.3f} {f:8.1f} {f_ref:8.1f} {mb:9.2f} {mb_ref:9.2f}  {err:.2%}{flag}")
    total = len(GPU_ROWS) + len(TPU_ROWS)
    print(f"\n{total - bad}/{total} rows within {args.tolerance:.1%}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
