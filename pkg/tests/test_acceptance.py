"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdicts are
repeated in an "acceptance criteria" section at the end of the run.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from acceptance_log import record
from instances import random_das_instance
from oracles import das_loop, rel_dev, replay_peak
from rfpipe.beamformer import das_dense_cnn, das_gather, das_sparse, max_rel_dev
from rfpipe.bench import (
    ABSENT,
    REPORT_COLUMNS,
    BenchResult,
    BenchSpec,
    MemoryTracker,
    PowerSample,
    ScriptedTraceProvider,
    emit_report,
    energy_per_run,
    fps,
    run_benchmark,
    throughput_mbps,
)
from rfpipe.core import ImageGrid, IqTensor, Modality, PipelineConfig, ProbeGeometry, Variant
from rfpipe.modalities import color_doppler, write_raw
from rfpipe.pipeline import Pipeline
from rfpipe.reference import GPU_ROWS, REFERENCE_INPUT_BYTES, TPU_ROWS
from rfpipe.rfio import Scatterer, synth_rf


def verdict(tag, ok, detail):
    record(tag, ok, detail)
    assert ok, detail


def test_ac1_metric_formulas():
    t0 = time.perf_counter()
    misses = []
    for name, variant, t_ms, f_ref, mb_ref, *_ in GPU_ROWS + TPU_ROWS:
        t = t_ms * 1e-3
        f, mb = fps(t), throughput_mbps(REFERENCE_INPUT_BYTES, t)
        ef, emb = abs(f / f_ref - 1), abs(mb / mb_ref - 1)
        if ef > 5e-3 or emb > 5e-3:
            misses.append(f"{name}/{variant}@{t_ms}ms fps {f:.1f} vs {f_ref} ({ef:.1%}), MB/s {mb:.2f} vs {mb_ref} ({emb:.1%})")
    n = len(GPU_ROWS) + len(TPU_ROWS)
    elapsed = time.perf_counter() - t0
    detail = f"{n - len(misses)}/{n} rows within 0.5% in {elapsed:.3f}s"
    if misses:
        detail += "; off: " + "; ".join(misses)
    verdict("AC1", not misses and elapsed < 1.0, detail)


def test_ac2_variant_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    instances = [random_das_instance(rng, n_f=8) for _ in range(20)]
    instances.append(random_das_instance(rng, n_f=8, nx=64, nz=64, n_c=32))
    worst_pair = worst_oracle = 0.0
    for inst in instances:
        g = das_gather(inst.iq, inst.table)
        sel = inst.sparse()
        s = das_sparse(inst.iq, sel)
        d = das_dense_cnn(inst.iq, inst.dense())
        worst_pair = max(worst_pair, max_rel_dev(s, g), max_rel_dev(d, g), max_rel_dev(d, s))
        ref = das_loop(inst.iq.re, inst.iq.im, inst.geom, inst.grid, inst.cfg, inst.n_s, hann=inst.hann)
        for out in (g, s, d):
            worst_oracle = max(worst_oracle, rel_dev(out.to_complex()[:, 0, :], ref))
    elapsed = time.perf_counter() - t0
    ok = worst_pair <= 1e-5 and worst_oracle <= 1e-6 and elapsed < 30
    verdict(
        "AC2",
        ok,
        f"{len(instances)} instances, variant dev {worst_pair:.2e} (<=1e-5), oracle dev {worst_oracle:.2e} (<=1e-6), {elapsed:.1f}s",
    )


def test_ac3_doppler_recovery():
    t0 = time.perf_counter()
    cfg = PipelineConfig(c=1540.0, prf=5000.0, fc=5e6, n_f=16, modality=Modality.COLOR_DOPPLER)
    nz, nx = 24, 20
    rng = np.random.default_rng(3)
    amp = rng.uniform(0.2, 2.0, (nz, nx))
    phi0 = rng.uniform(-np.pi, np.pi, (nz, nx))
    f = np.arange(cfg.n_f)[:, None, None]

    def to_iq(stack):
        return IqTensor.from_complex(np.moveaxis(stack, 0, -1).reshape(nz * nx, 1, cfg.n_f))

    moving = color_doppler(to_iq(amp * np.exp(1j * (phi0 + f * np.pi / 2))), (nz, nx), cfg)
    static = color_doppler(to_iq(np.repeat((amp * np.exp(1j * phi0))[None], cfg.n_f, axis=0)), (nz, nx), cfg)
    h = cfg.smoothing_kernel // 2
    interior = moving[h:-h, h:-h]
    rel = float(np.max(np.abs(interior / 0.1925 - 1)))
    still = float(np.max(np.abs(static)) / cfg.v_nyquist)
    elapsed = time.perf_counter() - t0
    ok = rel <= 0.01 and still < 1e-6 and elapsed < 10
    verdict("AC3", ok, f"quarter-cycle v within {rel:.2%} of 0.1925 m/s (<=1%), static |v|/v_nyq {still:.1e} (<1e-6)")


def test_ac4_point_spread_function():
    t0 = time.perf_counter()
    cfg = PipelineConfig(n_f=4, modality=Modality.BMODE)
    geom = ProbeGeometry(32, 3e-4, cfg.c)
    grid = ImageGrid(-4.8e-3, 4.8e-3, 10e-3, 30e-3, 33, 41)
    target = Scatterer(1.2e-3, 17.5e-3)
    rf = synth_rf([target], geom, cfg, 1024)
    truth = grid.nearest_pixel(target.x, target.z)
    peaks = {}
    for v in Variant:
        img = Pipeline(replace(cfg, variant=v), geom, grid, 1024)(rf)
        peaks[v] = tuple(int(i) for i in np.unravel_index(np.argmax(img[0]), img[0].shape))
    same = len(set(peaks.values())) == 1
    close = all(abs(p[0] - truth[0]) <= 1 and abs(p[1] - truth[1]) <= 1 for p in peaks.values())
    elapsed = time.perf_counter() - t0
    detail = f"truth {truth}, peaks " + ", ".join(f"{v.value} {p}" for v, p in peaks.items()) + f", {elapsed:.1f}s"
    verdict("AC4", same and close and elapsed < 30, detail)


def test_ac5_harness_protocol():
    calls = []

    def mock(_):
        time.sleep(0.1 if not calls else 1e-3)
        calls.append(1)

    r = run_benchmark(mock, None, BenchSpec(1000, warmup_iters=1, timed_iters=20))
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        b = float(rng.uniform(1, 1e10))
        t = float(10 ** rng.uniform(-6, 2))
        worst = max(worst, abs(throughput_mbps(b, t) - fps(t) * b / 1e6) / throughput_mbps(b, t))
    ok = r.t_avg < 5e-3 and worst <= 1e-12
    verdict("AC5", ok, f"t_avg {r.t_avg * 1e3:.3f} ms after 100 ms first call (<5 ms), identity dev {worst:.1e} (<=1e-12)")


def test_ac6_energy_accounting(data_dir):
    const = ScriptedTraceProvider.from_file(data_dir / "constant_100w.trace")
    e_const = energy_per_run(const.stop(), const.measure_idle(), 100)
    tri = ScriptedTraceProvider.from_file(data_dir / "triangle.trace")
    e_tri = energy_per_run(tri.stop(), tri.measure_idle(), 1)
    flat = [PowerSample(t, 35.0) for t in (0.0, 0.5, 2.0, 3.0)]
    e_idle = energy_per_run(flat, 35.0, 10)
    ok = e_const == 8.0 and e_tri == 100.0 and e_idle == 0.0
    verdict("AC6", ok, f"constant {e_const} J/run (8), triangle {e_tri} J (100), idle-equal {e_idle} J/run (0)")


def das_stage_peak(variant):
    cfg = PipelineConfig(n_f=8, variant=variant)
    geom = ProbeGeometry(32, 3e-4, cfg.c)
    grid = ImageGrid(-4.8e-3, 4.8e-3, 2e-3, 7e-3, 64, 64)
    memory = MemoryTracker()
    pipe = Pipeline(cfg, geom, grid, 256, memory=memory)
    rf = synth_rf([Scatterer(0.0, 4.5e-3)], geom, cfg, 256)
    iq = pipe.demodulate(rf)
    memory.alloc(iq.nbytes)
    memory.reset_peak()
    bf = pipe.beamform(iq)
    memory.alloc(bf.nbytes)
    peak = memory.peak()
    memory.free(bf.nbytes + iq.nbytes)
    pipe.release()
    return peak, bf


def test_ac7_memory_tracking():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(200):
        m, script, cur = MemoryTracker(), [], 0
        for _ in range(int(rng.integers(1, 80))):
            op = rng.choice(["alloc", "free", "reset"], p=[0.5, 0.4, 0.1])
            n = int(rng.integers(0, 10**9)) if op == "alloc" else int(rng.integers(0, cur + 1)) if op == "free" else 0
            cur += n if op == "alloc" else -n if op == "free" else 0
            script.append((op, n))
            {"alloc": m.alloc, "free": m.free, "reset": lambda _: m.reset_peak()}[op](n)
        mismatches += m.peak() != replay_peak(script)
    dense, bf_dense = das_stage_peak(Variant.FULL_CNN)
    sparse, bf_sparse = das_stage_peak(Variant.SPARSE)
    ok = mismatches == 0 and dense > sparse and max_rel_dev(bf_dense, bf_sparse) <= 1e-5
    verdict(
        "AC7",
        ok,
        f"replay mismatches {mismatches}/200, DAS peak dense {dense / 1e6:.1f} MB > sparse {sparse / 1e6:.1f} MB on 64x64/32ch",
    )


def test_ac8_determinism(small_setup, tmp_path):
    cfg, geom, grid, n_l = small_setup
    rf = synth_rf([Scatterer(0.0, 12e-3), Scatterer(-0.9e-3, 10e-3, 0.7, 0.2)], geom, cfg, n_l)
    diffs = []
    for v in Variant:
        for m in Modality:
            pipe = Pipeline(replace(cfg, variant=v, modality=m), geom, grid, n_l)
            a, b = pipe(rf), pipe(rf)
            pa, pb = tmp_path / f"{v.value}_{m.value}_a.f32", tmp_path / f"{v.value}_{m.value}_b.f32"
            write_raw(pa, a)
            write_raw(pb, b)
            if a.tobytes() != b.tobytes() or pa.read_bytes() != pb.read_bytes():
                diffs.append(f"{v.value}/{m.value}")
    verdict("AC8", not diffs, "9/9 pipelines bit-identical across runs" if not diffs else f"differ: {diffs}")


def test_ac9_report_fidelity():
    gpu = [
        BenchResult.from_timing(p, v, t * 1e-3, REFERENCE_INPUT_BYTES, energy_j_per_run=e, peak_mem_bytes=int(round(g * 1e9)))
        for p, v, t, _, _, e, g in GPU_ROWS
    ]
    text = emit_report(gpu)
    lines = text.splitlines()
    header = tuple(c.strip() for c in lines[0].strip("|").split("|"))
    rows = [[c.strip() for c in line.strip("|").split("|")] for line in lines[2:]]
    gpu_ok = header == REPORT_COLUMNS and len(rows) == 9 and all(len(r) == 7 and ABSENT not in r for r in rows)
    tpu = [BenchResult.from_timing(p, v, t * 1e-3, REFERENCE_INPUT_BYTES) for p, v, t, *_ in TPU_ROWS]
    tpu_rows = [[c.strip() for c in line.strip("|").split("|")] for line in emit_report(tpu).splitlines()[2:]]
    tpu_ok = len(tpu_rows) == 6 and all(r[5:] == [ABSENT, ABSENT] for r in tpu_rows)
    verdict("AC9", gpu_ok and tpu_ok, f"columns {list(header)}; 9 GPU rows populated; 6 TPU rows show '{ABSENT}' for J/run and Peak Mem")
