"""Steady-state benchmark harness: warmup, timed loop, power and memory accounting.

Metrics:

* ``fps = 1 / t_avg``
* ``throughput_mbps = b_in / (t_avg * 1e6)``
* ``energy_per_run = integral(max(P(t) - P_idle, 0) dt) / n_runs`` over the
  timed window (trapezoidal rule)
* peak bytes of the pipeline's tracked tensor arena after warmup
"""

from __future__ import annotations

import csv
import io
import logging
import math
import shlex
import subprocess
import threading
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .core import Modality, Variant

log = logging.getLogger(__name__)

ABSENT = "—"
REPORT_COLUMNS = ("Pipeline", "Variant", "T_avg (ms)", "FPS", "MB/s", "J/run", "Peak Mem (GB)")


class BenchmarkError(RuntimeError):
    def __init__(self, iteration: int, phase: str, cause: BaseException):
        super().__init__(f"pipeline failed during {phase} iteration {iteration}: {cause}")
        self.iteration = iteration
        self.phase = phase


class MemoryAccountingError(RuntimeError):
    pass


class EnergyUnavailable(RuntimeError):
    pass


def fps(t_avg: float) -> float:
    if not t_avg > 0:
        raise ValueError(f"t_avg must be positive, got {t_avg}")
    return 1.0 / t_avg


def throughput_mbps(b_in: float, t_avg: float) -> float:
    if not b_in > 0:
        raise ValueError(f"b_in must be positive, got {b_in}")
    if not t_avg > 0:
        raise ValueError(f"t_avg must be positive, got {t_avg}")
    return b_in / (t_avg * 1e6)


@dataclass(frozen=True)
class PowerSample:
    t: float
    watts: float


def energy_per_run(trace: Sequence[PowerSample], idle_watts: float, n_runs: int) -> float:
    """Incremental energy per run from a power trace covering the timed window.

    Power below the idle baseline is clamped to zero before integrating.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if len(trace) == 0:
        raise EnergyUnavailable("empty power trace")
    t = np.array([s.t for s in trace], dtype=np.float64)
    if np.any(np.diff(t) < 0):
        raise ValueError("power trace timestamps must be non-decreasing")
    p = np.maximum(np.array([s.watts for s in trace], dtype=np.float64) - idle_watts, 0.0)
    total = float(np.sum(0.5 * (p[1:] + p[:-1]) * np.diff(t)))
    return total / n_runs


class MemoryTracker:
    """Byte counter with a resettable high-water mark; safe across threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._current = 0
        self._peak = 0

    def alloc(self, nbytes: int) -> None:
        if nbytes < 0:
            raise MemoryAccountingError(f"negative allocation {nbytes}")
        with self._lock:
            self._current += nbytes
            if self._current > self._peak:
                self._peak = self._current

    def free(self, nbytes: int) -> None:
        with self._lock:
            if nbytes < 0 or nbytes > self._current:
                raise MemoryAccountingError(f"free of {nbytes} bytes exceeds {self._current} tracked")
            self._current -= nbytes

    def reset_peak(self) -> None:
        with self._lock:
            self._peak = self._current

    def peak(self) -> int:
        return self._peak

    @property
    def current_bytes(self) -> int:
        return self._current

    @property
    def peak_bytes(self) -> int:
        return self._peak


class PowerProvider(Protocol):
    def measure_idle(self) -> float: ...

    def start(self) -> None: ...

    def stop(self) -> list[PowerSample]: ...


class ScriptedTraceProvider:
    """Replays a fixed trace instead of sampling hardware.

    Samples with ``t < 0`` form the idle window; the rest is returned as the
    timed-window trace. ``idle_watts`` overrides the idle window mean.
    """

    def __init__(self, samples: Iterable[PowerSample], idle_watts: float | None = None):
        samples = list(samples)
        self.idle_samples = [s for s in samples if s.t < 0]
        self.samples = [s for s in samples if s.t >= 0]
        self.idle_watts = idle_watts

    @classmethod
    def from_file(cls, path, idle_watts: float | None = None) -> "ScriptedTraceProvider":
        samples = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                fields = line.split()
                if len(fields) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 't_seconds watts'")
                samples.append(PowerSample(float(fields[0]), float(fields[1])))
        return cls(samples, idle_watts)

    def measure_idle(self) -> float:
        if self.idle_watts is not None:
            return self.idle_watts
        if not self.idle_samples:
            raise EnergyUnavailable("trace has no idle window (t < 0) and no idle_watts given")
        return float(np.mean([s.watts for s in self.idle_samples]))

    def start(self) -> None:
        pass

    def stop(self) -> list[PowerSample]:
        return list(self.samples)


class SampledPowerProvider:
    """Polls ``read_watts`` from a background thread at ``rate_hz``.

    The idle baseline is the mean over ``idle_window`` seconds sampled before
    the timed loop starts. The sampler only appends to its trace, so the timed
    path never waits on it.
    """

    def __init__(self, read_watts: Callable[[], float], rate_hz: float = 10.0, idle_window: float = 2.0):
        self.read_watts = read_watts
        self.period = 1.0 / rate_hz
        self.idle_window = idle_window
        self._trace: list[PowerSample] = []
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def _sample(self) -> PowerSample:
        return PowerSample(time.monotonic(), float(self.read_watts()))

    def measure_idle(self) -> float:
        readings = []
        end = time.monotonic() + self.idle_window
        while True:
            readings.append(self._sample().watts)
            if time.monotonic() >= end:
                break
            time.sleep(self.period)
        return float(np.mean(readings))

    def _run(self):
        while not self._stop.is_set():
            try:
                self._trace.append(self._sample())
            except Exception as exc:  # telemetry errors end the trace, never the benchmark
                log.warning("power sampling stopped: %s", exc)
                return
            self._stop.wait(self.period)

    def start(self) -> None:
        self._trace = []
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="power-sampler", daemon=True)
        self._thread.start()

    def stop(self) -> list[PowerSample]:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        try:
            self._trace.append(self._sample())
        except Exception:
            pass
        return list(self._trace)


def command_reader(command: str, timeout: float = 5.0) -> Callable[[], float]:
    """Run ``command`` per poll and parse the first non-empty output line as watts."""
    argv = shlex.split(command)

    def read() -> float:
        out = subprocess.run(argv, capture_output=True, text=True, timeout=timeout, check=True).stdout
        for line in out.splitlines():
            if line.strip():
                return float(line.strip().split()[0])
        raise ValueError(f"telemetry command {command!r} printed no wattage")

    return read


class ExternalCommandProvider(SampledPowerProvider):
    def __init__(self, command: str, rate_hz: float = 10.0, idle_window: float = 2.0):
        super().__init__(command_reader(command), rate_hz, idle_window)
        self.command = command


@dataclass(frozen=True)
class BenchSpec:
    input_bytes: int
    warmup_iters: int = 10
    timed_iters: int = 100
    pipeline: str = ""
    variant: str = ""
    modality: str = ""

    def __post_init__(self):
        if self.timed_iters < 1:
            raise ValueError("timed_iters must be >= 1")
        if self.warmup_iters < 0:
            raise ValueError("warmup_iters must be >= 0")
        if not self.input_bytes > 0:
            raise ValueError("input_bytes must be positive")


@dataclass(frozen=True)
class BenchResult:
    pipeline: str
    variant: str
    t_avg: float
    fps: float
    throughput_mbps: float
    energy_j_per_run: float | None = None
    peak_mem_bytes: int | None = None
    input_bytes: int | None = None

    @classmethod
    def from_timing(cls, pipeline: str, variant: str, t_avg: float, input_bytes: int, **extra) -> "BenchResult":
        return cls(pipeline, variant, t_avg, fps(t_avg), throughput_mbps(input_bytes, t_avg), input_bytes=input_bytes, **extra)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BenchResult":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})


def run_benchmark(
    pipeline: Callable,
    inputs,
    spec: BenchSpec,
    power: PowerProvider | None = None,
    memory: MemoryTracker | None = None,
    sync: Callable[[], None] | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> BenchResult:
    """Time ``spec.timed_iters`` forward passes after ``spec.warmup_iters`` untimed ones.

    ``sync`` runs inside every timed pass (device synchronisation; a no-op on
    CPU). The memory tracker's peak is reset after warmup so it reflects
    steady state only. Power provider failures leave the energy field empty.
    """
    sync = sync or (lambda: None)
    for i in range(spec.warmup_iters):
        try:
            pipeline(inputs)
            sync()
        except Exception as exc:
            raise BenchmarkError(i, "warmup", exc) from exc
    if memory is not None:
        memory.reset_peak()

    idle = None
    if power is not None:
        try:
            idle = power.measure_idle()
            power.start()
        except Exception as exc:
            log.warning("power provider unavailable: %s", exc)
            power = None

    total = 0.0
    try:
        for i in range(spec.timed_iters):
            t0 = clock()
            try:
                pipeline(inputs)
                sync()
            except Exception as exc:
                raise BenchmarkError(i, "timed", exc) from exc
            total += clock() - t0
    finally:
        trace = None
        if power is not None:
            try:
                trace = power.stop()
            except Exception as exc:
                log.warning("power provider failed on stop: %s", exc)

    t_avg = total / spec.timed_iters
    if not t_avg > 0:
        t_avg = math.ulp(0.0)
    energy = None
    if trace is not None and idle is not None:
        try:
            energy = energy_per_run(trace, idle, spec.timed_iters)
        except (EnergyUnavailable, ValueError) as exc:
            log.warning("energy unavailable: %s", exc)
    return BenchResult.from_timing(
        spec.pipeline,
        spec.variant,
        t_avg,
        spec.input_bytes,
        energy_j_per_run=energy,
        peak_mem_bytes=memory.peak() if memory is not None else None,
    )


_PIPELINE_ORDER = [m.pipeline_id for m in (Modality.COLOR_DOPPLER, Modality.POWER_DOPPLER, Modality.BMODE)]
_VARIANT_ORDER = [v.label for v in (Variant.GATHER, Variant.FULL_CNN, Variant.SPARSE)]


def _rank(order: list[str], name: str) -> tuple[int, str]:
    return (order.index(name), "") if name in order else (len(order), name)


def report_rows(results: Sequence[BenchResult]) -> list[list[str]]:
    ordered = sorted(results, key=lambda r: (_rank(_PIPELINE_ORDER, r.pipeline), _rank(_VARIANT_ORDER, r.variant)))
    rows = []
    for r in ordered:
        rows.append(
            [
                r.pipeline,
                r.variant,
                f"{r.t_avg * 1e3:.3f}",
                f"{r.fps:.1f}",
                f"{r.throughput_mbps:.2f}",
                ABSENT if r.energy_j_per_run is None else f"{r.energy_j_per_run:.3f}",
                ABSENT if r.peak_mem_bytes is None else f"{r.peak_mem_bytes / 1e9:.3f}",
            ]
        )
    return rows


def emit_report(results: Sequence[BenchResult], fmt: str = "markdown") -> str:
    """Render results as a Pipeline/Variant/T_avg/FPS/MB/s/J/run/Peak Mem table.

    Rows are ordered by pipeline, then variant; missing metrics print as an em dash.
    """
    if not results:
        raise ValueError("no results to report")
    rows = report_rows(results)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(REPORT_COLUMNS) + " |", "|" + "|".join(["---"] * 2 + ["---:"] * 5) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
