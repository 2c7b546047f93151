"""Data ingestion: CSV loading, affine quantisation into ``[0, d]`` and windowing.

MIT-BIH record 100 is not bundled. Convert it externally to a CSV with one
column per signal (e.g. ``MLII,V5`` in raw ADC units, 11-bit, 0..2047 around
a 1024 baseline); with ``scale=1, offset=0`` those values already lie in
``[0, 4095]``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class QuantizationError(ValueError):
    def __init__(self, offending: list[tuple[int, list[float]]]):
        preview = ", ".join(f"row {r}: {vals}" for r, vals in offending[:5])
        more = f" (+{len(offending) - 5} more)" if len(offending) > 5 else ""
        super().__init__(f"{len(offending)} rows quantise outside [0, d]: {preview}{more}")
        self.offending = offending


@dataclass(frozen=True)
class IngestSpec:
    path: Path | str
    columns: Sequence[str]
    d: int = 4095
    scale: float = 1.0
    offset: float = 0.0
    window: int = 10
    stride: int | None = None

    def quantize(self, values: np.ndarray) -> np.ndarray:
        return np.rint(np.asarray(values, dtype=float) * self.scale + self.offset).astype(np.int64)

    def dequantize(self, q: np.ndarray) -> np.ndarray:
        return (np.asarray(q, dtype=float) - self.offset) / self.scale


def read_columns(path: Path | str, columns: Sequence[str]) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"columns {missing} not in {path}")
        rows = [[float(row[c]) for c in columns] for row in reader]
    return np.array(rows, dtype=float).reshape(-1, len(columns))


def quantize_series(spec: IngestSpec, raw: np.ndarray) -> np.ndarray:
    q = spec.quantize(raw)
    bad = np.where(((q < 0) | (q > spec.d)).any(axis=1))[0]
    if bad.size:
        raise QuantizationError([(int(r), raw[r].tolist()) for r in bad])
    return q


def windows(series: np.ndarray, N: int, stride: int | None = None) -> np.ndarray:
    """Consecutive windows of ``N`` rows; returns shape ``(K, N, l)``."""
    stride = stride or N
    if series.shape[0] < N:
        raise ValueError(f"series has {series.shape[0]} rows, need at least {N} for one window")
    starts = range(0, series.shape[0] - N + 1, stride)
    return np.stack([series[s : s + N] for s in starts])


def ingest(spec: IngestSpec) -> np.ndarray:
    """Read, quantise and window a CSV file into sample sets."""
    raw = read_columns(spec.path, spec.columns)
    return windows(quantize_series(spec, raw), spec.window, spec.stride)


def ingest_series(spec: IngestSpec) -> np.ndarray:
    return quantize_series(spec, read_columns(spec.path, spec.columns))


def split_halves(series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First half for training, second half for testing."""
    mid = series.shape[0] // 2
    return series[:mid], series[mid:]


def sample_sets(series: np.ndarray, N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` windows of ``N`` consecutive rows.

    Non-overlapping windows are used when the series is long enough,
    otherwise start positions are drawn with replacement.
    """
    n_blocks = series.shape[0] // N
    if n_blocks == 0:
        raise ValueError(f"series has {series.shape[0]} rows, need at least {N}")
    if n_blocks >= count:
        starts = rng.choice(n_blocks, size=count, replace=False) * N
    else:
        starts = rng.integers(0, series.shape[0] - N + 1, size=count)
    return np.stack([series[s : s + N] for s in np.sort(starts)])


@dataclass(frozen=True)
class SyntheticSpec:
    """Per-dimension sinusoid plus Gaussian white noise, quantised to ``[0, d]``.

    An optional periodic pulse train (``beat_*``) gives a minority of windows
    a much larger spread, like QRS complexes in an ECG trace; set
    ``beat_amplitude`` to zeros to disable it.
    """

    length: int = 1_300_000
    l: int = 2
    d: int = 4095
    baseline: Sequence[float] = (1000.0, 1100.0)
    amplitude: Sequence[float] = (60.0, 48.0)
    period: Sequence[float] = (720.0,)
    phase: Sequence[float] = (0.0, 1.3)
    noise_std: float = 4.0
    beat_period: float = 280.0
    beat_width: float = 4.0
    beat_amplitude: Sequence[float] = (1600.0, -800.0)
    beat_lag: Sequence[float] = (0.0, 6.0)


def synthetic_series(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(spec.length, dtype=float)[:, None]
    base = np.resize(np.asarray(spec.baseline, dtype=float), spec.l)
    amp = np.resize(np.asarray(spec.amplitude, dtype=float), spec.l)
    ph = np.resize(np.asarray(spec.phase, dtype=float), spec.l)
    per = np.resize(np.asarray(spec.period, dtype=float), spec.l)
    x = base + amp * np.sin(2 * math.pi * t / per + ph)
    beat_amp = np.resize(np.asarray(spec.beat_amplitude, dtype=float), spec.l)
    if np.any(beat_amp):
        lag = np.resize(np.asarray(spec.beat_lag, dtype=float), spec.l)
        offset = np.mod(t - lag, spec.beat_period) - spec.beat_period / 2
        x = x + beat_amp * np.exp(-0.5 * (offset / spec.beat_width) ** 2)
    x = x + rng.normal(0.0, spec.noise_std, size=x.shape)
    return np.clip(np.rint(x), 0, spec.d).astype(np.int64)


def write_csv(path: Path | str, series: np.ndarray, columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(series.tolist())
