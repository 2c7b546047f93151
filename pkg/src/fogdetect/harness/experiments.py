"""Experiment drivers: capacity sweep, threshold training, TPR/FPR tables,
communication cost and multi-round protocol simulation.

Every driver returns a list of row dicts; :func:`write_table` renders them as
CSV with integers in decimal and reals to 6 significant digits, so identical
inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .. import detection, packing
from ..packing import DataSample
from ..protocol import RoundTrace, SizeModel, World, WorldConfig, run_round
from .data import sample_sets

CommModel = SizeModel

DEFAULT_SETS = 1000
DEFAULT_INJECT_FRACTION = 0.2


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def write_table(rows: Sequence[dict], out: TextIO | None = None) -> str:
    """Render rows as CSV (header from the first row); returns the text."""
    buf = io.StringIO()
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def experiment_capacity(
    ls: Iterable[int], ds: Iterable[int], bits_list: Iterable[int], *, strict: bool = False
) -> list[dict]:
    ls, ds, bits_list = list(ls), list(ds), list(bits_list)
    if not (ls and ds and bits_list):
        raise ValueError("l, d and bits ranges must be non-empty")
    return [
        {"l": l, "d": d, "bits": bits, "N_max": packing.max_samples(l, d, bits, strict=strict)}
        for bits in bits_list
        for l in ls
        for d in ds
    ]


def experiment_commcost(Ns: Iterable[int], model: CommModel | None = None) -> list[dict]:
    model = model or CommModel()
    return [{"N": N, "S_TRAD": model.s_trad(N), "S_proposed": model.s_proposed()} for N in Ns]


def _cell_rngs(seed: int, N: int) -> tuple[np.random.Generator, np.random.Generator]:
    # window choice and injection noise depend on (seed, N) only, so all
    # alpha^2 values in a row see the same windows and the same standard
    # normal draws (common random numbers)
    return np.random.default_rng([seed, N, 0]), np.random.default_rng([seed, N, 1])


def _check_enough(series: np.ndarray, N: int, n_sets: int) -> None:
    available = series.shape[0] - N + 1
    if available < n_sets:
        raise ValueError(
            f"series of {series.shape[0]} rows yields only {max(available, 0)} distinct windows of {N}; "
            f"need {n_sets}. Supply more data or lower the set count (overlapping windows are already allowed)"
        )


def train_thresholds(
    series: np.ndarray,
    alpha_sqs: Iterable[float],
    N: int,
    seed: int,
    *,
    d: int | None = None,
    n_sets: int = DEFAULT_SETS,
    target_tpr: float = 0.95,
    inject_fraction: float = DEFAULT_INJECT_FRACTION,
) -> list[detection.Threshold]:
    _check_enough(series, N, n_sets)
    out = []
    for a in alpha_sqs:
        sets_rng, inj_rng = _cell_rngs(seed, N)
        sets = sample_sets(series, N, n_sets, sets_rng)
        out.append(
            detection.train_threshold(
                sets, a, inj_rng, d=d, target_tpr=target_tpr, inject_fraction=inject_fraction
            )
        )
    return out


def threshold_rows(thresholds: Iterable[detection.Threshold]) -> list[dict]:
    return [
        {"alpha_sq": t.alpha_sq, "N": t.N, "threshold": t.value, "train_tpr": t.train_tpr}
        for t in thresholds
    ]


def experiment_effectiveness(
    series: np.ndarray,
    alpha_sqs: Iterable[float],
    Ns: Iterable[int],
    threshold: detection.Threshold | float,
    seed: int,
    *,
    d: int | None = None,
    n_sets: int = DEFAULT_SETS,
    inject_fraction: float = DEFAULT_INJECT_FRACTION,
) -> list[dict]:
    th = threshold.value if isinstance(threshold, detection.Threshold) else float(threshold)
    alpha_sqs = list(alpha_sqs)
    rows = []
    for N in Ns:
        _check_enough(series, N, n_sets)
        for a in alpha_sqs:
            sets_rng, inj_rng = _cell_rngs(seed, N)
            sets = sample_sets(series, N, n_sets, sets_rng)
            c = detection.evaluate(sets, th, a, inj_rng, d=d, inject_fraction=inject_fraction)
            rows.append({"alpha_sq": a, "N": N, "threshold": th, "tpr": c.tpr, "fpr": c.fpr, "seed": seed})
    return rows


@dataclass
class SimulationSummary:
    rounds: int = 0
    verdicts: dict[str, int] = field(default_factory=lambda: {"normal": 0, "faulty": 0})
    timings_s: dict[str, float] = field(default_factory=lambda: {"SS": 0.0, "FD": 0.0, "SD": 0.0, "CC": 0.0})
    counters: dict[str, dict[str, int]] = field(default_factory=dict)
    wall_s: float = 0.0

    def add(self, trace: RoundTrace) -> None:
        self.rounds += 1
        self.verdicts["faulty" if trace.accepted_verdict == 0 else "normal"] += 1
        for k, v in trace.timings_s.items():
            self.timings_s[k] += v
        for ent, cnt in trace.counters.items():
            acc = self.counters.setdefault(ent, {})
            for k, v in cnt.items():
                acc[k] = acc.get(k, 0) + v

    def per_round(self) -> dict[str, dict[str, float]]:
        r = max(self.rounds, 1)
        return {ent: {k: v / r for k, v in c.items()} for ent, c in self.counters.items()}

    def to_json(self, *, include_timing: bool = True) -> dict:
        out = {
            "rounds": self.rounds,
            "verdicts": dict(self.verdicts),
            "counters_total": {e: dict(sorted(c.items())) for e, c in sorted(self.counters.items())},
            "counters_per_round": {e: dict(sorted(c.items())) for e, c in sorted(self.per_round().items())},
        }
        if include_timing:
            out["timings_s"] = dict(self.timings_s)
            out["wall_s"] = self.wall_s
        return out


def round_samples(series: np.ndarray, N: int, rounds: int, rng: np.random.Generator) -> Iterator[list[DataSample]]:
    """Consecutive windows of ``series`` as :class:`DataSample` lists."""
    sets = sample_sets(series, N, rounds, rng)
    for k, s in enumerate(sets):
        yield [DataSample(tuple(int(v) for v in row), index=k * N + i) for i, row in enumerate(s)]


def simulate(
    cfg: WorldConfig,
    series: np.ndarray,
    rounds: int,
    *,
    world: World | None = None,
    traces: TextIO | None = None,
    **world_kw,
) -> SimulationSummary:
    """Run ``rounds`` protocol rounds over windows drawn from ``series``.

    Entity errors propagate unchanged (they carry the rejecting entity).
    """
    if series.shape[1] != cfg.l:
        raise ValueError(f"series has {series.shape[1]} columns, config says l={cfg.l}")
    world = world or World.from_config(cfg, **world_kw)
    summary = SimulationSummary()
    t0 = time.perf_counter()
    rng = np.random.default_rng([cfg.seed, cfg.N, 2])
    for samples in round_samples(series, cfg.N, rounds, rng):
        tr = run_round(world, samples)
        summary.add(tr)
        if traces is not None:
            traces.write(tr.to_jsonl())
    summary.wall_s = time.perf_counter() - t0
    return summary


def is_monotone(values: Sequence[float], *, increasing: bool = True, tol: float = 0.0) -> bool:
    """Non-decreasing (or non-increasing) allowing per-step slack ``tol``."""
    sign = 1.0 if increasing else -1.0
    return all(sign * (b - a) >= -tol - 1e-12 for a, b in zip(values, values[1:]))


def relative_drop(values: Sequence[int]) -> float:
    """``(first - last) / first``; 0 for a zero first value."""
    return (values[0] - values[-1]) / values[0] if values[0] else 0.0


__all__ = [
    "CommModel",
    "SimulationSummary",
    "experiment_capacity",
    "experiment_commcost",
    "experiment_effectiveness",
    "is_monotone",
    "relative_drop",
    "round_samples",
    "simulate",
    "threshold_rows",
    "train_thresholds",
    "write_table",
]
