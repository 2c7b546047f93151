"""In-process simulation of detection rounds.

A :class:`World` wires the four entities together over a synchronous
:class:`Channel`. The channel passes every frame through an optional
adversary hook, which may drop, modify, duplicate or reorder frames before
delivery; the security tests drive all attacks through that hook.
"""
from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .. import ops
from ..packing import DataSample, SchemeDims
from .entities import (
    DEFAULT_FRESHNESS_MS,
    Analysis,
    ControlCenter,
    FogAggregator,
    FogAnalyzer,
    ProtocolError,
    PublicParams,
    Secrets,
    SizeModel,
    SmartSensor,
    cc_init,
)

# hook(kind, src, dst, frame) -> frames actually delivered (in order)
AdversaryHook = Callable[[str, str, str, bytes], Sequence[bytes]]

SAMPLE_INTERVAL_MS = 100
HOP_DELAY_MS = 5


@dataclass
class WorldConfig:
    kappa: int = 1024
    curve: str = "bls12-381"
    l: int = 2
    N: int = 10
    d: int = 4095
    threshold: float = 1e7
    freshness_ms: int = DEFAULT_FRESHNESS_MS
    seed: int = 0
    allow_unsafe: bool = False
    size_model: SizeModel = field(default_factory=SizeModel)

    @property
    def dims(self) -> SchemeDims:
        return SchemeDims(self.l, self.N, self.d)

    @classmethod
    def from_json(cls, obj: dict) -> "WorldConfig":
        obj = dict(obj)
        curve = obj.pop("kappa1_or_curve", obj.pop("curve", "bls12-381"))
        sm = obj.pop("size_model", None) or {}
        sm = {k: v for k, v in sm.items() if k in SizeModel.__dataclass_fields__}
        known = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        return cls(curve=curve, size_model=SizeModel(**sm), **known)

    def to_json(self) -> dict:
        return {
            "kappa": self.kappa,
            "kappa1_or_curve": self.curve,
            "l": self.l,
            "N": self.N,
            "d": self.d,
            "threshold": self.threshold,
            "freshness_ms": self.freshness_ms,
            "seed": self.seed,
            "size_model": {**self.size_model.to_json()},
        }


@dataclass
class TraceEntry:
    kind: str
    src: str
    dst: str
    wire: bytes
    ts: int

    @property
    def size_bits(self) -> int:
        return 8 * len(self.wire)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "src": self.src,
            "dst": self.dst,
            "ts": self.ts,
            "size_bits": self.size_bits,
            "wire": self.wire.hex(),
        }


@dataclass
class RoundTrace:
    messages: list[TraceEntry]
    analysis: Analysis | None
    accepted_verdict: int | None
    counters: dict[str, dict[str, int]]
    timings_s: dict[str, float]

    @property
    def M_f(self) -> int | None:
        return self.analysis.M_f if self.analysis else None

    def scatter_fraction(self) -> list[list[Fraction]] | None:
        return self.analysis.decode.scatter_fraction() if self.analysis else None

    def to_jsonl(self) -> str:
        lines = [json.dumps(m.to_json(), sort_keys=True) for m in self.messages]
        summary = {
            "kind": "summary",
            "M_f": str(self.M_f) if self.M_f is not None else None,
            "dispersion": self.analysis.dispersion.dispersion if self.analysis else None,
            "verdict": self.accepted_verdict,
            "counters": self.counters,
        }
        lines.append(json.dumps(summary, sort_keys=True))
        return "\n".join(lines) + "\n"


class Channel:
    def __init__(self, hook: AdversaryHook | None = None):
        self.hook = hook
        self.log: list[TraceEntry] = []

    def send(self, kind: str, src: str, dst: str, frame: bytes, ts: int) -> list[bytes]:
        self.log.append(TraceEntry(kind, src, dst, frame, ts))
        if self.hook is None:
            return [frame]
        return list(self.hook(kind, src, dst, frame))


class World:
    """All four entities for one sensor, built from a single CC bootstrap."""

    def __init__(
        self,
        params: PublicParams,
        secrets: Secrets,
        threshold: float,
        *,
        freshness_ms: int = DEFAULT_FRESHNESS_MS,
        rng: random.Random | None = None,
        offset: bool = True,
    ):
        self.params = params
        self.rng = rng or random.Random(0)
        self.sensor = SmartSensor(params, secrets.sensor, rng=self.rng)
        self.aggregator = FogAggregator(params, secrets.aggregator, freshness_ms=freshness_ms, offset=offset, rng=self.rng)
        self.analyzer = FogAnalyzer(params, secrets.analyzer, threshold, freshness_ms=freshness_ms)
        self.cc = ControlCenter(params, freshness_ms=freshness_ms)
        self.clock = 1_000_000

    @classmethod
    def from_config(cls, cfg: WorldConfig, **kw) -> "World":
        rng = random.Random(cfg.seed)
        params, secrets = cc_init(
            cfg.kappa,
            cfg.dims,
            group=cfg.curve,
            rng=rng,
            allow_unsafe=cfg.allow_unsafe,
            size_model=cfg.size_model,
            paillier_keys=kw.pop("paillier_keys", None),
        )
        return cls(params, secrets, cfg.threshold, freshness_ms=cfg.freshness_ms, rng=rng, **kw)

    def entities(self) -> dict[str, object]:
        return {"SS": self.sensor, "FD": self.aggregator, "SD": self.analyzer, "CC": self.cc}

    def counters(self) -> dict[str, ops.OpCounter]:
        return {name: e.counter for name, e in self.entities().items()}


def run_round(
    world: World,
    samples: Iterable[DataSample],
    *,
    hook: AdversaryHook | None = None,
) -> RoundTrace:
    """Drive one detection round: N samples, one aggregate, one report.

    Entity errors propagate as :class:`ProtocolError` with the rejecting
    entity and check attached.
    """
    samples = list(samples)
    ch = Channel(hook)
    before = {k: ops.OpCounter(c) for k, c in world.counters().items()}
    timings = {"SS": 0.0, "FD": 0.0, "SD": 0.0, "CC": 0.0}
    width = world.params.ct_width
    aggregate = None
    for s in samples:
        world.clock += SAMPLE_INTERVAL_MS
        t0 = time.perf_counter()
        msg = world.sensor.produce(s, world.clock)
        timings["SS"] += time.perf_counter() - t0
        for frame in ch.send("sample", "SS", "FD", msg.to_wire(width), world.clock):
            t0 = time.perf_counter()
            out = world.aggregator.receive(frame, world.clock + HOP_DELAY_MS)
            timings["FD"] += time.perf_counter() - t0
            if out is not None:
                aggregate = out
    if aggregate is None:
        raise ProtocolError("FD", "round-complete", f"only {len(world.aggregator.inbox)} samples buffered")

    world.clock += HOP_DELAY_MS
    report = None
    for frame in ch.send("aggregate", "FD", "SD", aggregate.to_wire(width), world.clock):
        t0 = time.perf_counter()
        report = world.analyzer.receive(frame, world.clock + HOP_DELAY_MS)
        timings["SD"] += time.perf_counter() - t0
    if report is None:
        raise ProtocolError("SD", "round-complete", "aggregate never delivered")

    world.clock += HOP_DELAY_MS
    verdict = None
    for frame in ch.send("report", "SD", "CC", report.to_wire(), world.clock):
        t0 = time.perf_counter()
        verdict = world.cc.receive(frame, world.clock + HOP_DELAY_MS)
        timings["CC"] += time.perf_counter() - t0

    counters = {}
    for name, c in world.counters().items():
        delta = ops.OpCounter(c)
        delta.subtract(before[name])
        counters[name] = delta.snapshot()
    return RoundTrace(
        messages=ch.log,
        analysis=world.analyzer.last_analysis,
        accepted_verdict=verdict,
        counters=counters,
        timings_s=timings,
    )
