"""The four protocol roles.

* :class:`ControlCenter` -- trusted; generates all keys and sequences and
  accepts signed detection reports.
* :class:`SmartSensor` -- packs, encrypts and signs each reading.
* :class:`FogAggregator` -- first-layer fog device. Batch-verifies ``N``
  samples and folds them into one ciphertext without decrypting anything.
* :class:`FogAnalyzer` -- second-layer fog device. Decrypts the aggregate
  once, decodes the scatter matrix and signs a verdict.

Each entity owns an :class:`~fogdetect.ops.OpCounter`, and only its own
secret material. Timestamps are simulated integer milliseconds.
"""
from __future__ import annotations

import logging
import random
import secrets
from dataclasses import dataclass, field

from .. import blsig, detection, ops, packing, paillier
from ..blsig import BilinearGroup, SigningKey, VerifyKey
from ..packing import DataSample, SchemeDims, ScatterDecode, SuperSeqs
from ..paillier import Ciphertext, PaillierPrivateKey, PaillierPublicKey
from .messages import AggregationResult, DetectionReport, EncryptedSample, MalformedMessage

log = logging.getLogger(__name__)

DEFAULT_FRESHNESS_MS = 30_000


class ProtocolError(Exception):
    """A message was rejected. ``entity`` and ``check`` say where and why."""

    def __init__(self, entity: str, check: str, detail: str = ""):
        super().__init__(f"{entity}: {check} failed" + (f" ({detail})" if detail else ""))
        self.entity = entity
        self.check = check


class VerificationError(ProtocolError):
    pass


class BatchVerificationError(VerificationError):
    def __init__(self, entity: str, detail: str = "", bad_indices: list[int] | None = None):
        super().__init__(entity, "batch-verify", detail)
        self.bad_indices = bad_indices


class ReplayError(ProtocolError):
    pass


class TamperAlarm(ProtocolError):
    """Signatures verified but the decrypted aggregate is structurally invalid."""


@dataclass(frozen=True)
class SizeModel:
    """Bit sizes for the communication-cost model (not the real encodings)."""

    ss_bits: int = 18
    ts_bits: int = 32
    report_bits: int = 19
    sd_bits: int = 9
    sig_bits: int = 160
    aes_block_bits: int = 128

    def __post_init__(self) -> None:
        bad = [k for k, v in self.__dict__.items() if not (isinstance(v, int) and v > 0)]
        if bad:
            raise ValueError(f"size model fields must be positive integers: {bad}")

    def s_trad(self, N: int) -> int:
        """Bits sent to CC when SS ships N AES-encrypted samples directly."""
        if N < 1:
            raise ValueError("N must be positive")
        return N * self.aes_block_bits + self.ss_bits + self.ts_bits + self.sig_bits

    def s_proposed(self) -> int:
        """Bits of one signed detection report (no dependence on N)."""
        return self.report_bits + self.sd_bits + self.ts_bits + self.sig_bits

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class PublicParams:
    group: BilinearGroup
    pk: PaillierPublicKey
    Y_s: VerifyKey
    Y_f: VerifyKey
    Y_u: VerifyKey
    seqs: SuperSeqs
    ids: dict[str, str]
    hash_id: str = "bls-basic-g2-sswu"
    size_model: SizeModel = field(default_factory=SizeModel)

    @property
    def dims(self) -> SchemeDims:
        return self.seqs.dims

    @property
    def ct_width(self) -> int:
        return self.pk.ciphertext_bytes

    def to_json(self) -> dict:
        return {
            "pairing": self.group.describe(),
            "paillier": self.pk.to_json(),
            "Y_s": self.Y_s.hex(),
            "Y_f": self.Y_f.hex(),
            "Y_u": self.Y_u.hex(),
            "hash": self.hash_id,
            "sequences": self.seqs.to_json(),
            "dims": {"l": self.dims.l, "N": self.dims.N, "d": self.dims.d},
            "ids": dict(self.ids),
            "size_model": self.size_model.to_json(),
        }


@dataclass(frozen=True)
class AnalyzerSecrets:
    sk: PaillierPrivateKey
    x_s: SigningKey


@dataclass(frozen=True)
class AggregatorSecrets:
    x_f: SigningKey


@dataclass(frozen=True)
class SensorSecrets:
    x_u: SigningKey


@dataclass(frozen=True)
class Secrets:
    analyzer: AnalyzerSecrets
    aggregator: AggregatorSecrets
    sensor: SensorSecrets


DEFAULT_IDS = {"ss": "SS-0001", "fd": "FD-01", "sd": "SD-01"}


def cc_init(
    kappa: int,
    dims: SchemeDims,
    ids: dict[str, str] | None = None,
    *,
    group: str | BilinearGroup = "bls12-381",
    rng: random.Random | None = None,
    paillier_keys: tuple[PaillierPublicKey, PaillierPrivateKey] | None = None,
    allow_unsafe: bool = False,
    size_model: SizeModel | None = None,
) -> tuple[PublicParams, Secrets]:
    """System initialisation by the control center.

    Raises :class:`~fogdetect.packing.CapacityError` (carrying ``max_n``) when
    ``dims.N`` samples do not fit in one ciphertext under the generated key.
    """
    rng = rng or secrets.SystemRandom()
    grp = blsig.get_group(group) if isinstance(group, str) else group
    if paillier_keys is None:
        pk, sk = paillier.keygen(kappa, rng, allow_unsafe=allow_unsafe)
    else:
        pk, sk = paillier_keys
    seqs = packing.build_sequences(dims, pk.n)
    x_s, Y_s = blsig.sig_keygen(grp, rng)
    x_f, Y_f = blsig.sig_keygen(grp, rng)
    x_u, Y_u = blsig.sig_keygen(grp, rng)
    params = PublicParams(
        group=grp,
        pk=pk,
        Y_s=Y_s,
        Y_f=Y_f,
        Y_u=Y_u,
        seqs=seqs,
        ids=dict(ids or DEFAULT_IDS),
        size_model=size_model or SizeModel(),
    )
    return params, Secrets(AnalyzerSecrets(sk, x_s), AggregatorSecrets(x_f), SensorSecrets(x_u))


class _Freshness:
    """Timestamp window plus duplicate suppression for one receiver."""

    def __init__(self, entity: str, window_ms: int):
        self.entity = entity
        self.window_ms = window_ms
        self._seen: dict[tuple, int] = {}

    def check(self, key: tuple, ts: int, now: int) -> None:
        if abs(now - ts) > self.window_ms:
            raise ReplayError(self.entity, "freshness", f"ts={ts} now={now} window={self.window_ms}ms")
        self._seen = {k: t for k, t in self._seen.items() if abs(now - t) <= self.window_ms}
        if key in self._seen:
            raise ReplayError(self.entity, "duplicate", f"{key} already seen")

    def record(self, key: tuple, ts: int) -> None:
        self._seen[key] = ts


class _Entity:
    role = "entity"

    def __init__(self, params: PublicParams, entity_id: str):
        self.params = params
        self.entity_id = entity_id
        self.counter = ops.OpCounter()

    def _parse(self, wire: bytes, cls):
        try:
            return cls.from_wire(wire, self.params.ct_width)
        except MalformedMessage as exc:
            raise VerificationError(self.role, "parse", str(exc)) from exc


class SmartSensor(_Entity):
    role = "SS"

    def __init__(self, params: PublicParams, secret: SensorSecrets, rng: random.Random | None = None):
        super().__init__(params, params.ids["ss"])
        self._x_u = secret.x_u
        self._rng = rng

    def produce(self, sample: DataSample, now: int) -> EncryptedSample:
        p = self.params
        with ops.counting(self.counter):
            m = packing.encode_sample(p.seqs, sample)
            c = paillier.encrypt(p.pk, m, rng=self._rng)
            unsigned = EncryptedSample(c, self.entity_id, now, blsig.Signature(b""))
            sigma = blsig.sign(p.group, self._x_u, unsigned.signed_bytes(p.ct_width))
        return EncryptedSample(c, self.entity_id, now, sigma)


class FogAggregator(_Entity):
    """Collects ``N`` samples, batch-verifies them and aggregates homomorphically.

    Holds only the public parameters and ``x_f``; it never sees a plaintext.
    """

    role = "FD"

    def __init__(
        self,
        params: PublicParams,
        secret: AggregatorSecrets,
        *,
        freshness_ms: int = DEFAULT_FRESHNESS_MS,
        offset: bool = True,
        weighted_batch: bool = True,
        diagnose: bool = False,
        rng: random.Random | None = None,
    ):
        super().__init__(params, params.ids["fd"])
        self._x_f = secret.x_f
        self._fresh = _Freshness(self.role, freshness_ms)
        self.offset = offset
        self.weighted_batch = weighted_batch
        self.diagnose = diagnose
        self._rng = rng
        self.inbox: list[EncryptedSample] = []
        # Precomputed once; encrypts sum(a) * d with r = 1.
        self.C_a = paillier.encrypt_deterministic(params.pk, packing.expected_offset(params.seqs))

    def receive(self, wire: bytes, now: int) -> AggregationResult | None:
        """Accept one sample; return the aggregate once ``N`` are buffered."""
        msg = self._parse(wire, EncryptedSample)
        if msg.sensor_id != self.params.ids["ss"]:
            raise VerificationError(self.role, "sensor-id", msg.sensor_id)
        key = (msg.sensor_id, msg.ts)
        self._fresh.check(key, msg.ts, now)
        self._fresh.record(key, msg.ts)
        self.inbox.append(msg)
        if len(self.inbox) == self.params.dims.N:
            batch, self.inbox = self.inbox, []
            return self.aggregate(batch, now)
        return None

    def aggregate(self, batch: list[EncryptedSample], now: int) -> AggregationResult:
        p = self.params
        N = p.dims.N
        if len(batch) != N:
            raise ValueError(f"expected {N} samples, got {len(batch)}")
        if len({m.sensor_id for m in batch}) != 1:
            raise VerificationError(self.role, "sensor-id", "mixed senders in batch")
        with ops.counting(self.counter):
            items = [(m.signed_bytes(p.ct_width), m.sigma) for m in batch]
            if not blsig.batch_verify(p.group, p.Y_u, items, weighted=self.weighted_batch, rng=self._rng):
                bad = None
                if self.diagnose:
                    bad = [i for i, (b, s) in enumerate(items) if not blsig.verify(p.group, p.Y_u, b, s)]
                raise BatchVerificationError(self.role, f"round of {N} samples rejected", bad)
            try:
                for m in batch:
                    paillier.validate(p.pk, m.ciphertext)
                R_f = self._fold([m.ciphertext for m in batch])
            except paillier.InvalidCiphertextError as exc:
                raise VerificationError(self.role, "ciphertext", str(exc)) from exc
            unsigned = AggregationResult(R_f, batch[0].sensor_id, self.entity_id, now, blsig.Signature(b""))
            sigma = blsig.sign(p.group, self._x_f, unsigned.signed_bytes(p.ct_width))
        return AggregationResult(R_f, unsigned.sensor_id, self.entity_id, now, sigma)

    def _fold(self, cts: list[Ciphertext]) -> Ciphertext:
        pk, seqs = self.params.pk, self.params.seqs
        N = len(cts)
        C = cts[0]
        for c in cts[1:]:
            C = paillier.ct_mul(pk, C, c)
        C_inv = paillier.ct_inv(pk, C)
        R_f = None
        for c, b in zip(cts, seqs.b):
            base = paillier.ct_mul(pk, c, self.C_a) if self.offset else c
            CD = paillier.ct_mul(pk, paillier.ct_pow(pk, base, N), C_inv)
            term = paillier.ct_pow(pk, CD, b)
            R_f = term if R_f is None else paillier.ct_mul(pk, R_f, term)
        return R_f


@dataclass(frozen=True)
class Analysis:
    """SD-side record of one analysed aggregate (kept for traces and tests)."""

    M_f: int
    decode: ScatterDecode
    dispersion: detection.DispersionResult
    verdict: int


class FogAnalyzer(_Entity):
    role = "SD"

    def __init__(
        self,
        params: PublicParams,
        secret: AnalyzerSecrets,
        threshold: float,
        *,
        freshness_ms: int = DEFAULT_FRESHNESS_MS,
    ):
        super().__init__(params, params.ids["sd"])
        self._sk = secret.sk
        self._x_s = secret.x_s
        self.threshold = float(threshold)
        self._fresh = _Freshness(self.role, freshness_ms)
        self.last_analysis: Analysis | None = None

    def receive(self, wire: bytes, now: int) -> DetectionReport:
        p = self.params
        msg = self._parse(wire, AggregationResult)
        if msg.fd_id != p.ids["fd"]:
            raise VerificationError(self.role, "fd-id", msg.fd_id)
        key = (msg.sensor_id, msg.fd_id, msg.ts)
        self._fresh.check(key, msg.ts, now)
        with ops.counting(self.counter):
            if not blsig.verify(p.group, p.Y_f, msg.signed_bytes(p.ct_width), msg.sigma):
                raise VerificationError(self.role, "signature")
            self._fresh.record(key, msg.ts)
            try:
                M_f = paillier.decrypt(self._sk, p.pk, msg.ciphertext)
                dec = packing.decode_aggregate(p.seqs, M_f)
            except (paillier.InvalidCiphertextError, packing.CorruptAggregateError) as exc:
                raise TamperAlarm(self.role, "aggregate-structure", str(exc)) from exc
            disp = detection.dispersion(dec.scatter)
            verdict = 0 if detection.classify(disp.dispersion, self.threshold) else 1
            self.last_analysis = Analysis(M_f, dec, disp, verdict)
            unsigned = DetectionReport(verdict, msg.sensor_id, self.entity_id, now, blsig.Signature(b""))
            sigma = blsig.sign(p.group, self._x_s, unsigned.signed_bytes())
        return DetectionReport(verdict, msg.sensor_id, self.entity_id, now, sigma)


class ControlCenter(_Entity):
    role = "CC"

    def __init__(self, params: PublicParams, *, freshness_ms: int = DEFAULT_FRESHNESS_MS):
        super().__init__(params, "CC")
        self._fresh = _Freshness(self.role, freshness_ms)
        self.verdicts: list[tuple[str, int, int]] = []

    def receive(self, wire: bytes, now: int) -> int:
        p = self.params
        msg = self._parse(wire, DetectionReport)
        if msg.sd_id != p.ids["sd"]:
            raise VerificationError(self.role, "sd-id", msg.sd_id)
        key = (msg.sensor_id, msg.sd_id, msg.ts)
        self._fresh.check(key, msg.ts, now)
        with ops.counting(self.counter):
            if not blsig.verify(p.group, p.Y_s, msg.signed_bytes(), msg.sigma):
                raise VerificationError(self.role, "signature")
        self._fresh.record(key, msg.ts)
        self.verdicts.append((msg.sensor_id, msg.ts, msg.verdict))
        if msg.verdict == 0:
            log.info("sensor %s reported faulty at ts=%d", msg.sensor_id, msg.ts)
        return msg.verdict

