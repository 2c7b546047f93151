"""BLS short signatures with single and batch verification.

The scheme is written for a pairing ``e: G1 x G2 -> GT``. Verify keys live in
the key group (``Y = x*P``), message hashes and signatures in the signature
group (``sigma = x*H(m)``), and verification checks ``e(P, sigma) == e(Y, H(m))``.

Two backends implement :class:`BilinearGroup`:

* ``bls12-381`` -- the production curve (arkworks group arithmetic, standard
  hash-to-curve for G2).
* ``toy`` -- a deterministic, insecure bilinear map over a 62-bit prime used
  to keep exhaustive protocol tests fast.

Every pairing evaluation goes through :meth:`BilinearGroup.pair` and is
recorded by the active :class:`fogdetect.ops.OpCounter`.
"""
from __future__ import annotations

import abc
import hashlib
import random
import secrets
from dataclasses import dataclass
from typing import Any, Sequence

from . import ops

BATCH_WEIGHT_BITS = 64


class BilinearGroup(abc.ABC):
    name: str
    order: int
    key_bytes: int
    sig_bytes: int

    @abc.abstractmethod
    def generator(self) -> Any:
        """Generator ``P`` of the key group."""

    @abc.abstractmethod
    def key_mul(self, point: Any, k: int) -> Any: ...

    @abc.abstractmethod
    def sig_mul(self, point: Any, k: int) -> Any: ...

    @abc.abstractmethod
    def sig_add(self, a: Any, b: Any) -> Any: ...

    @abc.abstractmethod
    def hash_to_point(self, msg: bytes) -> Any: ...

    @abc.abstractmethod
    def _pair(self, key_elem: Any, sig_elem: Any) -> Any: ...

    @abc.abstractmethod
    def gt_mul(self, a: Any, b: Any) -> Any: ...

    @abc.abstractmethod
    def encode_key(self, point: Any) -> bytes: ...

    @abc.abstractmethod
    def decode_key(self, data: bytes) -> Any: ...

    @abc.abstractmethod
    def encode_sig(self, point: Any) -> bytes: ...

    @abc.abstractmethod
    def decode_sig(self, data: bytes) -> Any:
        """Decode a signature-group element; raise ``ValueError`` if malformed."""

    @abc.abstractmethod
    def is_identity_sig(self, point: Any) -> bool: ...

    def pair(self, key_elem: Any, sig_elem: Any) -> Any:
        ops.tick(ops.PAIRING)
        return self._pair(key_elem, sig_elem)

    def describe(self) -> dict[str, str]:
        return {"name": self.name, "order": str(self.order)}


class BLS12381Group(BilinearGroup):
    name = "bls12-381"
    order = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001
    key_bytes = 48
    sig_bytes = 96
    # Domain separation tag of the basic BLS signature suite over G2.
    DST = b"BLS_SIG_BLS12381G2_XMD:SHA-256_SSWU_RO_NUL_"

    def __init__(self) -> None:
        import blspy
        import py_arkworks_bls12381 as ark

        self._blspy = blspy
        self._ark = ark
        self._P = ark.G1Point()

    def _scalar(self, k: int):
        return self._ark.Scalar(k % self.order)

    def generator(self):
        return self._P

    def key_mul(self, point, k):
        return point * self._scalar(k)

    def sig_mul(self, point, k):
        return point * self._scalar(k)

    def sig_add(self, a, b):
        return a + b

    def hash_to_point(self, msg):
        ops.tick(ops.HASH_TO_GROUP)
        h = self._blspy.G2Element.from_message(msg, self.DST)
        return self._ark.G2Point.from_compressed_bytes_unchecked(bytes(h))

    def _pair(self, key_elem, sig_elem):
        return self._ark.GT.pairing(key_elem, sig_elem)

    def gt_mul(self, a, b):
        return a * b

    def encode_key(self, point):
        return bytes(point.to_compressed_bytes())

    def decode_key(self, data):
        if len(data) != self.key_bytes:
            raise ValueError("bad key length")
        return self._ark.G1Point.from_compressed_bytes(list(data))

    def encode_sig(self, point):
        return bytes(point.to_compressed_bytes())

    def decode_sig(self, data):
        if len(data) != self.sig_bytes:
            raise ValueError("bad signature length")
        # The checked decoder enforces curve and subgroup membership.
        return self._ark.G2Point.from_compressed_bytes(list(data))

    def is_identity_sig(self, point):
        return point == self._ark.G2Point.identity()


class ToyGroup(BilinearGroup):
    """``G1 = G2 = Z_q`` (additive, ``P = 1``), ``e(a, b) = g^(a*b) mod p``.

    Bilinear and non-degenerate, but discrete logs are trivial: never use it
    for anything except tests.
    """

    name = "toy"
    order = 2305843009213697249  # q, with p = 2q + 1 prime
    _p = 4611686018427394499
    _g = 4  # generates the order-q subgroup of Z_p^*
    key_bytes = 8
    sig_bytes = 8

    def generator(self):
        return 1

    def key_mul(self, point, k):
        return point * k % self.order

    def sig_mul(self, point, k):
        return point * k % self.order

    def sig_add(self, a, b):
        return (a + b) % self.order

    def hash_to_point(self, msg):
        ops.tick(ops.HASH_TO_GROUP)
        digest = hashlib.sha256(b"fogdetect-toy-h2g" + msg).digest()
        return int.from_bytes(digest, "big") % (self.order - 1) + 1

    def _pair(self, key_elem, sig_elem):
        return pow(self._g, key_elem * sig_elem % self.order, self._p)

    def gt_mul(self, a, b):
        return a * b % self._p

    def encode_key(self, point):
        return point.to_bytes(self.key_bytes, "big")

    def decode_key(self, data):
        return self._decode(data)

    def encode_sig(self, point):
        return point.to_bytes(self.sig_bytes, "big")

    def decode_sig(self, data):
        return self._decode(data)

    def _decode(self, data: bytes) -> int:
        if len(data) != 8:
            raise ValueError("bad element length")
        v = int.from_bytes(data, "big")
        if v >= self.order:
            raise ValueError("element out of range")
        return v

    def is_identity_sig(self, point):
        return point == 0


_GROUPS: dict[str, type[BilinearGroup]] = {"bls12-381": BLS12381Group, "toy": ToyGroup}
_group_cache: dict[str, BilinearGroup] = {}


def get_group(name: str = "bls12-381") -> BilinearGroup:
    if name not in _GROUPS:
        raise ValueError(f"unknown pairing backend {name!r}; choose from {sorted(_GROUPS)}")
    if name not in _group_cache:
        _group_cache[name] = _GROUPS[name]()
    return _group_cache[name]


@dataclass(frozen=True)
class SigningKey:
    x: int

    def __post_init__(self) -> None:
        if self.x < 1:
            raise ValueError("signing key must be non-zero")


@dataclass(frozen=True)
class VerifyKey:
    data: bytes

    def hex(self) -> str:
        return self.data.hex()


@dataclass(frozen=True)
class Signature:
    """Signature in the backend's canonical compressed encoding."""

    data: bytes

    def hex(self) -> str:
        return self.data.hex()

    @classmethod
    def fromhex(cls, s: str) -> "Signature":
        return cls(bytes.fromhex(s))


def sig_keygen(group: BilinearGroup, rng: random.Random | None = None) -> tuple[SigningKey, VerifyKey]:
    rng = rng or secrets.SystemRandom()
    x = rng.randrange(1, group.order)
    Y = group.key_mul(group.generator(), x)
    return SigningKey(x), VerifyKey(group.encode_key(Y))


def hash_to_group(group: BilinearGroup, msg: bytes):
    return group.hash_to_point(msg)


def sign(group: BilinearGroup, sk: SigningKey, msg: bytes) -> Signature:
    h = group.hash_to_point(msg)
    ops.tick(ops.G_MUL)
    return Signature(group.encode_sig(group.sig_mul(h, sk.x)))


def verify(group: BilinearGroup, vk: VerifyKey, msg: bytes, sig: Signature) -> bool:
    try:
        Y = group.decode_key(vk.data)
        sigma = group.decode_sig(sig.data)
    except (ValueError, TypeError, OverflowError):
        return False
    lhs = group.pair(group.generator(), sigma)
    rhs = group.pair(Y, group.hash_to_point(msg))
    return lhs == rhs


def batch_verify(
    group: BilinearGroup,
    vk: VerifyKey,
    items: Sequence[tuple[bytes, Signature]],
    *,
    weighted: bool = True,
    rng: random.Random | None = None,
) -> bool:
    """Check ``N`` single-signer signatures with ``N + 1`` pairings.

    With ``weighted`` (the default) each item is scaled by a random 64-bit
    weight ``w_i`` and the check is
    ``e(P, sum w_i*sigma_i) == prod e(Y, w_i*H(m_i))``. Without it the
    check is the plain sum ``e(P, sum sigma_i) == prod e(Y, H(m_i))``, which
    accepts two valid signatures exchanged between distinct messages.
    """
    if not items:
        raise ValueError("batch must be non-empty")
    try:
        Y = group.decode_key(vk.data)
        sigmas = [group.decode_sig(sig.data) for _, sig in items]
    except (ValueError, TypeError, OverflowError):
        return False
    hashes = [group.hash_to_point(msg) for msg, _ in items]
    if weighted:
        rng = rng or secrets.SystemRandom()
        weights = [rng.getrandbits(BATCH_WEIGHT_BITS) | 1 for _ in items]
        ops.tick(ops.G_MUL_SMALL, 2 * len(items))
        sigmas = [group.sig_mul(s, w) for s, w in zip(sigmas, weights)]
        hashes = [group.sig_mul(h, w) for h, w in zip(hashes, weights)]
    total = sigmas[0]
    for s in sigmas[1:]:
        total = group.sig_add(total, s)
    lhs = group.pair(group.generator(), total)
    rhs = group.pair(Y, hashes[0])
    for h in hashes[1:]:
        rhs = group.gt_mul(rhs, group.pair(Y, h))
    return lhs == rhs
