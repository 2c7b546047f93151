"""Paillier cryptosystem with the homomorphic operations used by fog aggregation.

Uses the ``g = n + 1`` variant, so ``g^m mod n^2 = 1 + m*n`` and encryption
costs one real modular exponentiation (``r^n``) plus a cheap product. The
operation counter still records two exponentiations per encryption because
``g^m`` is logically an exponentiation in ``Z_{n^2}``.
"""
from __future__ import annotations

import math
import random
import secrets
from dataclasses import dataclass, field

import gmpy2

from . import ops

# Miller-Rabin rounds; error probability < 4^-40 = 2^-80.
MR_ROUNDS = 40
MIN_SAFE_KAPPA = 1024
_KEYGEN_ATTEMPTS = 64


class PaillierError(Exception):
    pass


class KeyGenerationError(PaillierError):
    pass


class PlaintextRangeError(PaillierError, ValueError):
    pass


class InvalidRandomnessError(PaillierError, ValueError):
    pass


class InvalidCiphertextError(PaillierError, ValueError):
    pass


@dataclass(frozen=True)
class PaillierPublicKey:
    n: int
    g: int
    n_sq: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_sq", self.n * self.n)

    @property
    def bits(self) -> int:
        return self.n.bit_length()

    @property
    def ciphertext_bytes(self) -> int:
        """Fixed width of a ciphertext in canonical big-endian encoding."""
        return (2 * self.n.bit_length() + 7) // 8

    def to_json(self) -> dict[str, str]:
        return {"n": str(self.n), "g": str(self.g)}

    @classmethod
    def from_json(cls, obj: dict) -> "PaillierPublicKey":
        return cls(n=int(obj["n"]), g=int(obj["g"]))


@dataclass(frozen=True)
class PaillierPrivateKey:
    lam: int
    mu: int
    # Retained only so tests can check key structure.
    p: int = field(repr=False)
    q: int = field(repr=False)

    def to_json(self) -> dict[str, str]:
        return {"lambda": str(self.lam), "mu": str(self.mu)}

    @classmethod
    def from_json(cls, obj: dict) -> "PaillierPrivateKey":
        return cls(lam=int(obj["lambda"]), mu=int(obj["mu"]), p=0, q=0)


@dataclass(frozen=True)
class Ciphertext:
    value: int

    def to_bytes(self, width: int) -> bytes:
        return self.value.to_bytes(width, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        return cls(int.from_bytes(data, "big"))


def _L(u: int, n: int) -> int:
    return (u - 1) // n


def _powmod(base: int, exp: int, mod: int) -> int:
    ops.tick(ops.EXP)
    return int(gmpy2.powmod(base, exp, mod))


def keypair_from_primes(p: int, q: int) -> tuple[PaillierPublicKey, PaillierPrivateKey]:
    """Build a keypair from given primes (used for fixtures and by keygen)."""
    if p == q:
        raise KeyGenerationError("p and q must be distinct")
    if not (gmpy2.is_prime(p, MR_ROUNDS) and gmpy2.is_prime(q, MR_ROUNDS)):
        raise KeyGenerationError("p and q must be prime")
    n = p * q
    if math.gcd(n, (p - 1) * (q - 1)) != 1:
        raise KeyGenerationError("gcd(n, phi(n)) != 1")
    lam = math.lcm(p - 1, q - 1)
    pk = PaillierPublicKey(n=n, g=n + 1)
    u = int(gmpy2.powmod(pk.g, lam, pk.n_sq))
    ell = _L(u, n)
    if math.gcd(ell, n) != 1:
        raise KeyGenerationError("generator check failed")
    mu = pow(ell, -1, n)
    return pk, PaillierPrivateKey(lam=lam, mu=mu, p=p, q=q)


def _random_prime(bits: int, rng: random.Random) -> int:
    # Top two bits set so the product of two such primes has exactly 2*bits bits.
    while True:
        cand = rng.getrandbits(bits) | (0b11 << (bits - 2)) | 1
        if gmpy2.is_prime(cand, MR_ROUNDS):
            return cand


def keygen(
    kappa: int,
    rng: random.Random | None = None,
    *,
    allow_unsafe: bool = False,
) -> tuple[PaillierPublicKey, PaillierPrivateKey]:
    """Generate a keypair whose modulus has exactly ``2 * kappa`` bits.

    ``kappa`` below 1024 is refused unless ``allow_unsafe`` is set; keys as
    small as ``kappa = 16`` exist so tests can enumerate the plaintext space.
    """
    if kappa < 16:
        raise ValueError("kappa must be at least 16")
    if kappa < MIN_SAFE_KAPPA and not allow_unsafe:
        raise ValueError(f"kappa={kappa} is below {MIN_SAFE_KAPPA}; pass allow_unsafe=True")
    rng = rng or secrets.SystemRandom()
    for _ in range(_KEYGEN_ATTEMPTS):
        p = _random_prime(kappa, rng)
        q = _random_prime(kappa, rng)
        if p == q:
            continue
        try:
            pk, sk = keypair_from_primes(p, q)
        except KeyGenerationError:
            continue
        if pk.n.bit_length() == 2 * kappa:
            return pk, sk
    raise KeyGenerationError(f"no valid keypair after {_KEYGEN_ATTEMPTS} attempts")


def random_unit(pk: PaillierPublicKey, rng: random.Random | None = None) -> int:
    rng = rng or secrets.SystemRandom()
    while True:
        r = rng.randrange(1, pk.n)
        if math.gcd(r, pk.n) == 1:
            return r


def encrypt(
    pk: PaillierPublicKey,
    m: int,
    r: int | None = None,
    rng: random.Random | None = None,
) -> Ciphertext:
    if not 0 <= m < pk.n:
        raise PlaintextRangeError(f"plaintext {m} outside [0, n)")
    if r is None:
        r = random_unit(pk, rng)
    elif not 0 < r < pk.n or math.gcd(r, pk.n) != 1:
        raise InvalidRandomnessError("r must be a unit modulo n")
    if pk.g == pk.n + 1:
        ops.tick(ops.EXP)
        gm = (1 + m * pk.n) % pk.n_sq
    else:
        gm = _powmod(pk.g, m, pk.n_sq)
    rn = _powmod(r, pk.n, pk.n_sq)
    return Ciphertext(gm * rn % pk.n_sq)


def validate(pk: PaillierPublicKey, c: Ciphertext) -> None:
    if not 0 < c.value < pk.n_sq or math.gcd(c.value, pk.n) != 1:
        raise InvalidCiphertextError("ciphertext is not a unit modulo n^2")


def decrypt(sk: PaillierPrivateKey, pk: PaillierPublicKey, c: Ciphertext) -> int:
    validate(pk, c)
    u = _powmod(c.value, sk.lam, pk.n_sq)
    return _L(u, pk.n) * sk.mu % pk.n


def ct_mul(pk: PaillierPublicKey, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Homomorphic addition: the result decrypts to ``m1 + m2 mod n``."""
    ops.tick(ops.MUL_ZN2)
    return Ciphertext(c1.value * c2.value % pk.n_sq)


def ct_pow(pk: PaillierPublicKey, c: Ciphertext, k: int) -> Ciphertext:
    """Homomorphic scaling: the result decrypts to ``k * m mod n``."""
    if k < 0:
        raise ValueError("exponent must be non-negative")
    return Ciphertext(_powmod(c.value, k, pk.n_sq))


def ct_inv(pk: PaillierPublicKey, c: Ciphertext) -> Ciphertext:
    ops.tick(ops.INV_ZN2)
    try:
        return Ciphertext(pow(c.value, -1, pk.n_sq))
    except ValueError as exc:
        raise InvalidCiphertextError("ciphertext is not invertible modulo n^2") from exc


def ct_div(pk: PaillierPublicKey, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Homomorphic subtraction: the result decrypts to ``m1 - m2 mod n``."""
    return ct_mul(pk, c1, ct_inv(pk, c2))


def encrypt_deterministic(pk: PaillierPublicKey, m: int) -> Ciphertext:
    """Encryption with ``r = 1``; for public constants such as the range offset."""
    return encrypt(pk, m, r=1)
