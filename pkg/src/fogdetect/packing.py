"""Superincreasing-sequence packing of multidimensional samples.

A sample ``(d_1, ..., d_l)`` is packed as ``m = sum_j a_j * d_j``. After fog
aggregation the decrypted plaintext is

    M_f = sum_j a_j * sum_i b_i * v_ji,   v_ji = N*(d_ji + d) - sum_k d_jk

with every ``v_ji`` in ``(0, 2Nd)``. Because both sequences are
superincreasing with respect to ``2Nd``, ``M_f`` can be peeled digit by
digit, first along ``a`` (dimensions) and then along ``b`` (samples).

All arithmetic here is exact integer arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


class PackingError(Exception):
    pass


class CapacityError(PackingError):
    def __init__(self, message: str, max_n: int):
        super().__init__(message)
        self.max_n = max_n


class CorruptAggregateError(PackingError):
    """The aggregate does not have the structure honest inputs produce."""


class SampleRangeError(PackingError, ValueError):
    pass


@dataclass(frozen=True)
class SchemeDims:
    l: int
    N: int
    d: int

    def __post_init__(self) -> None:
        for name in ("l", "N", "d"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise TypeError(f"{name} must be an integer")
        if self.l < 1 or self.N < 2 or self.d < 1:
            raise ValueError(f"invalid dims l={self.l}, N={self.N}, d={self.d}")

    @property
    def width(self) -> int:
        """Per-digit bound ``2*N*d``."""
        return 2 * self.N * self.d


@dataclass(frozen=True)
class SuperSeqs:
    a: tuple[int, ...]
    b: tuple[int, ...]
    dims: SchemeDims

    @property
    def capacity_value(self) -> int:
        """``sum(a) * sum(b) * 2Nd``; must stay below the modulus."""
        return sum(self.a) * sum(self.b) * self.dims.width

    def to_json(self) -> dict:
        return {"a": [str(x) for x in self.a], "b": [str(x) for x in self.b]}

    @classmethod
    def from_json(cls, obj: dict, dims: SchemeDims) -> "SuperSeqs":
        return cls(tuple(int(x) for x in obj["a"]), tuple(int(x) for x in obj["b"]), dims)


@dataclass(frozen=True)
class DataSample:
    dims: tuple[int, ...]
    index: int = 0
    timestamp: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))


@dataclass(frozen=True)
class ScatterDecode:
    """Decoded aggregate.

    ``centered_scaled[j][i] = N*d_ji - sum_k d_jk`` (i.e. ``N`` times the
    centred value), ``scatter_exact = sum_i u_i u_i^T``; the scatter matrix
    itself is ``scatter_exact / N^3``.
    """

    centered_scaled: tuple[tuple[int, ...], ...]
    scatter_exact: tuple[tuple[int, ...], ...]
    N: int

    def scatter_fraction(self) -> list[list[Fraction]]:
        denom = self.N**3
        return [[Fraction(v, denom) for v in row] for row in self.scatter_exact]

    @property
    def scatter(self) -> np.ndarray:
        denom = self.N**3
        return np.array(
            [[float(Fraction(v, denom)) for v in row] for row in self.scatter_exact],
            dtype=float,
        )


def _sequences(l: int, N: int, d: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    w = 2 * N * d
    b = [1]
    prefix = 1
    for _ in range(1, N):
        nxt = prefix * w + 1
        b.append(nxt)
        prefix += nxt
    step = prefix * w  # sum(b) * 2Nd
    a = [1]
    prefix = 1
    for _ in range(1, l):
        nxt = prefix * step + 1
        a.append(nxt)
        prefix += nxt
    return tuple(a), tuple(b)


def capacity_value(l: int, N: int, d: int) -> int:
    a, b = _sequences(l, N, d)
    return sum(a) * sum(b) * 2 * N * d


def max_samples_for_bound(l: int, d: int, bound: int) -> int:
    """Largest ``N >= 2`` with ``capacity_value(l, N, d) < bound``, else 0."""
    if capacity_value(l, 2, d) >= bound:
        return 0
    lo, hi = 2, 4
    while capacity_value(l, hi, d) < bound:
        lo, hi = hi, hi * 2
    # capacity_value is strictly increasing in N
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if capacity_value(l, mid, d) < bound:
            lo = mid
        else:
            hi = mid
    return lo


def max_samples(l: int, d: int, modulus_bits: int, *, strict: bool = False) -> int:
    """Maximum number of samples one ciphertext can carry.

    The default bound is ``2**modulus_bits - 1``, the largest modulus of that
    length; ``strict`` uses ``2**(modulus_bits - 1)``, the smallest one.
    """
    if l < 1 or d < 1:
        raise ValueError("l and d must be >= 1")
    if modulus_bits < 2:
        raise ValueError("modulus_bits too small")
    bound = 2 ** (modulus_bits - 1) if strict else 2**modulus_bits - 1
    return max_samples_for_bound(l, d, bound)


def build_sequences(dims: SchemeDims, n: int) -> SuperSeqs:
    """Minimal superincreasing sequences for ``dims`` under modulus ``n``."""
    if n < 2:
        raise ValueError("modulus must be >= 2")
    a, b = _sequences(dims.l, dims.N, dims.d)
    seqs = SuperSeqs(a, b, dims)
    if seqs.capacity_value >= n:
        max_n = max_samples_for_bound(dims.l, dims.d, n)
        raise CapacityError(
            f"N={dims.N} exceeds capacity for l={dims.l}, d={dims.d}, "
            f"|n|={n.bit_length()} bits; max feasible N is {max_n}",
            max_n=max_n,
        )
    return seqs


def check_sequences(seqs: SuperSeqs, n: int) -> list[str]:
    """Evaluate all three constraints directly; return descriptions of violations."""
    w = seqs.dims.width
    problems = []
    if seqs.a[0] != 1 or seqs.b[0] != 1:
        problems.append("a_1 and b_1 must equal 1")
    for i in range(1, len(seqs.b)):
        if not sum(seqs.b[:i]) * w < seqs.b[i]:
            problems.append(f"b_{i + 1} not superincreasing")
    step = sum(seqs.b) * w
    for i in range(1, len(seqs.a)):
        if not sum(seqs.a[:i]) * step < seqs.a[i]:
            problems.append(f"a_{i + 1} not superincreasing")
    if not sum(seqs.a) * step < n:
        problems.append("capacity constraint violated")
    return problems


def _check_sample(sample: DataSample, dims: SchemeDims) -> None:
    if len(sample.dims) != dims.l:
        raise SampleRangeError(f"sample has {len(sample.dims)} dimensions, expected {dims.l}")
    for j, v in enumerate(sample.dims):
        if not 0 <= v <= dims.d:
            raise SampleRangeError(f"dimension {j} value {v} outside [0, {dims.d}]")


def encode_sample(seqs: SuperSeqs, sample: DataSample) -> int:
    _check_sample(sample, seqs.dims)
    return sum(a * v for a, v in zip(seqs.a, sample.dims))


def decode_sample(seqs: SuperSeqs, m: int) -> tuple[int, ...]:
    """Greedy inverse of :func:`encode_sample` (digits are below ``a_2``)."""
    out = []
    for a in reversed(seqs.a):
        out.append(m // a)
        m %= a
    return tuple(reversed(out))


def expected_offset(seqs: SuperSeqs) -> int:
    """Plaintext exponent ``sum_j a_j * d`` of the range-offset ciphertext."""
    return sum(seqs.a) * seqs.dims.d


def forward_aggregate_plain(
    seqs: SuperSeqs,
    samples: Sequence[DataSample],
    *,
    offset: bool = True,
    modulus: int | None = None,
) -> int:
    """Plaintext value the fog aggregate decrypts to.

    With ``offset=False`` each digit is ``N*d_ji - sum_k d_jk``, which can be
    negative; the total is then reduced mod ``modulus`` as decryption would.
    """
    dims = seqs.dims
    if len(samples) != dims.N:
        raise ValueError(f"expected {dims.N} samples, got {len(samples)}")
    for s in samples:
        _check_sample(s, dims)
    shift = dims.N * dims.d if offset else 0
    total = 0
    for j, a in enumerate(seqs.a):
        col = [s.dims[j] for s in samples]
        col_sum = sum(col)
        total += a * sum(b * (dims.N * v + shift - col_sum) for b, v in zip(seqs.b, col))
    if modulus is not None:
        total %= modulus
    elif total < 0:
        raise ValueError("negative aggregate requires a modulus")
    return total


def peel(seqs: SuperSeqs, M_f: int) -> list[list[int]]:
    """Split ``M_f`` into raw digits ``X[j][i]``, first by ``a`` then by ``b``.

    For an honest offset aggregate ``X[j][i] = N*(d_ji + d) - sum_k d_jk``.
    """
    X = M_f
    per_dim = [0] * len(seqs.a)
    for j in range(len(seqs.a) - 1, 0, -1):
        rest = X % seqs.a[j]
        per_dim[j] = (X - rest) // seqs.a[j]
        X = rest
    per_dim[0] = X
    digits = []
    for t in per_dim:
        row = [0] * len(seqs.b)
        Xi = t
        for i in range(len(seqs.b) - 1, 0, -1):
            rest = Xi % seqs.b[i]
            row[i] = (Xi - rest) // seqs.b[i]
            Xi = rest
        row[0] = Xi
        digits.append(row)
    return digits


def decode_aggregate(seqs: SuperSeqs, M_f: int) -> ScatterDecode:
    """Recover the centred data and exact scatter from a decrypted aggregate.

    Raises :class:`CorruptAggregateError` when ``M_f`` could not have come
    from in-range data under these sequences.
    """
    dims = seqs.dims
    if not 0 <= M_f < seqs.capacity_value:
        raise CorruptAggregateError("aggregate exceeds the packing capacity")
    digits = peel(seqs, M_f)
    shift = dims.N * dims.d
    lo, hi = dims.d, 2 * dims.N * dims.d - dims.d
    u = []
    for j, row in enumerate(digits):
        for i, v in enumerate(row):
            if not lo <= v <= hi:
                raise CorruptAggregateError(f"digit ({j}, {i}) = {v} outside [{lo}, {hi}]")
        centred = [v - shift for v in row]
        if sum(centred) != 0:
            raise CorruptAggregateError(f"dimension {j} centred values do not sum to zero")
        u.append(tuple(centred))
    S = tuple(
        tuple(sum(u[p][i] * u[q][i] for i in range(dims.N)) for q in range(dims.l))
        for p in range(dims.l)
    )
    return ScatterDecode(centered_scaled=tuple(u), scatter_exact=S, N=dims.N)
