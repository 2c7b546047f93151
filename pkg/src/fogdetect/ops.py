"""Operation counters for cost accounting.

Cryptographic primitives call :func:`tick` with a category name; the tally
goes to whichever :class:`OpCounter` is active in the current context.
Entities activate their own counter around each protocol step, which keeps
per-entity costs separate without threading a counter through every call.
"""
from __future__ import annotations

import contextlib
import contextvars
from collections import Counter
from typing import Iterator

# Categories used across the package.
EXP = "exp"  # exponentiation in Z_{n^2}
MUL_ZN2 = "mul_zn2"  # multiplication in Z_{n^2}
INV_ZN2 = "inv_zn2"  # modular inverse in Z_{n^2}
G_MUL = "g_mul"  # full-width scalar multiplication in the signature group
G_MUL_SMALL = "g_mul_small"  # short-scalar multiplication (batch weights)
PAIRING = "pairing"
HASH_TO_GROUP = "hash_to_group"


class OpCounter(Counter):
    """A ``collections.Counter`` keyed by operation category."""

    def snapshot(self) -> dict[str, int]:
        return {k: v for k, v in sorted(self.items()) if v}


_active: contextvars.ContextVar[OpCounter | None] = contextvars.ContextVar(
    "fogdetect_active_counter", default=None
)


def tick(category: str, amount: int = 1) -> None:
    counter = _active.get()
    if counter is not None:
        counter[category] += amount


@contextlib.contextmanager
def counting(counter: OpCounter) -> Iterator[OpCounter]:
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)
