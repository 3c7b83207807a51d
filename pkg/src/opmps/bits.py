"""Bitmask helpers shared by the operator basis and the lines engine.

Photon ``k`` (0-based position in the input list) owns bit ``n - 1 - k``, so
the first photon is the most significant bit. Counting masks upward then
walks the subsets in the order (), (k), (j), (j k), (i), ... used by the
block layout of the multi-photon operator tensors.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterator


def photon_bit(k: int, n: int) -> int:
    return 1 << (n - 1 - k)


def photons_in(mask: int, n: int) -> list[int]:
    """Photon indices whose bit is set, ascending."""
    return [k for k in range(n) if mask >> (n - 1 - k) & 1]


def popcount(mask: int) -> int:
    return mask.bit_count()


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` in increasing numeric order."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


def masks_of_weight(n: int, w: int) -> Iterator[int]:
    """All n-bit masks with exactly ``w`` bits set."""
    for bits in combinations(range(n), w):
        mask = 0
        for b in bits:
            mask |= 1 << b
        yield mask


def submasks_of_weight(mask: int, w: int) -> Iterator[int]:
    bits = [b for b in range(mask.bit_length()) if mask >> b & 1]
    for chosen in combinations(bits, w):
        sub = 0
        for b in chosen:
            sub |= 1 << b
        yield sub
