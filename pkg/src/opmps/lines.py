"""Amplitude kernel built on lines of bitmask components.

A line describes one output mode: for every way of choosing ``w`` of the
``n`` input photons to leave through that mode it stores the product of the
corresponding matrix entries, keyed by the bitmask of chosen photons.
Merging two lines multiplies coefficients of disjoint masks and accumulates
them at the union; overlapping masks vanish because a single photon cannot
leave through two modes. Folding the lines of every occupied output mode
leaves a single full-mask component whose coefficient is the permanent
(up to Fock normalisation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bits import photon_bit, submasks_of_weight
from .errors import DimensionMismatch, IndexOutOfRange, NonSquare, WeightOverflow
from .linalg import OccupationPattern, as_complex_matrix


@dataclass
class MergeStats:
    pair_combinations: int = 0
    scalar_multiplications: int = 0

    def add(self, other: "MergeStats") -> None:
        self.pair_combinations += other.pair_combinations
        self.scalar_multiplications += other.scalar_multiplications


@dataclass
class Line:
    n: int
    weight: int
    components: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.components)

    @classmethod
    def unit(cls, n: int) -> "Line":
        return cls(n, 0, {0: 1})

    def check(self) -> None:
        for mask in self.components:
            if mask.bit_count() != self.weight or mask >> self.n:
                raise WeightOverflow(f"mask {mask:b} does not belong to a weight-{self.weight} line")


def _entries(u):
    """Matrix entries as nested Python lists (symbolic object arrays pass through)."""
    if isinstance(u, np.ndarray) and u.dtype == object:
        return u.tolist()
    return as_complex_matrix(u).tolist()


def make_line(u, ports: Sequence[int], mode: int, weight: int) -> Line:
    """Line of output ``mode`` with ``weight`` green squares.

    Coefficient of mask ``s`` is ``prod(u[ports[k], mode] for k in s)``; no
    factorial is folded in.
    """
    rows = _entries(u)
    n = len(ports)
    if not 0 <= weight <= n:
        raise WeightOverflow(f"weight {weight} outside [0, {n}]")
    if rows and not 0 <= mode < len(rows[0]):
        raise IndexOutOfRange(f"output mode {mode} outside [0, {len(rows[0])})")
    if any(not 0 <= p < len(rows) for p in ports):
        raise IndexOutOfRange(f"input ports {list(ports)} outside [0, {len(rows)})")
    col = [rows[p][mode] for p in ports]
    comps: dict = {}
    # build weight-w components from weight-(w-1) ones, adding only higher-order photons
    frontier = {0: (1, n)}  # mask -> (coeff, lowest photon index already used)
    for _ in range(weight):
        nxt = {}
        for mask, (coeff, lowest) in frontier.items():
            for k in range(lowest):
                nxt[mask | photon_bit(k, n)] = (coeff * col[k], k)
        frontier = nxt
    for mask, (coeff, _) in frontier.items():
        comps[mask] = coeff
    return Line(n, weight, comps)


def merge(a: Line, b: Line, stats: MergeStats | None = None) -> Line:
    """Contract two lines. Overlapping masks are skipped, never multiplied."""
    if a.n != b.n:
        raise DimensionMismatch(f"lines over {a.n} and {b.n} photons")
    n = a.n
    w = a.weight + b.weight
    if w > n:
        raise WeightOverflow(f"merged weight {w} exceeds {n} photons")
    full = (1 << n) - 1
    out: dict = {}
    pairs = 0
    bc = b.components
    # enumerate disjoint partners directly when that is cheaper than scanning b
    if math.comb(n - a.weight, b.weight) <= len(bc):
        if b.weight == 1:
            for ma, ca in a.components.items():
                free = full & ~ma
                while free:
                    low = free & -free
                    free ^= low
                    cb = bc.get(low)
                    if cb is None:
                        continue
                    key = ma | low
                    prod = ca * cb
                    if key in out:
                        out[key] += prod
                    else:
                        out[key] = prod
                    pairs += 1
        else:
            for ma, ca in a.components.items():
                for mb in submasks_of_weight(full & ~ma, b.weight):
                    cb = bc.get(mb)
                    if cb is None:
                        continue
                    key = ma | mb
                    prod = ca * cb
                    if key in out:
                        out[key] += prod
                    else:
                        out[key] = prod
                    pairs += 1
    else:
        for ma, ca in a.components.items():
            for mb, cb in bc.items():
                if ma & mb:
                    continue
                key = ma | mb
                prod = ca * cb
                if key in out:
                    out[key] += prod
                else:
                    out[key] = prod
                pairs += 1
    if stats is not None:
        stats.pair_combinations += pairs
        stats.scalar_multiplications += pairs
    return Line(n, w, out)


def fold(lines: Iterable[Line], n: int, stats: MergeStats | None = None, strategy: str = "sequential") -> Line:
    """Merge a sequence of lines into one.

    ``sequential`` left-folds in the given order; ``tree`` merges neighbours
    pairwise. Both give the same coefficients up to rounding.
    """
    lines = list(lines)
    if not lines:
        return Line.unit(n)
    if strategy == "sequential":
        acc = lines[0]
        for line in lines[1:]:
            acc = merge(acc, line, stats)
        return acc
    if strategy == "tree":
        while len(lines) > 1:
            nxt = [merge(lines[i], lines[i + 1], stats) for i in range(0, len(lines) - 1, 2)]
            if len(lines) % 2:
                nxt.append(lines[-1])
            lines = nxt
        return lines[0]
    raise ValueError(f"unknown contraction strategy {strategy!r}")


def merged_line(
    u, ports: Sequence[int], occupations: Sequence[int], stats: MergeStats | None = None, strategy: str = "sequential"
) -> Line:
    """Fold the lines of all occupied modes (ascending mode order)."""
    lines = [make_line(u, ports, j, c) for j, c in enumerate(occupations) if c > 0]
    return fold(lines, len(ports), stats, strategy)


def fock_normalization(input_ports: Sequence[int], occupations: Sequence[int]) -> float:
    """Factor turning the full-mask line coefficient into a normalised Fock amplitude.

    The folded line counts each assignment of photons to modes once, i.e. it
    equals ``per / prod(n_k!)``; the normalised amplitude is
    ``per / sqrt(prod(n_k!) prod(m_i!))``.
    """
    num = math.prod(math.factorial(c) for c in occupations)
    den = math.prod(math.factorial(c) for c in _multiplicities(input_ports))
    return math.sqrt(num / den)


def _multiplicities(ports: Sequence[int]) -> list[int]:
    counts: dict[int, int] = {}
    for p in ports:
        counts[p] = counts.get(p, 0) + 1
    return list(counts.values())


def permanent_via_lines(a, stats: MergeStats | None = None) -> complex:
    """Permanent by folding the rows of ``a`` as weight-1 lines."""
    mat = as_complex_matrix(a)
    if mat.shape[0] != mat.shape[1]:
        raise NonSquare(f"matrix is {mat.shape[0]}x{mat.shape[1]}")
    n = mat.shape[0]
    if n == 0:
        return 1 + 0j
    lines = [Line(n, 1, {photon_bit(c, n): z for c, z in enumerate(row)}) for row in mat.tolist()]
    acc = fold(lines, n, stats)
    return complex(acc.components.get((1 << n) - 1, 0))


def fock_amplitude(u, pattern: OccupationPattern, stats: MergeStats | None = None, strategy: str = "sequential") -> complex:
    """Normalised amplitude <n_out| U |n_in> from the lines fold.

    ``u`` may be rectangular (more output modes than inputs).
    """
    mat = as_complex_matrix(u)
    pattern.check(mat.shape[0], mat.shape[1])
    n = pattern.n
    if n == 0:
        return 1 + 0j
    acc = merged_line(mat, pattern.input_ports, pattern.output_occupations, stats, strategy)
    coeff = acc.components.get((1 << n) - 1, 0)
    return complex(coeff) * fock_normalization(pattern.input_ports, pattern.output_occupations)


def pair_count(n: int) -> int:
    """Merge pairs of the sequential permanent fold: n (2^(n-1) - 1)."""
    return n * ((1 << (n - 1)) - 1) if n >= 1 else 0


def predicted_cost(n: int) -> int:
    """Operation count n^2 (2^(n-1) - 1), i.e. ``n * pair_count(n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * n * ((1 << (n - 1)) - 1)
