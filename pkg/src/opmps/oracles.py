"""Independent reference calculations used to check the lines engine.

None of these share code with the lines kernel: the permutation sum and
Ryser's formula act on the matrix directly, and the Fock-space evolution
applies creation operators to a dense truncated state vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CutoffTooSmall, NonSquare, TooLarge, ValidationError
from .linalg import as_complex_matrix

NAIVE_MAX_N = 10
RYSER_MAX_N = 30
DENSE_MAX_N = 4
DENSE_MAX_DIM = 1 << 20


def _square(a) -> np.ndarray:
    mat = as_complex_matrix(a)
    if mat.shape[0] != mat.shape[1]:
        raise NonSquare(f"matrix is {mat.shape[0]}x{mat.shape[1]}")
    return mat


def naive_permanent(a) -> complex:
    """Sum over all n! permutations."""
    mat = _square(a)
    n = mat.shape[0]
    if n > NAIVE_MAX_N:
        raise TooLarge(f"naive permanent limited to n <= {NAIVE_MAX_N}, got {n}")
    rows = mat.tolist()
    total = 0j
    for perm in itertools.permutations(range(n)):
        prod = 1 + 0j
        for i, j in enumerate(perm):
            prod *= rows[i][j]
        total += prod
    return total


def ryser_permanent(a) -> complex:
    """Ryser's inclusion-exclusion formula with Gray-code column updates.

    per(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij
    """
    mat = _square(a)
    n = mat.shape[0]
    if n > RYSER_MAX_N:
        raise TooLarge(f"Ryser permanent limited to n <= {RYSER_MAX_N}, got {n}")
    if n == 0:
        return 1 + 0j
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0j
    gray = 0
    for step in range(1, 1 << n):
        # the column flipped between consecutive Gray codes is the lowest set bit of step
        j = (step & -step).bit_length() - 1
        gray ^= 1 << j
        if gray >> j & 1:
            row_sums += mat[:, j]
        else:
            row_sums -= mat[:, j]
        term = np.prod(row_sums)
        total += -term if gray.bit_count() & 1 else term
    return complex((-1) ** n * total)


@dataclass(frozen=True)
class FockStateVector:
    """Dense truncated Fock state; ``amplitudes[n_1, ..., n_M]``."""

    modes: int
    cutoff: int
    amplitudes: np.ndarray
    photons: int

    def amplitude(self, occupations: Sequence[int]) -> complex:
        if any(c >= self.cutoff for c in occupations):
            return 0j
        return complex(self.amplitudes[tuple(occupations)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def nonzero(self, atol: float = 1e-14):
        for idx in zip(*np.nonzero(np.abs(self.amplitudes) > atol)):
            yield tuple(int(i) for i in idx), complex(self.amplitudes[idx])


def _creation_matrix(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), k=-1)


def dense_fock_evolution(u, ports: Sequence[int], cutoff: int) -> FockStateVector:
    """Evolve ``prod_k a_{ports[k]}^dag |0>`` (normalised) through ``u``.

    Each input creation operator is replaced by ``sum_k u[i, k] a_k^dag`` and
    applied to a dense state over the output modes. ``u`` may be rectangular.
    """
    mat = as_complex_matrix(u)
    n = len(ports)
    modes = mat.shape[1]
    if n > DENSE_MAX_N:
        raise TooLarge(f"dense evolution limited to n <= {DENSE_MAX_N}, got {n}")
    if cutoff < n + 1:
        raise CutoffTooSmall(f"cutoff {cutoff} cannot hold {n} photons in one mode")
    if cutoff**modes > DENSE_MAX_DIM:
        raise TooLarge(f"state space {cutoff}^{modes} too large")
    if any(not 0 <= p < mat.shape[0] for p in ports):
        raise ValidationError(f"input ports {list(ports)} out of range")
    adag = _creation_matrix(cutoff)
    state = np.zeros((cutoff,) * modes, dtype=np.complex128)
    state[(0,) * modes] = 1.0
    for p in ports:
        new = np.zeros_like(state)
        for k in range(modes):
            if mat[p, k] != 0:
                new += mat[p, k] * np.moveaxis(np.tensordot(adag, state, axes=([1], [k])), 0, k)
        state = new
    norm = math.prod(math.factorial(c) for c in _counts(ports))
    state /= math.sqrt(norm)
    return FockStateVector(modes, cutoff, state, n)


def _counts(ports: Sequence[int]) -> list[int]:
    return [list(ports).count(p) for p in set(ports)]


def two_species_fock_evolution(u, ports: Sequence[int], eta: Sequence[float], cutoff: int | None = None) -> dict:
    """Detection distribution for partially distinguishable photons.

    Photon ``k`` is created as ``sqrt(eta_k) a^dag + sqrt(1 - eta_k) a_perp^dag``
    where all photons share the same orthogonal internal state. Both species
    see the same interferometer; detectors count photons irrespective of the
    species. Returns ``{occupations: probability}``.
    """
    mat = as_complex_matrix(u)
    n = len(ports)
    m_in, m_out = mat.shape
    if n > 3 or m_out > 4:
        raise TooLarge("two-species oracle limited to n <= 3, M <= 4")
    if len(eta) != n:
        raise ValidationError(f"need {n} eta values, got {len(eta)}")
    cutoff = n + 1 if cutoff is None else cutoff
    doubled = np.zeros((2 * m_in, 2 * m_out), dtype=np.complex128)
    doubled[:m_in, :m_out] = mat
    doubled[m_in:, m_out:] = mat
    adag = _creation_matrix(cutoff)
    modes = 2 * m_out
    state = np.zeros((cutoff,) * modes, dtype=np.complex128)
    state[(0,) * modes] = 1.0
    for p, e in zip(ports, eta):
        row = math.sqrt(e) * doubled[p] + math.sqrt(1 - e) * doubled[m_in + p]
        new = np.zeros_like(state)
        for k in range(modes):
            if row[k] != 0:
                new += row[k] * np.moveaxis(np.tensordot(adag, state, axes=([1], [k])), 0, k)
        state = new
    # photons sharing a port need not share an internal state, so normalise numerically
    state /= np.linalg.norm(state)
    probs = np.abs(state) ** 2
    dist: dict = {}
    for idx in itertools.product(range(cutoff), repeat=modes):
        p = probs[idx]
        if p == 0:
            continue
        key = tuple(idx[k] + idx[m_out + k] for k in range(m_out))
        dist[key] = dist.get(key, 0.0) + float(p)
    return dist
