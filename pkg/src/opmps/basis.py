"""Operator-basis tensors and their conversion to Fock-basis MPO blocks.

A single photon entering port ``i`` is written as a product over output modes
of 2x2 operator-valued matrices ``A0 + A1 a_m^dag``. For ``n`` photons the
per-mode tensor is the Kronecker product of the single-photon ones, a
``2^n x 2^n`` block matrix whose entry ``(row, col)`` is non-zero exactly
when ``col`` is a submask of ``row``; the entry is then the product of the
coefficients of the photons in ``row & ~col`` times that power of
``a_m^dag``. The non-zero pattern is a Sierpinski triangle with ``3^n``
entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .bits import photon_bit, submasks
from .errors import CutoffTooSmall, EtaOutOfRange, IndexOutOfRange, SizeLimit, ValidationError
from .linalg import as_complex_matrix

STRUCTURE_MAX_N = 20


def a_matrix(m: int, big_m: int, i: int, sigma: int, u) -> np.ndarray:
    """Local matrix of a single photon from port ``i`` at output mode ``m``.

    ``sigma`` selects the coefficient of ``(a_m^dag)^sigma``. The first mode
    gives a 1x2 row, the last a 2x1 column, interior modes 2x2 matrices.
    """
    mat = as_complex_matrix(u)
    if not 0 <= m < big_m or mat.shape[1] != big_m:
        raise IndexOutOfRange(f"mode {m} outside [0, {big_m})")
    if not 0 <= i < mat.shape[0]:
        raise IndexOutOfRange(f"input port {i} outside [0, {mat.shape[0]})")
    if sigma not in (0, 1):
        raise ValidationError(f"sigma must be 0 or 1, got {sigma}")
    c = mat[i, m]
    if big_m == 1:
        return np.array([[c if sigma else 0]], dtype=np.complex128)
    if m == 0:
        return np.array([[0, 1]] if sigma == 0 else [[c, 0]], dtype=np.complex128)
    if m == big_m - 1:
        return np.array([[1], [0]] if sigma == 0 else [[0], [c]], dtype=np.complex128)
    if sigma == 0:
        return np.eye(2, dtype=np.complex128)
    return np.array([[0, 0], [c, 0]], dtype=np.complex128)


def b_matrix(m: int, big_m: int, i: int, sigma: int, u, eta: float) -> np.ndarray:
    """Two-species version of :func:`a_matrix`: a direct sum of two A blocks.

    The first block carries the reference internal state (weight sqrt(eta)),
    the second the orthogonal one (weight sqrt(1 - eta)).
    """
    if not 0.0 <= eta <= 1.0:
        raise EtaOutOfRange(f"eta must lie in [0, 1], got {eta}")
    a = a_matrix(m, big_m, i, sigma, u)
    if sigma == 0:
        return block_diag(a, a)
    return block_diag(math.sqrt(eta) * a, math.sqrt(1.0 - eta) * a)


def single_photon_row(u, i: int) -> np.ndarray:
    """Coefficients of ``a_k^dag`` obtained by multiplying out the A matrices.

    Each operator-valued matrix entry is stored as a linear form over
    ``(1, a_1^dag, ..., a_M^dag)``; the product must stay linear.
    """
    mat = as_complex_matrix(u)
    big_m = mat.shape[1]
    acc = None
    for m in range(big_m):
        a0 = a_matrix(m, big_m, i, 0, mat)
        a1 = a_matrix(m, big_m, i, 1, mat)
        local = np.zeros(a0.shape + (big_m + 1,), dtype=np.complex128)
        local[..., 0] = a0
        local[..., m + 1] = a1
        if acc is None:
            acc = local
            continue
        # (c0 + c.x)(d0 + d.x): keep constant and linear parts, check the quadratic one vanishes
        quad = np.einsum("abk,bcl->acl", acc[..., 1:], local[..., 1:])
        if np.any(quad != 0):
            raise ValidationError("augmented-vector product produced a quadratic term")
        new = np.einsum("abk,bc->ack", acc, local[..., 0])
        new[..., 1:] += np.einsum("ab,bck->ack", acc[..., 0], local[..., 1:])
        acc = new
    assert acc.shape[:2] == (1, 1)
    if np.any(acc[0, 0, 0] != 0):
        raise ValidationError("augmented-vector product left a constant term")
    return acc[0, 0, 1:].copy()


def sierpinski_structure(n: int) -> list[tuple[int, int]]:
    """All ``(row, col)`` with ``col`` a submask of ``row``, row-major."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n > STRUCTURE_MAX_N:
        raise SizeLimit(f"structure enumeration limited to n <= {STRUCTURE_MAX_N}")
    return [(row, col) for row in range(1 << n) for col in submasks(row)]


def structure_count(n: int) -> int:
    """Number of non-zero blocks, counted per row as 2^popcount(row)."""
    if n > STRUCTURE_MAX_N:
        raise SizeLimit(f"structure enumeration limited to n <= {STRUCTURE_MAX_N}")
    return sum(1 << row.bit_count() for row in range(1 << n))


@dataclass(frozen=True)
class OperatorTensor:
    """Sparse ``2^n x 2^n`` tensor of one output mode.

    ``entries[(row, col)] = (coefficient, power of a^dag)``.
    """

    mode: int
    n: int
    entries: dict

    def dense_symbolic(self):
        """Coefficient and power arrays (zeros where no entry)."""
        size = 1 << self.n
        coeff = np.zeros((size, size), dtype=np.complex128)
        power = np.full((size, size), -1, dtype=int)
        for (r, c), (z, p) in self.entries.items():
            coeff[r, c] = z
            power[r, c] = p
        return coeff, power


def assemble_operator_tensor(u, ports: Sequence[int], m: int, n_filter: int | None = None) -> OperatorTensor:
    """Per-mode tensor for photons entering ``ports``.

    With ``n_filter`` only the blocks carrying ``(a^dag)^n_filter`` are
    generated: for each row the removed photon set is chosen directly among
    its bits, so the other blocks are never visited.
    """
    mat = as_complex_matrix(u)
    n = len(ports)
    if not 0 <= m < mat.shape[1]:
        raise IndexOutOfRange(f"mode {m} outside [0, {mat.shape[1]})")
    if any(not 0 <= p < mat.shape[0] for p in ports):
        raise IndexOutOfRange(f"input ports {list(ports)} out of range")
    if n_filter is not None and not 0 <= n_filter <= n:
        raise ValidationError(f"filter {n_filter} outside [0, {n}]")
    if n > STRUCTURE_MAX_N:
        raise SizeLimit(f"tensor assembly limited to n <= {STRUCTURE_MAX_N}")
    coeff_of_bit = {photon_bit(k, n): complex(mat[p, m]) for k, p in enumerate(ports)}
    entries = {}
    for row in range(1 << n):
        bits = [b for b in coeff_of_bit if row & b]
        if n_filter is None:
            choices = (sub for w in range(len(bits) + 1) for sub in combinations(bits, w))
        else:
            choices = combinations(bits, n_filter)
        for removed in choices:
            z = 1 + 0j
            col = row
            for b in removed:
                z *= coeff_of_bit[b]
                col ^= b
            entries[(row, col)] = (z, len(removed))
    return OperatorTensor(m, n, entries)


def ladder_power_matrix(p: int, d: int) -> np.ndarray:
    """Truncated ``(a^dag)^p``: <k+p| (a^dag)^p |k> = sqrt((k+p)!/k!)."""
    out = np.zeros((d, d))
    for k in range(d - p):
        out[k + p, k] = math.sqrt(math.factorial(k + p) / math.factorial(k))
    return out


@dataclass(frozen=True)
class FockTensor:
    """Dense block matrix; block ``(r, c)`` occupies rows ``r*d:(r+1)*d``."""

    mode: int
    n: int
    cutoff: int
    matrix: np.ndarray

    def block(self, r: int, c: int) -> np.ndarray:
        d = self.cutoff
        return self.matrix[r * d : (r + 1) * d, c * d : (c + 1) * d]

    def as_blocks(self) -> np.ndarray:
        """View as ``[row, col, out, in]``."""
        size, d = 1 << self.n, self.cutoff
        return self.matrix.reshape(size, d, size, d).transpose(0, 2, 1, 3)


def to_fock_tensor(t: OperatorTensor, d: int) -> FockTensor:
    if d < 1:
        raise ValidationError("cutoff must be >= 1")
    top = max((p for _, p in t.entries.values()), default=0)
    if top >= d:
        raise CutoffTooSmall(f"power {top} of a^dag does not fit cutoff {d}")
    size = 1 << t.n
    out = np.zeros((size * d, size * d), dtype=np.complex128)
    ladders = {}
    for (r, c), (z, p) in t.entries.items():
        if p not in ladders:
            ladders[p] = ladder_power_matrix(p, d)
        out[r * d : (r + 1) * d, c * d : (c + 1) * d] = z * ladders[p]
    return FockTensor(t.mode, t.n, d, out)


def fock_tensors(u, ports: Sequence[int], d: int) -> list[FockTensor]:
    mat = as_complex_matrix(u)
    return [to_fock_tensor(assemble_operator_tensor(mat, ports, m), d) for m in range(mat.shape[1])]


def contract_vacuum(tensors: Sequence[FockTensor], occupations: Sequence[int], ports: Sequence[int]) -> complex:
    """Amplitude <occupations| MPO |vacuum> for the exported tensors.

    The chain is closed with the all-ones row on the left and the empty
    column on the right, which picks out the product of the single-photon
    boundary vectors.
    """
    if len(tensors) != len(occupations):
        raise ValidationError("need one tensor per mode")
    n = tensors[0].n if tensors else len(ports)
    vec = np.zeros(1 << n, dtype=np.complex128)
    vec[(1 << n) - 1] = 1.0
    for t, occ in zip(tensors, occupations):
        if occ >= t.cutoff:
            return 0j
        local = t.as_blocks()[:, :, occ, 0]
        vec = vec @ local
    counts = [list(ports).count(p) for p in set(ports)]
    return complex(vec[0]) / math.sqrt(math.prod(math.factorial(c) for c in counts))


def mpo_json(t: OperatorTensor, d: int) -> dict:
    """Serialisable block list for the ``export-mpo`` command (1-based mode)."""
    to_fock_tensor(t, d)  # raises when the cutoff is too small
    blocks = [
        {"row": r, "col": c, "power": p, "coeff": [z.real, z.imag]}
        for (r, c), (z, p) in sorted(t.entries.items())
    ]
    return {"mode": t.mode + 1, "cutoff": d, "blocks": blocks}
