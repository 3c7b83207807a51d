"""Matrix plumbing: unitaries, channel composition, amplitude submatrices.

Index convention used throughout the package: ``U[i, k]`` is the amplitude
for a photon entering input port ``i`` to leave through output port ``k``
(row = input, column = output). Ports are 0-based in code.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonSquare, NotUnitary, ParseError, PatternMismatch, ValidationError

DEFAULT_TOL = 1e-10


def as_complex_matrix(mat) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    if isinstance(mat, UnitaryMatrix):
        return mat.mat
    arr = np.asarray(mat, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix has non-finite entries")
    return arr


@dataclass(frozen=True)
class UnitaryMatrix:
    mat: np.ndarray
    unitarity_residual: float

    @property
    def m(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


@dataclass(frozen=True)
class OccupationPattern:
    """Input ports (repeats allowed) and per-mode output occupations."""

    input_ports: tuple[int, ...]
    output_occupations: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_ports", tuple(int(p) for p in self.input_ports))
        object.__setattr__(self, "output_occupations", tuple(int(c) for c in self.output_occupations))
        if any(c < 0 for c in self.output_occupations):
            raise PatternMismatch("output occupations must be non-negative")

    @property
    def n(self) -> int:
        return len(self.input_ports)

    @property
    def n_out(self) -> int:
        return sum(self.output_occupations)

    def output_ports(self) -> list[int]:
        """Output modes listed with repetition, ascending."""
        return [k for k, c in enumerate(self.output_occupations) for _ in range(c)]

    def input_multiplicities(self) -> list[int]:
        return list(Counter(self.input_ports).values())

    def check(self, n_in_modes: int, n_out_modes: int | None = None, lossless: bool = True) -> None:
        n_out_modes = n_in_modes if n_out_modes is None else n_out_modes
        bad = [p for p in self.input_ports if not 0 <= p < n_in_modes]
        if bad:
            raise PatternMismatch(f"input ports {bad} outside [0, {n_in_modes})")
        if len(self.output_occupations) != n_out_modes:
            raise PatternMismatch(
                f"expected {n_out_modes} output occupations, got {len(self.output_occupations)}"
            )
        if lossless and self.n_out != self.n:
            raise PatternMismatch(f"{self.n} photons in but {self.n_out} out")
        if self.n_out > self.n:
            raise PatternMismatch(f"{self.n_out} photons detected from {self.n} inputs")


def unitarity_residual(mat) -> float:
    a = as_complex_matrix(mat)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[1])))) if a.size else 0.0


def validate_unitary(mat, tol: float = DEFAULT_TOL) -> UnitaryMatrix:
    a = as_complex_matrix(mat)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"matrix is {a.shape[0]}x{a.shape[1]}")
    res = unitarity_residual(a)
    if res > tol:
        raise NotUnitary(res, tol)
    a = a.copy()
    a.setflags(write=False)
    return UnitaryMatrix(a, res)


def haar_random_unitary(m: int, seed: int) -> UnitaryMatrix:
    """Haar-distributed ``m x m`` unitary, deterministic in ``seed``."""
    if m < 1:
        raise ValidationError("matrix size must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return validate_unitary(q)


def compose_channels(u, v, tol: float = DEFAULT_TOL) -> UnitaryMatrix:
    """Input-output matrix of ``v`` applied after ``u``.

    With row = input, the combined entry is ``sum_j u[i, j] v[j, k]``, which
    is the ordinary product ``u @ v``.
    """
    a, b = as_complex_matrix(u), as_complex_matrix(v)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compose {a.shape} with {b.shape}")
    return validate_unitary(a @ b, tol=tol)


def submatrix(u, pattern: OccupationPattern) -> np.ndarray:
    """The ``n x n`` matrix whose permanent gives the detection amplitude.

    Row ``r`` belongs to the r-th detected photon's output port (ports with
    occupation ``c`` appear ``c`` times), column ``c`` to input photon ``c``.
    """
    a = as_complex_matrix(u)
    pattern.check(a.shape[0], a.shape[1])
    return a[np.ix_(list(pattern.input_ports), pattern.output_ports())].T.copy()


# -- file formats ------------------------------------------------------------


def matrix_to_json(mat) -> str:
    a = as_complex_matrix(mat)
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in a]
    return json.dumps({"m": a.shape[0], "rows": rows})


def parse_matrix(text: str) -> np.ndarray:
    """Parse the JSON or whitespace text matrix format."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
            rows = doc["rows"]
            mat = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad matrix JSON: {exc}") from exc
        if mat.ndim != 2 or ("m" in doc and mat.shape[0] != doc["m"]):
            raise ParseError("matrix JSON rows disagree with 'm'")
        return mat
    try:
        tokens = stripped.split()
        m = int(tokens[0])
        vals = [float(t) for t in tokens[1:]]
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad matrix text: {exc}") from exc
    if m < 1 or len(vals) != 2 * m * m:
        raise ParseError(f"expected {m * m} 're im' pairs, got {len(vals) / 2:g}")
    arr = np.array(vals).reshape(m, m, 2)
    return arr[..., 0] + 1j * arr[..., 1]


def load_matrix(path: str | Path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def ports_from_one_based(ports: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(p) - 1 for p in ports)
