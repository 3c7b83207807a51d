"""Photon loss, partial distinguishability and dephasing on top of the lines kernel."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bits import photons_in
from .errors import DimensionMismatch, EtaOutOfRange, InvalidWeights, PatternMismatch, TooLarge, ValidationError
from .lines import MergeStats, fock_amplitude, make_line, merged_line
from .linalg import OccupationPattern, as_complex_matrix

DEFICIT_TOL = 1e-12
SECTOR_MAX_N = 20


# -- loss ----------------------------------------------------------------------


@dataclass(frozen=True)
class LossyMatrix:
    """``M x (M+1)`` matrix; the last column feeds the shared loss mode."""

    matrix: np.ndarray
    weights: np.ndarray

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def detected(self) -> np.ndarray:
        return self.matrix[:, :-1]

    @property
    def loss_column(self) -> np.ndarray:
        return self.matrix[:, -1]

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix, axis=1)

    def per_port_dilation(self) -> np.ndarray:
        """``M x 2M`` matrix giving every input port its own loss mode."""
        return np.hstack([self.detected, np.diag(self.loss_column)])


def extend_with_loss(u, weights) -> LossyMatrix:
    """Scale ``u`` entrywise by ``weights`` and append the loss column.

    The loss column entry of row ``i`` is ``sqrt(1 - sum_j |w_ij u_ij|^2)``,
    taken real and non-negative.
    """
    mat = as_complex_matrix(u)
    w = np.broadcast_to(np.asarray(weights, dtype=np.complex128), mat.shape)
    if np.any(np.abs(w) > 1 + DEFICIT_TOL):
        raise InvalidWeights("loss weights must satisfy |lambda| <= 1")
    scaled = w * mat
    deficit = 1.0 - np.sum(np.abs(scaled) ** 2, axis=1)
    if np.any(deficit < -DEFICIT_TOL):
        raise InvalidWeights(f"row deficits {deficit.min():.3e} < 0: weights amplify the matrix")
    # deficits within rounding of zero are exact zeros (no loss)
    loss = np.sqrt(np.where(deficit <= DEFICIT_TOL, 0.0, deficit))
    return LossyMatrix(np.hstack([scaled, loss[:, None]]), np.array(w))


def _check_lossy(lm: LossyMatrix, pattern: OccupationPattern, n_lost: int) -> None:
    pattern.check(lm.m, lm.m, lossless=False)
    if pattern.n_out + n_lost != pattern.n:
        raise PatternMismatch(f"{pattern.n_out} detected + {n_lost} lost != {pattern.n} photons")


def lossy_amplitude(lm: LossyMatrix, pattern: OccupationPattern, n_lost: int, stats: MergeStats | None = None) -> complex:
    """Amplitude of ``pattern`` with ``n_lost`` photons in the shared loss mode.

    The detected lines are folded first; each resulting component fixes the
    lost photons as its complement, so the loss line is only looked up.
    """
    _check_lossy(lm, pattern, n_lost)
    n = pattern.n
    if n == 0:
        return 1 + 0j
    acc = merged_line(lm.detected, pattern.input_ports, pattern.output_occupations, stats)
    loss = make_line(lm.matrix, pattern.input_ports, lm.m, n_lost)
    full = (1 << n) - 1
    total = 0j
    for mask, coeff in acc.components.items():
        total += coeff * loss.components[full ^ mask]
    occ = list(pattern.output_occupations) + [n_lost]
    num = math.prod(math.factorial(c) for c in occ)
    den = math.prod(math.factorial(c) for c in pattern.input_multiplicities())
    return total * math.sqrt(num / den)


def lossy_probability(lm: LossyMatrix, pattern: OccupationPattern, n_lost: int, stats: MergeStats | None = None) -> float:
    """Probability of ``pattern`` with ``n_lost`` photons undetected.

    Lost photons are traced out with one environment mode per input port
    (the loss column placed on the diagonal), so losses from different ports
    do not interfere. Components of the folded detected line are grouped by
    how many lost photons each port contributes.
    """
    _check_lossy(lm, pattern, n_lost)
    n = pattern.n
    if n == 0:
        return 1.0
    ports = pattern.input_ports
    acc = merged_line(lm.detected, ports, pattern.output_occupations, stats)
    loss = lm.loss_column.tolist()
    full = (1 << n) - 1
    groups: dict = {}
    for mask, coeff in acc.components.items():
        lost = photons_in(full ^ mask, n)
        z = coeff
        for k in lost:
            z *= loss[ports[k]]
        key = tuple(sorted(ports[k] for k in lost))
        groups[key] = groups.get(key, 0j) + z
    occ_fact = math.prod(math.factorial(c) for c in pattern.output_occupations)
    den = math.prod(math.factorial(c) for c in pattern.input_multiplicities())
    prob = 0.0
    for key, z in groups.items():
        env_fact = math.prod(math.factorial(key.count(p)) for p in set(key))
        prob += abs(z) ** 2 * occ_fact * env_fact / den
    return prob


def detected_patterns(m: int, n_out: int):
    """All occupation tuples over ``m`` modes with ``n_out`` photons."""
    for combo in itertools.combinations_with_replacement(range(m), n_out):
        occ = [0] * m
        for k in combo:
            occ[k] += 1
        yield tuple(occ)


def lossy_cost(n: int, n_lost: int) -> int:
    """n^2 * sum_{i=1}^{n - n_lost} C(n-1, i)."""
    if not 0 <= n_lost <= n:
        raise ValidationError(f"n_lost must lie in [0, {n}]")
    return n * n * sum(math.comb(n - 1, i) for i in range(1, n - n_lost + 1))


def loss_ratio_curve(n: int) -> list[tuple[float, float]]:
    """``(n_lost / n, c_L / c)`` for ``n_lost = 0..n``."""
    if n < 2:
        raise ValidationError("curve needs n >= 2")
    c = n * n * ((1 << (n - 1)) - 1)
    return [(k / n, lossy_cost(n, k) / c) for k in range(n + 1)]


# -- partial distinguishability ------------------------------------------------


def _check_eta(eta: Sequence[float], n: int) -> list[float]:
    eta = [float(e) for e in eta]
    if len(eta) != n:
        raise ValidationError(f"need {n} eta values, got {len(eta)}")
    if any(not 0.0 <= e <= 1.0 for e in eta):
        raise EtaOutOfRange(f"eta values must lie in [0, 1]: {eta}")
    return eta


def _gram_permanent(ports: Sequence[int], eta: Sequence[float]) -> float:
    """Squared norm of the two-species input state.

    Photons sharing a port overlap by ``sqrt(eta_k eta_l) + sqrt((1-eta_k)(1-eta_l))``;
    the norm is the permanent of that overlap matrix, taken block by block.
    """
    total = 1.0
    for p in set(ports):
        idx = [k for k, q in enumerate(ports) if q == p]
        if len(idx) == 1:
            continue
        g = [
            [math.sqrt(eta[a] * eta[b]) + math.sqrt((1 - eta[a]) * (1 - eta[b])) for b in idx]
            for a in idx
        ]
        total *= sum(math.prod(g[r][s] for r, s in enumerate(perm)) for perm in itertools.permutations(range(len(idx))))
    return total


def distinguishable_probability(u, pattern: OccupationPattern, eta: Sequence[float], stats: MergeStats | None = None) -> float:
    """Detection probability with partially distinguishable photons.

    Every photon is split between the reference internal state (amplitude
    sqrt(eta)) and one orthogonal state shared by all photons. Detectors do
    not see the internal state, so the probability sums over how the
    detected photons of each mode split between the two species. For a
    split, the lines of both species are folded separately and combined over
    all assignments of photons to the orthogonal sector.
    """
    mat = as_complex_matrix(u)
    pattern.check(mat.shape[0], mat.shape[1])
    n = pattern.n
    if n > SECTOR_MAX_N:
        raise TooLarge(f"sector sum limited to n <= {SECTOR_MAX_N}")
    eta = _check_eta(eta, n)
    if n == 0:
        return 1.0
    ports = pattern.input_ports
    full = (1 << n) - 1
    amp_par = [math.sqrt(e) for e in eta]
    amp_perp = [math.sqrt(1 - e) for e in eta]
    prob = 0.0
    for occ_perp in itertools.product(*(range(c + 1) for c in pattern.output_occupations)):
        occ_par = [c - p for c, p in zip(pattern.output_occupations, occ_perp)]
        perp = merged_line(mat, ports, occ_perp, stats)
        par = merged_line(mat, ports, occ_par, stats)
        z = 0j
        for mask, c_perp in perp.components.items():
            c_par = par.components.get(full ^ mask)
            if c_par is None:
                continue
            w = 1.0
            for k in range(n):
                w *= amp_perp[k] if mask >> (n - 1 - k) & 1 else amp_par[k]
            if w:
                z += w * c_perp * c_par
        norm = math.prod(math.factorial(c) for c in occ_perp) * math.prod(math.factorial(c) for c in occ_par)
        prob += abs(z) ** 2 * norm
    return prob / _gram_permanent(ports, eta)


# -- dephasing ------------------------------------------------------------------

CHUNK = 1024


@dataclass(frozen=True)
class DephasingResult:
    mean: float
    stderr: float
    samples: int


def _phase_layer(rng: np.random.Generator, m: int, sigma, uniform: bool) -> np.ndarray:
    if uniform:
        phi = rng.uniform(0.0, 2 * np.pi, m)
    else:
        phi = rng.normal(0.0, 1.0, m) * np.broadcast_to(np.asarray(sigma, dtype=float), (m,))
    return np.exp(1j * phi)


def dephased_matrix(u, phases: np.ndarray, placement: str = "after", v=None) -> np.ndarray:
    """Insert ``diag(phases)`` into the circuit.

    ``after`` multiplies each output column, ``before`` each input row and
    ``between`` sits between the channels ``u`` and ``v``.
    """
    mat = as_complex_matrix(u)
    if placement == "after":
        return mat * phases[None, :]
    if placement == "before":
        return phases[:, None] * mat
    if placement == "between":
        if v is None:
            raise ValidationError("'between' placement needs a second channel")
        second = as_complex_matrix(v)
        if second.shape != mat.shape:
            raise DimensionMismatch(f"cannot compose {mat.shape} with {second.shape}")
        return (mat * phases[None, :]) @ second
    raise ValidationError(f"unknown placement {placement!r}")


def _chunk_probs(u, pattern, sigma, uniform, placement, v, seed, index, count) -> np.ndarray:
    rng = np.random.default_rng([seed, index])
    m = as_complex_matrix(u).shape[1]
    out = np.empty(count)
    for s in range(count):
        phases = _phase_layer(rng, m, sigma, uniform)
        out[s] = abs(fock_amplitude(dephased_matrix(u, phases, placement, v), pattern)) ** 2
    return out


def dephase_probability(
    u,
    pattern: OccupationPattern,
    sigma=0.0,
    *,
    uniform: bool = False,
    samples: int = 1000,
    seed: int = 0,
    placement: str = "after",
    v=None,
    threads: int = 1,
) -> DephasingResult:
    """Monte Carlo average of the detection probability over random phase layers.

    Phases are Gaussian with per-mode standard deviation ``sigma`` or, with
    ``uniform``, uniform on [0, 2 pi). Samples are drawn in chunks of 1024,
    chunk ``k`` from the stream seeded by ``(seed, k)``, so results do not
    depend on ``threads``.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if not uniform and np.all(np.asarray(sigma) == 0):
        mat = dephased_matrix(u, np.ones(as_complex_matrix(u).shape[1], dtype=complex), placement, v)
        p = abs(fock_amplitude(mat, pattern)) ** 2
        return DephasingResult(p, 0.0, samples)
    chunks = [(k, min(CHUNK, samples - k * CHUNK)) for k in range((samples + CHUNK - 1) // CHUNK)]
    args = [(u, pattern, sigma, uniform, placement, v, seed, k, c) for k, c in chunks]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda a: _chunk_probs(*a), args))
    else:
        parts = [_chunk_probs(*a) for a in args]
    probs = np.concatenate(parts)
    stderr = float(probs.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return DephasingResult(float(probs.mean()), stderr, samples)
