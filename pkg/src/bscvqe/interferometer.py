"""Linear-optical mode transformations and many-body transition amplitudes.

A passive interferometer is described by a Hermitian generator; its mode
matrix is the matrix exponential exp(i*generator).  Many-photon transition
amplitudes are permanents (bosons) or determinants (fermions) of submatrices
built by repeating rows for output occupations and columns for input ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.linalg import expm

from .fock import BosonState, FockSector, build_sector
from .validation import check_hermitian, check_occupation

MAX_PERMANENT_SIZE = 20

__all__ = [
    "InterferometerSpec",
    "HermitianPacking",
    "permanent",
    "permanent_batch",
    "amplitude_boson",
    "amplitude_fermion",
    "evolve",
    "reference_amplitudes",
    "quadratic_form_from_reference",
]


def permanent(a: np.ndarray) -> complex:
    """Permanent by Ryser's formula with Gray-code subset updates."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > MAX_PERMANENT_SIZE:
        raise ValueError(f"matrix size {n} exceeds supported maximum {MAX_PERMANENT_SIZE}")
    row_sums = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    gray = 0
    sign = 1
    for k in range(1, 2**n):
        new_gray = k ^ (k >> 1)
        bit = new_gray ^ gray
        col = bit.bit_length() - 1
        if new_gray & bit:
            row_sums += a[:, col]
        else:
            row_sums -= a[:, col]
        gray = new_gray
        sign = -sign
        total += sign * np.prod(row_sums)
    return complex(total if n % 2 == 0 else -total)


def permanent_batch(mats: np.ndarray) -> np.ndarray:
    """Ryser's formula applied across a stack of equally sized matrices."""
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError(f"expected a (batch, n, n) stack, got shape {mats.shape}")
    b, n, _ = mats.shape
    if n == 0:
        return np.ones(b, dtype=complex)
    if n > MAX_PERMANENT_SIZE:
        raise ValueError(f"matrix size {n} exceeds supported maximum {MAX_PERMANENT_SIZE}")
    row_sums = np.zeros((b, n), dtype=complex)
    total = np.zeros(b, dtype=complex)
    gray = 0
    sign = 1
    for k in range(1, 2**n):
        new_gray = k ^ (k >> 1)
        bit = new_gray ^ gray
        col = bit.bit_length() - 1
        if new_gray & bit:
            row_sums += mats[:, :, col]
        else:
            row_sums -= mats[:, :, col]
        gray = new_gray
        sign = -sign
        total += sign * np.prod(row_sums, axis=1)
    return total if n % 2 == 0 else -total


def _occ_to_indices(occ: tuple[int, ...]) -> list[int]:
    out: list[int] = []
    for mode, n in enumerate(occ):
        out.extend([mode] * n)
    return out


def amplitude_boson(mode_matrix: np.ndarray, occ_in, occ_out) -> complex:
    """<out| U |in> for photons: permanent of the repeated-index submatrix."""
    u = np.asarray(mode_matrix, dtype=complex)
    occ_in = check_occupation(occ_in, u.shape[0], "occ_in")
    occ_out = check_occupation(occ_out, u.shape[0], "occ_out")
    if sum(occ_in) != sum(occ_out):
        return 0.0 + 0.0j
    rows = _occ_to_indices(occ_out)
    cols = _occ_to_indices(occ_in)
    sub = u[np.ix_(rows, cols)]
    norm = 1.0
    for n in occ_in:
        norm *= factorial(n)
    for n in occ_out:
        norm *= factorial(n)
    return permanent(sub) / np.sqrt(norm)


def amplitude_fermion(mode_matrix: np.ndarray, occ_in, occ_out) -> complex:
    """<out| U |in> for free fermions: determinant of the same submatrix."""
    u = np.asarray(mode_matrix, dtype=complex)
    occ_in = check_occupation(occ_in, u.shape[0], "occ_in")
    occ_out = check_occupation(occ_out, u.shape[0], "occ_out")
    if max(occ_in, default=0) > 1 or max(occ_out, default=0) > 1:
        raise ValueError("fermionic occupations must be 0 or 1")
    if sum(occ_in) != sum(occ_out):
        return 0.0 + 0.0j
    rows = _occ_to_indices(occ_out)
    cols = _occ_to_indices(occ_in)
    if not rows:
        return 1.0 + 0.0j
    return complex(np.linalg.det(u[np.ix_(rows, cols)]))


@dataclass
class InterferometerSpec:
    """Hermitian generator of a passive mode transformation."""

    generator: np.ndarray
    _unitary: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.generator = np.asarray(self.generator, dtype=complex)
        check_hermitian(self.generator, "generator", tol=1e-8)

    @property
    def num_modes(self) -> int:
        return self.generator.shape[0]

    @property
    def unitary(self) -> np.ndarray:
        """Mode matrix exp(i * generator), cached."""
        if self._unitary is None:
            self._unitary = expm(1j * self.generator)
        return self._unitary


class HermitianPacking:
    """Maps a real parameter vector onto a Hermitian matrix.

    Slots are the diagonal followed by (real, imaginary) parts of the
    unmasked strict upper triangle; masked entries stay zero.
    """

    def __init__(self, num_modes: int, mask_upper: np.ndarray | None = None,
                 include_diagonal: bool = True):
        self.num_modes = int(num_modes)
        if mask_upper is None:
            mask_upper = np.triu(np.ones((num_modes, num_modes), dtype=bool), k=1)
        mask_upper = np.asarray(mask_upper, dtype=bool)
        if mask_upper.shape != (num_modes, num_modes):
            raise ValueError("mask shape mismatch")
        if np.any(np.tril(mask_upper)):
            raise ValueError("mask must only flag the strict upper triangle")
        self.mask_upper = mask_upper
        self.include_diagonal = bool(include_diagonal)
        self.upper_rows, self.upper_cols = np.nonzero(mask_upper)
        self.size = (num_modes if include_diagonal else 0) + 2 * len(self.upper_rows)

    def unpack(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.size,):
            raise ValueError(f"expected {self.size} parameters, got {vec.shape}")
        m = self.num_modes
        out = np.zeros((m, m), dtype=complex)
        k = 0
        if self.include_diagonal:
            out[np.arange(m), np.arange(m)] = vec[:m]
            k = m
        n_up = len(self.upper_rows)
        re = vec[k : k + n_up]
        im = vec[k + n_up : k + 2 * n_up]
        out[self.upper_rows, self.upper_cols] = re + 1j * im
        out[self.upper_cols, self.upper_rows] = re - 1j * im
        return out

    def pack(self, mat: np.ndarray) -> np.ndarray:
        mat = check_hermitian(np.asarray(mat, dtype=complex), "matrix")
        parts = []
        if self.include_diagonal:
            parts.append(mat.diagonal().real)
        upper = mat[self.upper_rows, self.upper_cols]
        parts.extend([upper.real, upper.imag])
        return np.concatenate(parts) if parts else np.zeros(0)

    def describe(self) -> list[str]:
        """Human-readable slot labels in packing order."""
        labels = []
        if self.include_diagonal:
            labels.extend(f"diag[{i}]" for i in range(self.num_modes))
        labels.extend(f"re[{r},{c}]" for r, c in zip(self.upper_rows, self.upper_cols))
        labels.extend(f"im[{r},{c}]" for r, c in zip(self.upper_rows, self.upper_cols))
        return labels


def reference_amplitudes(
    mode_matrix: np.ndarray, reference_occ: tuple[int, ...], targets: list[tuple[int, ...]]
) -> np.ndarray:
    """Transition amplitudes from one <=1-occupation input to many outputs.

    Batched over targets, which may hold multiple photons per mode; the
    input must not (its factorial normalization is then trivial).
    """
    if max(reference_occ, default=0) > 1:
        raise ValueError("input occupations must be 0 or 1 for the batched path")
    u = np.asarray(mode_matrix, dtype=complex)
    cols = _occ_to_indices(reference_occ)
    n = len(cols)
    if not targets:
        return np.zeros(0, dtype=complex)
    rows = np.array([_occ_to_indices(t) for t in targets], dtype=int)
    if rows.shape[1] != n:
        raise ValueError("photon number mismatch between reference and targets")
    stack = u[rows][:, :, cols]
    norms = np.array(
        [np.prod([factorial(k) for k in t]) for t in targets], dtype=float
    )
    return permanent_batch(stack) / np.sqrt(norms)


def evolve(spec: InterferometerSpec, state: BosonState) -> BosonState:
    """Propagate a sector state through the interferometer."""
    sector = state.sector
    if sector.num_modes != spec.num_modes:
        raise ValueError("mode count mismatch between state and interferometer")
    u = spec.unitary
    out = np.zeros(len(sector), dtype=complex)
    support = np.nonzero(np.abs(state.amplitudes) > 0.0)[0]
    targets = list(sector.states)
    for s_pos in support:
        occ_in = sector.states[s_pos]
        amp_in = state.amplitudes[s_pos]
        if max(occ_in) <= 1:
            out += amp_in * reference_amplitudes(u, occ_in, targets)
        else:
            for t_pos, occ_out in enumerate(targets):
                out[t_pos] += amp_in * amplitude_boson(u, occ_in, occ_out)
    return BosonState(sector, out)


def quadratic_form_from_reference(
    mode_matrix: np.ndarray,
    reference_occ: tuple[int, ...],
    basis: list[tuple[int, ...]],
    matrix: np.ndarray,
) -> complex:
    """<ref| U^+ A U |ref> expanded over permanent amplitudes onto `basis`.

    The bra side enters conjugated: sum_ij conj(Per_i) A_ij Per_j where Per_k
    is the reference-to-basis-state transition permanent.
    """
    amps = reference_amplitudes(mode_matrix, reference_occ, basis)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (len(basis), len(basis)):
        raise ValueError("matrix dimension must match basis length")
    return complex(np.conj(amps) @ matrix @ amps)
