"""Fixed-photon-number Fock sectors over optical modes.

One optical mode carries one spin orbital; basis states are photon occupation
vectors with a fixed total count.  States with every occupation <= 1 form the
encoded subspace that carries fermionic configurations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from .validation import check_occupation, check_positive

# Desk-scale guards: enumeration stays cheap and dense linear algebra feasible.
MAX_MODES = 16
MAX_SECTOR_SIZE = 2_000_000

__all__ = [
    "FockSector",
    "BosonState",
    "build_sector",
    "reference_state",
    "basis_state",
    "projection_ratio",
    "ratio_rmn",
    "ratio_lower_bound",
    "encode_to_qubit_index",
]


@dataclass(frozen=True)
class FockSector:
    """All occupation vectors of `num_photons` photons in `num_modes` modes.

    States are ordered lexicographically with mode 0 as the most significant
    position, so (0, ..., N) comes first and (N, 0, ..., 0) last.
    """

    num_modes: int
    num_photons: int
    states: tuple[tuple[int, ...], ...]
    index: dict[tuple[int, ...], int] = field(repr=False)
    encoded_positions: tuple[int, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.states)

    def position(self, occ) -> int:
        occ = check_occupation(occ, self.num_modes)
        try:
            return self.index[occ]
        except KeyError:
            raise ValueError(
                f"occupation {occ} has {sum(occ)} photons, sector holds {self.num_photons}"
            ) from None

    @property
    def encoded_states(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self.states[p] for p in self.encoded_positions)


def _enumerate(num_modes: int, num_photons: int):
    if num_modes == 1:
        yield (num_photons,)
        return
    for head in range(num_photons + 1):
        for tail in _enumerate(num_modes - 1, num_photons - head):
            yield (head,) + tail


@lru_cache(maxsize=None)
def build_sector(num_modes: int, num_photons: int) -> FockSector:
    check_positive(num_modes, "num_modes")
    check_positive(num_photons, "num_photons", strict=False)
    if num_modes > MAX_MODES:
        raise ValueError(f"num_modes {num_modes} exceeds supported maximum {MAX_MODES}")
    size = comb(num_modes + num_photons - 1, num_photons)
    if size > MAX_SECTOR_SIZE:
        raise ValueError(f"sector dimension {size} exceeds supported maximum {MAX_SECTOR_SIZE}")
    states = tuple(_enumerate(num_modes, num_photons))
    index = {occ: i for i, occ in enumerate(states)}
    encoded = tuple(i for i, occ in enumerate(states) if max(occ) <= 1)
    return FockSector(num_modes, num_photons, states, index, encoded)


@dataclass
class BosonState:
    """Amplitude vector over one Fock sector."""

    sector: FockSector
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (len(self.sector),):
            raise ValueError(
                f"amplitude vector has shape {amp.shape}, sector dimension is {len(self.sector)}"
            )
        self.amplitudes = amp

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "BosonState":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return BosonState(self.sector, self.amplitudes / n)

    def amplitude(self, occ) -> complex:
        return complex(self.amplitudes[self.sector.position(occ)])

    def encoded_amplitudes(self) -> np.ndarray:
        """Amplitudes on the all-occupations-<=1 states, in sector order."""
        return self.amplitudes[np.asarray(self.sector.encoded_positions, dtype=int)]


def basis_state(sector: FockSector, occ) -> BosonState:
    amp = np.zeros(len(sector), dtype=complex)
    amp[sector.position(occ)] = 1.0
    return BosonState(sector, amp)


def reference_state(num_modes: int, occupied) -> BosonState:
    """One photon in each listed mode, vacuum elsewhere."""
    occupied = sorted(set(int(m) for m in occupied))
    if occupied and not 0 <= occupied[0] <= occupied[-1] < num_modes:
        raise ValueError(f"occupied modes {occupied} out of range for {num_modes} modes")
    occ = tuple(1 if m in set(occupied) else 0 for m in range(num_modes))
    return basis_state(build_sector(num_modes, len(occupied)), occ)


def projection_ratio(state: BosonState) -> float:
    """Weight of the state inside the encoded (all occupations <= 1) subspace."""
    total = float(np.vdot(state.amplitudes, state.amplitudes).real)
    if total == 0.0:
        raise ValueError("projection ratio of a zero state is undefined")
    enc = state.encoded_amplitudes()
    return float(np.vdot(enc, enc).real) / total


def ratio_rmn(num_modes: int, num_photons: int) -> float:
    """C(M, N) / C(M+N-1, N) as an overflow-safe telescoping product."""
    m, n = int(num_modes), int(num_photons)
    if n < 0 or m < n:
        raise ValueError(f"need 0 <= num_photons <= num_modes, got M={m}, N={n}")
    out = 1.0
    for j in range(n):
        out *= (m - j) / (m + n - 1 - j)
    return out


def ratio_lower_bound(num_modes: int, num_photons: int) -> float:
    """Closed-form lower bound ((M-N+1)/M)^N on ratio_rmn."""
    m, n = int(num_modes), int(num_photons)
    if n < 0 or m < n:
        raise ValueError(f"need 0 <= num_photons <= num_modes, got M={m}, N={n}")
    if n == 0:
        return 1.0
    return ((m - n + 1) / m) ** n


def encode_to_qubit_index(occ) -> int:
    """Binary-encode an all-<=1 occupation vector, mode 0 as the lowest bit."""
    occ = tuple(int(n) for n in occ)
    if any(n not in (0, 1) for n in occ):
        raise ValueError(f"occupation {occ} lies outside the encoded subspace")
    out = 0
    for mode, n in enumerate(occ):
        out |= n << mode
    return out
