"""Shared argument-checking helpers.

Kept deliberately small: every public entry point validates its inputs with
these and raises ValueError with a message naming the offending argument.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_index",
    "check_positive",
    "check_unit_interval",
    "check_square",
    "check_hermitian",
    "check_occupation",
]


def check_index(value: int, size: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or not 0 <= value < size:
        raise ValueError(f"{name} must be an integer in [0, {size}), got {value!r}")
    return int(value)


def check_positive(value, name: str, strict: bool = True):
    if strict and not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and not value >= 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


def check_unit_interval(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def check_hermitian(a: np.ndarray, name: str, tol: float = 1e-10) -> np.ndarray:
    a = check_square(a, name)
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise ValueError(f"{name} must be Hermitian (max deviation {dev:.3e} > {tol:.1e})")
    return a


def check_occupation(occ, num_modes: int, name: str = "occupation") -> tuple[int, ...]:
    occ = tuple(int(n) for n in occ)
    if len(occ) != num_modes:
        raise ValueError(f"{name} must have length {num_modes}, got {len(occ)}")
    if any(n < 0 for n in occ):
        raise ValueError(f"{name} entries must be non-negative, got {occ}")
    return occ
