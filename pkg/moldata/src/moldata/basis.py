"""Contracted Gaussian basis data for the bundled molecule suite.

Exponents and contraction coefficients are the standard published values
for STO-3G (H, Li, Be), 6-31G (H) and 6-311G (H).  Shells with angular
momentum 1 expand to the three Cartesian p functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ANGSTROM_TO_BOHR = 1.8897259886

# element -> basis -> list of (angmom, exponents, coefficients)
_SHELLS = {
    ("H", "sto-3g"): [
        (0, [3.42525091, 0.62391373, 0.16885540],
            [0.15432897, 0.53532814, 0.44463454]),
    ],
    ("H", "6-31g"): [
        (0, [18.7311370, 2.8253937, 0.6401217],
            [0.03349460, 0.23472695, 0.81375733]),
        (0, [0.1612778], [1.0]),
    ],
    ("H", "6-311g"): [
        (0, [33.8650000, 5.0947900, 1.1587900],
            [0.0254938, 0.1903730, 0.8521610]),
        (0, [0.3258400], [1.0]),
        (0, [0.1027410], [1.0]),
    ],
    ("Li", "sto-3g"): [
        (0, [16.1195750, 2.9362007, 0.7946505],
            [0.15432897, 0.53532814, 0.44463454]),
        (0, [0.6362897, 0.1478601, 0.0480887],
            [-0.09996723, 0.39951283, 0.70011547]),
        (1, [0.6362897, 0.1478601, 0.0480887],
            [0.15591627, 0.60768372, 0.39195739]),
    ],
    ("Be", "sto-3g"): [
        (0, [30.1678710, 5.4951153, 1.4871927],
            [0.15432897, 0.53532814, 0.44463454]),
        (0, [1.3148331, 0.3055389, 0.0993707],
            [-0.09996723, 0.39951283, 0.70011547]),
        (1, [1.3148331, 0.3055389, 0.0993707],
            [0.15591627, 0.60768372, 0.39195739]),
    ],
}

ATOMIC_NUMBER = {"H": 1, "Li": 3, "Be": 4}


@dataclass(frozen=True)
class BasisFunction:
    """One contracted Cartesian Gaussian: sum_k c_k (x-Ax)^l ... exp(-a_k r^2)."""

    center: tuple[float, float, float]
    powers: tuple[int, int, int]
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]  # includes primitive normalization


def _primitive_norm(a: float, powers: tuple[int, int, int]) -> float:
    l, m, n = powers
    from math import pi

    def dfact(k):
        out = 1
        while k > 1:
            out *= k
            k -= 2
        return out

    num = (2 * a / pi) ** 0.75 * (4 * a) ** ((l + m + n) / 2)
    return num / np.sqrt(dfact(2 * l - 1) * dfact(2 * m - 1) * dfact(2 * n - 1))


def _cartesian_powers(angmom: int):
    if angmom == 0:
        return [(0, 0, 0)]
    if angmom == 1:
        return [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    raise ValueError(f"angular momentum {angmom} not supported")


def build_basis(
    symbols: list[str], coords_angstrom: np.ndarray, basis_name: str
) -> list[BasisFunction]:
    """Expand the atom list into normalized contracted Cartesian functions."""
    from .integrals import overlap_contracted

    basis_name = basis_name.lower()
    coords = np.asarray(coords_angstrom, dtype=float) * ANGSTROM_TO_BOHR
    funcs: list[BasisFunction] = []
    for sym, xyz in zip(symbols, coords):
        key = (sym, basis_name)
        if key not in _SHELLS:
            raise ValueError(f"no {basis_name} data for element {sym}")
        for angmom, exps, coefs in _SHELLS[key]:
            for powers in _cartesian_powers(angmom):
                normed = tuple(
                    c * _primitive_norm(a, powers) for a, c in zip(exps, coefs)
                )
                fn = BasisFunction(tuple(xyz), powers, tuple(exps), normed)
                # renormalize the contraction
                s = overlap_contracted(fn, fn)
                fn = BasisFunction(
                    tuple(xyz), powers, tuple(exps),
                    tuple(c / np.sqrt(s) for c in normed),
                )
                funcs.append(fn)
    return funcs


def nuclear_repulsion(symbols: list[str], coords_angstrom: np.ndarray) -> float:
    coords = np.asarray(coords_angstrom, dtype=float) * ANGSTROM_TO_BOHR
    e = 0.0
    for i in range(len(symbols)):
        for j in range(i + 1, len(symbols)):
            r = np.linalg.norm(coords[i] - coords[j])
            e += ATOMIC_NUMBER[symbols[i]] * ATOMIC_NUMBER[symbols[j]] / r
    return e
