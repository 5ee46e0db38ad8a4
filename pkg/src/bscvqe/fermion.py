"""Fermionic ladder-operator algebra and its qubit image.

Operators are sums of normal-ordered monomials f+_{c1}..f+_{ck} f_{a1}..f_{al}
with creation indices strictly ascending and annihilation indices strictly
descending, so the adjoint of a monomial is again in canonical form.  The
qubit image keeps one symbol per mode out of {I, Z, sigma+, sigma-, P0, P1};
occupation projectors are kept unexpanded because the measurement layer treats
them as photon-count indicators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

# Coefficients below this magnitude are dropped when simplifying.
PRUNE_TOL = 1e-12

# Per-mode symbol product (left, right) -> (sign, symbol); None means zero.
_SYMBOLS = "iz+-01"
_MULT: dict[tuple[str, str], tuple[int, str] | None] = {}
for _s in _SYMBOLS:
    _MULT[("i", _s)] = (1, _s)
    _MULT[(_s, "i")] = (1, _s)
_MULT.update(
    {
        ("z", "z"): (1, "i"),
        ("z", "+"): (-1, "+"),
        ("z", "-"): (1, "-"),
        ("z", "0"): (1, "0"),
        ("z", "1"): (-1, "1"),
        ("+", "z"): (1, "+"),
        ("-", "z"): (-1, "-"),
        ("0", "z"): (1, "0"),
        ("1", "z"): (-1, "1"),
        ("+", "+"): None,
        ("-", "-"): None,
        ("+", "-"): (1, "1"),
        ("-", "+"): (1, "0"),
        ("+", "0"): (1, "+"),
        ("0", "+"): None,
        ("+", "1"): None,
        ("1", "+"): (1, "+"),
        ("-", "0"): None,
        ("0", "-"): (1, "-"),
        ("-", "1"): (1, "-"),
        ("1", "-"): None,
        ("0", "0"): (1, "0"),
        ("1", "1"): (1, "1"),
        ("0", "1"): None,
        ("1", "0"): None,
    }
)

Monomial = tuple[tuple[int, ...], tuple[int, ...]]  # (create asc, annihilate desc)
IDENTITY: Monomial = ((), ())

__all__ = [
    "FermiTermSum",
    "LadderTermSum",
    "jordan_wigner",
    "PRUNE_TOL",
]


def _normal_order(ops: list[tuple[int, bool]], coeff: complex) -> dict[Monomial, complex]:
    """Rewrite an arbitrary ladder-operator string into canonical monomials."""
    out: dict[Monomial, complex] = {}
    stack = [(ops, coeff)]
    while stack:
        seq, c = stack.pop()
        pos = 0
        resolved = True
        while pos < len(seq) - 1:
            (p, pdag), (q, qdag) = seq[pos], seq[pos + 1]
            if not pdag and qdag:
                # f_p f+_q = delta_pq - f+_q f_p: branch and reprocess
                swapped = seq[:pos] + [seq[pos + 1], seq[pos]] + seq[pos + 2 :]
                stack.append((swapped, -c))
                if p == q:
                    stack.append((seq[:pos] + seq[pos + 2 :], c))
                resolved = False
                break
            if pdag == qdag:
                if p == q:
                    resolved = False  # repeated creator or annihilator vanishes
                    break
                wrong = (p > q) if pdag else (p < q)
                if wrong:
                    seq = seq[:pos] + [seq[pos + 1], seq[pos]] + seq[pos + 2 :]
                    c = -c
                    pos = max(pos - 1, 0)
                    continue
            pos += 1
        if resolved:
            create = tuple(m for m, d in seq if d)
            annihilate = tuple(m for m, d in seq if not d)
            key = (create, annihilate)
            out[key] = out.get(key, 0.0) + c
    return out


class FermiTermSum:
    """Linear combination of canonical fermionic monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, complex] | None = None):
        self.terms: dict[Monomial, complex] = dict(terms) if terms else {}

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> "FermiTermSum":
        return cls({IDENTITY: complex(coeff)})

    @classmethod
    def from_ops(cls, ops: Iterable[tuple[int, bool]], coeff: complex = 1.0) -> "FermiTermSum":
        """Build from an operator string given as (mode, is_creation) pairs."""
        return cls(_normal_order(list(ops), complex(coeff)))

    def copy(self) -> "FermiTermSum":
        return FermiTermSum(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Monomial, complex]]:
        return iter(self.terms.items())

    def __add__(self, other: "FermiTermSum") -> "FermiTermSum":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0.0) + c
        return FermiTermSum(out)

    def __sub__(self, other: "FermiTermSum") -> "FermiTermSum":
        return self + (other * -1.0)

    def scaled(self, factor: complex) -> "FermiTermSum":
        return FermiTermSum({k: c * factor for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, FermiTermSum):
            return self.multiply(other)
        return self.scaled(other)

    __rmul__ = scaled

    def multiply(self, other: "FermiTermSum") -> "FermiTermSum":
        """Operator product, normal ordered."""
        out: dict[Monomial, complex] = {}
        for (c1, a1), x in self.terms.items():
            left = [(m, True) for m in c1] + [(m, False) for m in a1]
            for (c2, a2), y in other.terms.items():
                seq = left + [(m, True) for m in c2] + [(m, False) for m in a2]
                for key, c in _normal_order(seq, x * y).items():
                    out[key] = out.get(key, 0.0) + c
        return FermiTermSum(out).simplified()

    def adjoint(self) -> "FermiTermSum":
        out: dict[Monomial, complex] = {}
        for (create, annihilate), c in self.terms.items():
            key = (tuple(reversed(annihilate)), tuple(reversed(create)))
            out[key] = out.get(key, 0.0) + np.conj(c)
        return FermiTermSum(out)

    def simplified(self, tol: float = PRUNE_TOL) -> "FermiTermSum":
        return FermiTermSum({k: c for k, c in self.terms.items() if abs(c) > tol})

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        diff = (self - self.adjoint()).simplified(tol)
        return len(diff) == 0

    def max_mode(self) -> int:
        modes = [m for (c, a) in self.terms for m in c + a]
        return max(modes) + 1 if modes else 0

    # -- action on occupation-number basis states ---------------------------

    def apply_to_occupation(self, occ: tuple[int, ...]) -> list[tuple[complex, tuple[int, ...]]]:
        """Images of one 0/1 occupation vector, as (amplitude, occupation) pairs."""
        results: list[tuple[complex, tuple[int, ...]]] = []
        for (create, annihilate), coeff in self.terms.items():
            cur = list(occ)
            sign = 1
            ok = True
            for p in reversed(annihilate):
                if not cur[p]:
                    ok = False
                    break
                if sum(cur[:p]) % 2:
                    sign = -sign
                cur[p] = 0
            if not ok:
                continue
            for p in reversed(create):
                if cur[p]:
                    ok = False
                    break
                if sum(cur[:p]) % 2:
                    sign = -sign
                cur[p] = 1
            if not ok:
                continue
            results.append((sign * coeff, tuple(cur)))
        return results

    def matrix_in_basis(self, basis: Iterable[tuple[int, ...]]) -> np.ndarray:
        """Dense matrix over the given list of 0/1 occupation vectors."""
        basis = list(basis)
        index = {occ: i for i, occ in enumerate(basis)}
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for col, occ in enumerate(basis):
            for amp, out_occ in self.apply_to_occupation(occ):
                row = index.get(out_occ)
                if row is not None:
                    mat[row, col] += amp
        return mat

    def to_dense(self, num_modes: int) -> np.ndarray:
        """Full 2^M matrix in occupation order (mode 0 = lowest bit)."""
        if num_modes > 14:
            raise ValueError(f"dense embedding limited to 14 modes, got {num_modes}")
        basis = [
            tuple((b >> m) & 1 for m in range(num_modes)) for b in range(2**num_modes)
        ]
        return self.matrix_in_basis(basis)


class LadderTermSum:
    """Qubit-image operator: per-mode symbol strings with complex weights.

    A term is a length-M string over 'i', 'z', '+', '-', '0', '1' standing for
    identity, Pauli Z, raising |1><0|, lowering |0><1| and the occupation
    projectors.  On optical modes every symbol acts as written on photon
    counts 0/1 and annihilates counts >= 2.
    """

    __slots__ = ("num_modes", "terms")

    def __init__(self, num_modes: int, terms: dict[str, complex] | None = None):
        self.num_modes = int(num_modes)
        self.terms: dict[str, complex] = {}
        if terms:
            for key, c in terms.items():
                self._check_key(key)
                self.terms[key] = complex(c)

    def _check_key(self, key: str):
        if len(key) != self.num_modes or any(s not in _SYMBOLS for s in key):
            raise ValueError(f"bad term string {key!r} for {self.num_modes} modes")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[str, complex]]:
        return iter(self.terms.items())

    def add_term(self, key: str, coeff: complex):
        self._check_key(key)
        self.terms[key] = self.terms.get(key, 0.0) + complex(coeff)

    def simplified(self, tol: float = PRUNE_TOL) -> "LadderTermSum":
        return LadderTermSum(
            self.num_modes, {k: c for k, c in self.terms.items() if abs(c) > tol}
        )

    def scaled(self, factor: complex) -> "LadderTermSum":
        return LadderTermSum(self.num_modes, {k: c * factor for k, c in self.terms.items()})

    def __add__(self, other: "LadderTermSum") -> "LadderTermSum":
        if other.num_modes != self.num_modes:
            raise ValueError("mode count mismatch")
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return LadderTermSum(self.num_modes, out)

    def adjoint(self) -> "LadderTermSum":
        swap = str.maketrans("+-", "-+")
        return LadderTermSum(
            self.num_modes,
            {k.translate(swap): np.conj(c) for k, c in self.terms.items()},
        )

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        diff = self + self.adjoint().scaled(-1.0)
        return all(abs(c) <= tol for c in diff.terms.values())

    def coefficient_one_norm(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def expand_projectors(self) -> "LadderTermSum":
        """Rewrite P0 -> (I+Z)/2 and P1 -> (I-Z)/2, leaving only i/z/+/-."""
        out = LadderTermSum(self.num_modes)
        for key, coeff in self.terms.items():
            expansions = [("", coeff)]
            for s in key:
                if s in "01":
                    sign = 1.0 if s == "0" else -1.0
                    expansions = [
                        (prefix + c, w * 0.5 * (1.0 if c == "i" else sign))
                        for prefix, w in expansions
                        for c in ("i", "z")
                    ]
                else:
                    expansions = [(prefix + s, w) for prefix, w in expansions]
            for string, w in expansions:
                out.add_term(string, w)
        return out.simplified()

    def to_dense_qubit(self) -> np.ndarray:
        """2^M matrix over the two-level (0/1 occupation) space."""
        m = self.num_modes
        if m > 14:
            raise ValueError(f"dense embedding limited to 14 modes, got {m}")
        dim = 2**m
        cols = np.arange(dim)
        mat = np.zeros((dim, dim), dtype=complex)
        for key, coeff in self.terms.items():
            factor = np.full(dim, coeff, dtype=complex)
            rows = cols.copy()
            for mode, s in enumerate(key):
                bit = (cols >> mode) & 1
                if s == "z":
                    factor = factor * (1.0 - 2.0 * bit)
                elif s == "0":
                    factor = factor * (1 - bit)
                elif s == "1":
                    factor = factor * bit
                elif s == "+":
                    factor = factor * (1 - bit)
                    rows = rows | (1 << mode)
                elif s == "-":
                    factor = factor * bit
                    rows = rows & ~(1 << mode)
            live = factor != 0
            np.add.at(mat, (rows[live], cols[live]), factor[live])
        return mat

    def diag_offdiag_modes(self, key: str) -> tuple[list[int], list[int]]:
        """Mode positions measured by photon counting vs homodyne for one term."""
        self._check_key(key)
        diag = [m for m, s in enumerate(key) if s in "iz01"]
        off = [m for m, s in enumerate(key) if s in "+-"]
        return diag, off


def jordan_wigner(op: FermiTermSum, num_modes: int) -> LadderTermSum:
    """Map fermionic monomials to per-mode symbol strings.

    f_p becomes a Z string on modes below p times a lowering symbol at p;
    products collapse mode by mode, with sigma+ sigma- pairs reducing to
    occupation projectors.
    """
    out = LadderTermSum(num_modes)
    for (create, annihilate), coeff in op.terms.items():
        ops = [(p, "+") for p in create] + [(p, "-") for p in annihilate]
        string = ["i"] * num_modes
        sign = 1
        dead = False
        for p, sym in ops:
            if p >= num_modes:
                raise ValueError(f"mode {p} out of range for {num_modes} modes")
            for q in range(p):
                res = _MULT[(string[q], "z")]
                if res is None:
                    dead = True
                    break
                s, string[q] = res
                sign *= s
            if dead:
                break
            res = _MULT[(string[p], sym)]
            if res is None:
                dead = True
                break
            s, string[p] = res
            sign *= s
        if not dead:
            out.add_term("".join(string), sign * coeff)
    return out.simplified()
