"""Second-quantized electronic Hamiltonians and classical transforms.

The container holds spin-orbital integrals for

    H = constant + sum_pq h_pq f+_p f_q
      + 1/2 sum_pqrs g_pqrs f+_p f+_q f_r f_s

with spatial orbitals expanded to interleaved spin orbitals (even index spin
up, odd spin down), ordered by ascending orbital energy.  Transforms produce
either rotated integrals (orbital rotations) or explicit operator sums
(excitation conjugation), so the measurement layer can consume both.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .fermion import PRUNE_TOL, FermiTermSum
from .validation import check_hermitian

HAM_SCHEMA = "bscvqe-hamiltonian/1"

__all__ = [
    "SecondQuantHam",
    "CisdAmplitudes",
    "parse_fcidump",
    "expand_to_spin_orbitals",
    "transform_hf",
    "transform_cisd",
    "ham_to_json",
    "ham_from_json",
]


@dataclass
class SecondQuantHam:
    """Spin-orbital integrals plus electron count for one molecule/geometry."""

    num_spin_orbitals: int
    num_electrons: int
    constant: float
    one_body: np.ndarray
    two_body: np.ndarray
    label: str = ""
    _fermi_cache: FermiTermSum | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = self.num_spin_orbitals
        self.one_body = np.asarray(self.one_body, dtype=complex)
        self.two_body = np.asarray(self.two_body, dtype=complex)
        if self.one_body.shape != (m, m):
            raise ValueError(f"one_body must be {m}x{m}, got {self.one_body.shape}")
        if self.two_body.shape != (m, m, m, m):
            raise ValueError(f"two_body must have four axes of length {m}")
        if not 0 <= self.num_electrons <= m:
            raise ValueError(
                f"electron count {self.num_electrons} out of range for {m} spin orbitals"
            )
        check_hermitian(self.one_body, "one_body", tol=1e-8)
        dev = np.max(np.abs(self.two_body - self.two_body.transpose(3, 2, 1, 0).conj()))
        if dev > 1e-8:
            raise ValueError(f"two_body breaks Hermiticity by {dev:.3e}")

    # -- derived quantities --------------------------------------------------

    def reference_occupation(self) -> tuple[int, ...]:
        """Lowest-index spin orbitals filled: the mean-field reference."""
        m, n = self.num_spin_orbitals, self.num_electrons
        return tuple(1 if p < n else 0 for p in range(m))

    def to_fermi_terms(self, tol: float = PRUNE_TOL) -> FermiTermSum:
        """Normal-ordered operator sum (constant excluded)."""
        if self._fermi_cache is not None:
            return self._fermi_cache
        out: dict = {}
        m = self.num_spin_orbitals
        one = self.one_body
        for p, q in zip(*np.nonzero(np.abs(one) > tol)):
            term = FermiTermSum.from_ops([(int(p), True), (int(q), False)], one[p, q])
            for key, c in term.terms.items():
                out[key] = out.get(key, 0.0) + c
        two = self.two_body
        for p, q, r, s in zip(*np.nonzero(np.abs(two) > tol)):
            term = FermiTermSum.from_ops(
                [(int(p), True), (int(q), True), (int(r), False), (int(s), False)],
                0.5 * two[p, q, r, s],
            )
            for key, c in term.terms.items():
                out[key] = out.get(key, 0.0) + c
        self._fermi_cache = FermiTermSum(out).simplified(tol)
        return self._fermi_cache

    def sector_basis(self) -> list[tuple[int, ...]]:
        """All N-electron determinants as 0/1 occupations, lexicographic."""
        import itertools

        m, n = self.num_spin_orbitals, self.num_electrons
        basis = []
        for modes in itertools.combinations(range(m), n):
            occ = [0] * m
            for p in modes:
                occ[p] = 1
            basis.append(tuple(occ))
        return basis

    def sector_matrix(self, basis: list[tuple[int, ...]] | None = None) -> np.ndarray:
        """Dense matrix on the N-electron determinant basis (constant excluded)."""
        if basis is None:
            basis = self.sector_basis()
        return self.to_fermi_terms().matrix_in_basis(basis)

    def rotated(self, u: np.ndarray) -> "SecondQuantHam":
        """Integrals of V+ H V for the orbital rotation V mapping f_p to sum_s u_ps f_s."""
        u = np.asarray(u, dtype=complex)
        m = self.num_spin_orbitals
        if u.shape != (m, m):
            raise ValueError(f"rotation must be {m}x{m}, got {u.shape}")
        one = u.conj().T @ self.one_body @ u
        two = np.einsum("PQRS,Pa->aQRS", self.two_body, u.conj(), optimize=True)
        two = np.einsum("aQRS,Qb->abRS", two, u.conj(), optimize=True)
        two = np.einsum("abRS,Rc->abcS", two, u, optimize=True)
        two = np.einsum("abcS,Sd->abcd", two, u, optimize=True)
        return SecondQuantHam(
            m, self.num_electrons, self.constant, one, two, label=self.label
        )


# -- FCIDUMP ingestion -------------------------------------------------------


def _parse_fcidump_header(text: str) -> tuple[int, int, int]:
    match = re.search(r"&FCI(.*?)(?:&END|/|\$END)", text, re.S | re.I)
    if not match:
        raise ValueError("missing &FCI ... &END header")
    head = match.group(1)

    def grab(key, default=None):
        m = re.search(rf"{key}\s*=\s*(-?\d+)", head, re.I)
        if m:
            return int(m.group(1))
        if default is None:
            raise ValueError(f"header lacks {key}")
        return default

    return grab("NORB"), grab("NELEC"), match.end()


def parse_fcidump(text: str, label: str = "") -> SecondQuantHam:
    """Read a spatial-orbital FCIDUMP (real 8-fold symmetric integrals)."""
    norb, nelec, body_start = _parse_fcidump_header(text)
    hcore = np.zeros((norb, norb))
    eri = np.zeros((norb, norb, norb, norb))
    constant = 0.0
    for line in text[body_start:].splitlines():
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise ValueError(f"bad integral line: {line!r}")
        val = float(parts[0])
        i, j, k, l = (int(x) for x in parts[1:])
        if max(i, j, k, l) > norb:
            raise ValueError(f"orbital index beyond NORB={norb}: {line!r}")
        if i == 0 and j == 0 and k == 0 and l == 0:
            constant = val
        elif k == 0 and l == 0:
            hcore[i - 1, j - 1] = val
            hcore[j - 1, i - 1] = val
        elif i == 0 or j == 0 or k == 0 or l == 0:
            raise ValueError(f"mixed zero/nonzero indices: {line!r}")
        else:
            a, b, c, d = i - 1, j - 1, k - 1, l - 1
            for p, q, r, s in (
                (a, b, c, d), (b, a, c, d), (a, b, d, c), (b, a, d, c),
                (c, d, a, b), (d, c, a, b), (c, d, b, a), (d, c, b, a),
            ):
                eri[p, q, r, s] = val
    return expand_to_spin_orbitals(norb, nelec, constant, hcore, eri, label=label)


def expand_to_spin_orbitals(
    norb: int,
    nelec: int,
    constant: float,
    hcore: np.ndarray,
    eri_chemist: np.ndarray,
    label: str = "",
) -> SecondQuantHam:
    """Interleave spins: spatial orbital p becomes spin orbitals 2p and 2p+1.

    The chemist-ordered spatial integrals (pq|rs) enter the two-body tensor as
    g[P,Q,R,S] = (p_P q_S | q_Q q_R) with spin(P)=spin(S) and spin(Q)=spin(R),
    matching the operator order f+_P f+_Q f_R f_S.
    """
    m = 2 * norb
    one = np.zeros((m, m), dtype=complex)
    two = np.zeros((m, m, m, m), dtype=complex)
    for p in range(norb):
        for q in range(norb):
            if hcore[p, q] == 0.0:
                continue
            for sp in (0, 1):
                one[2 * p + sp, 2 * q + sp] = hcore[p, q]
    nz = np.nonzero(eri_chemist)
    for p, q, r, s in zip(*nz):
        val = eri_chemist[p, q, r, s]
        for sp in (0, 1):
            for tau in (0, 1):
                # P=(p,sp), S=(q,sp), Q=(r,tau), R=(s,tau)
                two[2 * p + sp, 2 * r + tau, 2 * s + tau, 2 * q + sp] = val
    return SecondQuantHam(m, nelec, float(constant), one, two, label=label)


# -- orbital-rotation transform ---------------------------------------------


def transform_hf(ham: SecondQuantHam, beta: np.ndarray) -> SecondQuantHam:
    """Conjugate by the determinant rotation generated by Hermitian beta."""
    beta = check_hermitian(np.asarray(beta, dtype=complex), "beta", tol=1e-8)
    return ham.rotated(expm(1j * beta))


# -- excitation-operator transform ------------------------------------------


@dataclass
class CisdAmplitudes:
    """Singles and doubles amplitudes relative to the lowest-orbital reference.

    Singles map occupied spin orbital i to virtual a; doubles use ordered
    pairs i<j occupied and a<b virtual.  All amplitudes are real.
    """

    num_spin_orbitals: int
    num_electrons: int
    singles: dict[tuple[int, int], float] = field(default_factory=dict)
    doubles: dict[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        n, m = self.num_electrons, self.num_spin_orbitals
        for (i, a) in self.singles:
            if not (0 <= i < n and n <= a < m):
                raise ValueError(f"single ({i},{a}) must excite occupied -> virtual")
        for (i, j, a, b) in self.doubles:
            if not (0 <= i < j < n and n <= a < b < m):
                raise ValueError(
                    f"double ({i},{j},{a},{b}) needs i<j occupied and a<b virtual"
                )

    @staticmethod
    def slot_keys(num_spin_orbitals: int, num_electrons: int):
        """Deterministic amplitude ordering used by parameter vectors."""
        n, m = num_electrons, num_spin_orbitals
        singles = [(i, a) for i in range(n) for a in range(n, m)]
        doubles = [
            (i, j, a, b)
            for i in range(n)
            for j in range(i + 1, n)
            for a in range(n, m)
            for b in range(a + 1, m)
        ]
        return singles, doubles

    @classmethod
    def from_vector(cls, num_spin_orbitals: int, num_electrons: int, vec) -> "CisdAmplitudes":
        singles_keys, doubles_keys = cls.slot_keys(num_spin_orbitals, num_electrons)
        vec = np.asarray(vec, dtype=float)
        want = len(singles_keys) + len(doubles_keys)
        if vec.shape != (want,):
            raise ValueError(f"expected {want} amplitudes, got {vec.shape}")
        singles = {k: float(v) for k, v in zip(singles_keys, vec[: len(singles_keys)])}
        doubles = {k: float(v) for k, v in zip(doubles_keys, vec[len(singles_keys):])}
        return cls(num_spin_orbitals, num_electrons, singles, doubles)

    def to_vector(self) -> np.ndarray:
        singles_keys, doubles_keys = self.slot_keys(
            self.num_spin_orbitals, self.num_electrons
        )
        return np.array(
            [self.singles.get(k, 0.0) for k in singles_keys]
            + [self.doubles.get(k, 0.0) for k in doubles_keys]
        )

    def excitation_operator(self) -> FermiTermSum:
        """T1 + T2 with T2 = sum t_ijab f+_a f+_b f_j f_i."""
        out = FermiTermSum()
        for (i, a), t in self.singles.items():
            if t != 0.0:
                out = out + FermiTermSum.from_ops([(a, True), (i, False)], t)
        for (i, j, a, b), t in self.doubles.items():
            if t != 0.0:
                out = out + FermiTermSum.from_ops(
                    [(a, True), (b, True), (j, False), (i, False)], t
                )
        return out


def transform_cisd(
    ham: SecondQuantHam, amps: CisdAmplitudes
) -> tuple[FermiTermSum, FermiTermSum]:
    """Conjugate H by V = 1 + T1 + T2; returns (V+ H V, V+ V).

    The returned operator sums exclude the constant: the full transformed
    Hamiltonian is constant * metric + transformed.
    """
    if (amps.num_spin_orbitals, amps.num_electrons) != (
        ham.num_spin_orbitals,
        ham.num_electrons,
    ):
        raise ValueError("amplitude dimensions do not match the Hamiltonian")
    v = FermiTermSum.identity() + amps.excitation_operator()
    v_dag = v.adjoint()
    h = ham.to_fermi_terms()
    transformed = v_dag.multiply(h.multiply(v))
    metric = v_dag.multiply(v)
    return transformed, metric


# -- JSON round trip ---------------------------------------------------------


def ham_to_json(ham: SecondQuantHam, tol: float = PRUNE_TOL) -> str:
    one_entries = [
        [int(i), int(j), float(ham.one_body[i, j].real), float(ham.one_body[i, j].imag)]
        for i, j in zip(*np.nonzero(np.abs(ham.one_body) > tol))
    ]
    two_entries = [
        [int(p), int(q), int(r), int(s),
         float(ham.two_body[p, q, r, s].real), float(ham.two_body[p, q, r, s].imag)]
        for p, q, r, s in zip(*np.nonzero(np.abs(ham.two_body) > tol))
    ]
    doc = {
        "schema": HAM_SCHEMA,
        "label": ham.label,
        "m": ham.num_spin_orbitals,
        "n": ham.num_electrons,
        "constant": float(ham.constant),
        "one_body": sorted(one_entries),
        "two_body": sorted(two_entries),
    }
    return json.dumps(doc, indent=1) + "\n"


def ham_from_json(text: str) -> SecondQuantHam:
    doc = json.loads(text)
    schema = doc.get("schema", HAM_SCHEMA)
    if not str(schema).startswith("bscvqe-hamiltonian/"):
        raise ValueError(f"not a hamiltonian document: schema {schema!r}")
    major = str(schema).rsplit("/", 1)[-1]
    if major != "1":
        raise ValueError(f"unsupported hamiltonian schema version {schema!r}")
    m = int(doc["m"])
    one = np.zeros((m, m), dtype=complex)
    for i, j, re_, im_ in doc["one_body"]:
        one[i, j] = re_ + 1j * im_
    two = np.zeros((m, m, m, m), dtype=complex)
    for p, q, r, s, re_, im_ in doc["two_body"]:
        two[p, q, r, s] = re_ + 1j * im_
    return SecondQuantHam(
        m, int(doc["n"]), float(doc["constant"]), one, two,
        label=str(doc.get("label", "")),
    )
