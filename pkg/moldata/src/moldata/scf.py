"""Closed-shell restricted Hartree-Fock with DIIS acceleration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .basis import build_basis, nuclear_repulsion
from .integrals import eri_tensor, kinetic_matrix, nuclear_matrix, overlap_matrix


class SCFError(RuntimeError):
    pass


@dataclass
class SCFResult:
    energy: float            # total electronic + nuclear
    energy_nuclear: float
    mo_coeff: np.ndarray     # columns are MOs, ascending orbital energy
    mo_energy: np.ndarray
    hcore: np.ndarray        # AO basis
    eri: np.ndarray          # AO basis, chemist (ij|kl)
    overlap: np.ndarray
    num_electrons: int
    iterations: int


def _fock(hcore, eri, dm):
    # dm is the spin-summed density; J = (ij|kl) D_lk, K = (ik|jl) D_lk
    J = np.einsum("ijkl,lk->ij", eri, dm)
    K = np.einsum("ikjl,lk->ij", eri, dm)
    return hcore + J - 0.5 * K


def run_rhf(
    symbols: list[str],
    coords_angstrom,
    basis_name: str,
    charge: int = 0,
    conv_tol: float = 1e-11,
    max_iter: int = 200,
    diis_size: int = 8,
    level_shifts: tuple[float, ...] = (0.0, 0.3, 1.0),
) -> SCFResult:
    """Converge RHF, escalating the virtual-orbital level shift on failure."""
    last: SCFError | None = None
    for shift in level_shifts:
        try:
            return _run_rhf_once(
                symbols, coords_angstrom, basis_name, charge,
                conv_tol, max_iter, diis_size, shift,
            )
        except SCFError as exc:
            last = exc
    raise SCFError(f"all level shifts {level_shifts} failed: {last}")


def _run_rhf_once(
    symbols, coords_angstrom, basis_name, charge,
    conv_tol, max_iter, diis_size, level_shift,
) -> SCFResult:
    from .basis import ATOMIC_NUMBER

    coords_angstrom = np.asarray(coords_angstrom, dtype=float)
    nelec = sum(ATOMIC_NUMBER[s] for s in symbols) - charge
    if nelec % 2 != 0:
        raise SCFError(f"RHF needs an even electron count, got {nelec}")
    nocc = nelec // 2

    basis = build_basis(symbols, coords_angstrom, basis_name)
    S = overlap_matrix(basis)
    T = kinetic_matrix(basis)
    V = nuclear_matrix(basis, symbols, coords_angstrom)
    hcore = T + V
    eri = eri_tensor(basis)
    e_nuc = nuclear_repulsion(symbols, coords_angstrom)

    # symmetric orthogonalization
    sval, svec = np.linalg.eigh(S)
    if sval.min() < 1e-8:
        raise SCFError(f"near-singular overlap, smallest eigenvalue {sval.min():.3e}")
    X = svec @ np.diag(sval**-0.5) @ svec.T

    # core-Hamiltonian guess
    e_mo, c_ortho = np.linalg.eigh(X.T @ hcore @ X)
    C = X @ c_ortho
    dm = 2.0 * C[:, :nocc] @ C[:, :nocc].T

    errs: list[np.ndarray] = []
    focks: list[np.ndarray] = []
    e_old = 0.0
    for it in range(1, max_iter + 1):
        F = _fock(hcore, eri, dm)
        # DIIS on the orthogonalized gradient FDS - SDF
        err = X.T @ (F @ dm @ S - S @ dm @ F) @ X
        errs.append(err)
        focks.append(F)
        if len(errs) > diis_size:
            errs.pop(0)
            focks.pop(0)
        if len(errs) > 1:
            m = len(errs)
            B = -np.ones((m + 1, m + 1))
            B[m, m] = 0.0
            for i in range(m):
                for j in range(m):
                    B[i, j] = np.vdot(errs[i], errs[j])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                w = np.linalg.solve(B, rhs)[:m]
                F = sum(wi * Fi for wi, Fi in zip(w, focks))
            except np.linalg.LinAlgError:
                pass
        F_ortho = X.T @ F @ X
        if level_shift > 0.0:
            # push virtuals up to break occupied/virtual oscillation
            p_occ = c_ortho[:, :nocc] @ c_ortho[:, :nocc].T
            F_ortho = F_ortho + level_shift * (np.eye(len(F_ortho)) - p_occ)
        e_mo, c_ortho = np.linalg.eigh(F_ortho)
        C = X @ c_ortho
        dm = 2.0 * C[:, :nocc] @ C[:, :nocc].T
        e_elec = 0.5 * np.einsum("ij,ji->", dm, hcore + _fock(hcore, eri, dm))
        e_tot = e_elec + e_nuc
        grad = np.max(np.abs(err))
        if abs(e_tot - e_old) < conv_tol and grad < 1e-7:
            # canonical orbitals/energies from the unshifted converged Fock
            F = _fock(hcore, eri, dm)
            e_mo, c_ortho = np.linalg.eigh(X.T @ F @ X)
            C = X @ c_ortho
            if np.max(np.abs(2.0 * C[:, :nocc] @ C[:, :nocc].T - dm)) > 1e-6:
                # shift stabilized a non-aufbau state; downstream assumes
                # the lowest orbitals are the occupied ones
                raise SCFError("converged to a non-aufbau solution")
            return SCFResult(
                energy=e_tot, energy_nuclear=e_nuc, mo_coeff=C, mo_energy=e_mo,
                hcore=hcore, eri=eri, overlap=S, num_electrons=nelec, iterations=it,
            )
        e_old = e_tot
    raise SCFError(f"SCF did not converge in {max_iter} iterations")


def mo_integrals(res: SCFResult) -> tuple[np.ndarray, np.ndarray]:
    """Transform AO integrals to the MO basis. Returns (h_mo, (pq|rs)_mo)."""
    C = res.mo_coeff
    h = C.T @ res.hcore @ C
    g = np.einsum("pi,qj,pqrs,rk,sl->ijkl", C, C, res.eri, C, C, optimize=True)
    return h, g


def active_space_integrals(
    h_mo: np.ndarray,
    g_mo: np.ndarray,
    e_nuc: float,
    num_electrons: int,
    active: list[int],
) -> tuple[float, np.ndarray, np.ndarray, int]:
    """Fold doubly occupied non-active orbitals into an effective core.

    `active` lists spatial MO indices (0-based, ascending energy order).
    Doubly occupied orbitals outside the list are frozen; virtuals outside
    are dropped.  Returns (core_energy, h_eff, g_active, active_electrons).
    """
    active = sorted(active)
    nocc = num_electrons // 2
    frozen = [i for i in range(nocc) if i not in active]
    for i in frozen:
        if any(a < i for a in active):
            # an active orbital below a frozen one would break the
            # closed-shell core assumption
            raise ValueError(
                f"frozen orbital {i} lies above active orbital(s) {active}"
            )
    e_core = e_nuc
    for c in frozen:
        e_core += 2.0 * h_mo[c, c]
        for d in frozen:
            e_core += 2.0 * g_mo[c, c, d, d] - g_mo[c, d, d, c]
    n_act = len(active)
    h_eff = np.zeros((n_act, n_act))
    for ti, t in enumerate(active):
        for ui, u in enumerate(active):
            val = h_mo[t, u]
            for c in frozen:
                val += 2.0 * g_mo[t, u, c, c] - g_mo[t, c, c, u]
            h_eff[ti, ui] = val
    idx = np.ix_(active, active, active, active)
    g_act = g_mo[idx]
    n_act_elec = num_electrons - 2 * len(frozen)
    if n_act_elec < 0:
        raise ValueError("more frozen electrons than electrons present")
    return e_core, h_eff, g_act, n_act_elec
