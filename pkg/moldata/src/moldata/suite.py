"""Bundled-molecule suite: geometry templates, active spaces, manifest.

Active orbital lists are 0-based indices into the energy-sorted RHF
orbitals; doubly occupied orbitals left out of a list are frozen into the
core.  The emitted files are the ground truth consumed downstream.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fcidump import write_fcidump
from .scf import active_space_integrals, mo_integrals, run_rhf

SUITE_SCHEMA = "moldata-suite/1"

# 0.5 to 2.5 Angstrom in 0.25 steps
DEFAULT_BONDS = tuple(round(0.5 + 0.25 * k, 2) for k in range(9))

Geometry = tuple[list[str], list[tuple[float, float, float]]]


def _h2(r: float) -> Geometry:
    return ["H", "H"], [(0.0, 0.0, 0.0), (0.0, 0.0, r)]


def _h4_line(r: float) -> Geometry:
    return ["H"] * 4, [(0.0, 0.0, k * r) for k in range(4)]


def _h4_square(r: float) -> Geometry:
    return ["H"] * 4, [(0.0, 0.0, 0.0), (r, 0.0, 0.0), (r, r, 0.0), (0.0, r, 0.0)]


def _lih(r: float) -> Geometry:
    return ["Li", "H"], [(0.0, 0.0, 0.0), (0.0, 0.0, r)]


def _beh2(r: float) -> Geometry:
    return ["H", "Be", "H"], [(0.0, 0.0, -r), (0.0, 0.0, 0.0), (0.0, 0.0, r)]


def _beh2_active(r: float) -> list[int]:
    # antibonding orbital ordering flips in the dissociation region
    return [1, 2, 5, 6] if r < 1.9 else [1, 2, 3, 6]


def _lih_active(r: float) -> list[int]:
    return [1, 2, 5]


def _full_space(r: float) -> None:
    return None


@dataclass(frozen=True)
class MoleculeJob:
    name: str
    basis: str
    geometry: Callable[[float], Geometry]
    bonds: tuple[float, ...] = DEFAULT_BONDS
    # returns 0-based orbital indices, or None for the full orbital space;
    # must be a module-level function so jobs stay picklable
    active: Callable[[float], list[int] | None] = _full_space


SUITE: tuple[MoleculeJob, ...] = (
    MoleculeJob("h2_sto3g", "sto-3g", _h2),
    MoleculeJob("h2_631g", "6-31g", _h2),
    MoleculeJob("h2_6311g", "6-311g", _h2),
    MoleculeJob("h4_line", "sto-3g", _h4_line),
    MoleculeJob("h4_square", "sto-3g", _h4_square),
    MoleculeJob("lih", "sto-3g", _lih, active=_lih_active),
    MoleculeJob("beh2", "sto-3g", _beh2, active=_beh2_active),
)


def generate_point(job: MoleculeJob, bond: float, outdir: str) -> dict:
    """Run SCF for one geometry, fold the active space, write the dump."""
    symbols, coords = job.geometry(bond)
    res = run_rhf(symbols, np.asarray(coords), job.basis)
    h_mo, g_mo = mo_integrals(res)
    active = job.active(bond)
    if active is None:
        active = list(range(h_mo.shape[0]))
    e_core, h_eff, g_act, n_elec = active_space_integrals(
        h_mo, g_mo, res.energy_nuclear, res.num_electrons, active
    )
    fname = f"{job.name}_r{bond:.2f}.fcidump"
    write_fcidump(os.path.join(outdir, fname), e_core, h_eff, g_act, n_elec)
    return {
        "molecule": job.name,
        "basis": job.basis,
        "bond_angstrom": bond,
        "file": fname,
        "active_orbitals": list(active),
        "active_electrons": n_elec,
        "num_spin_orbitals": 2 * len(active),
        "scf_energy": res.energy,
        "core_energy": e_core,
    }


def _sha256(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def generate_suite(outdir: str, jobs: int = 1, names: list[str] | None = None) -> dict:
    """Emit every suite molecule; write manifest plus checksum sidecar."""
    os.makedirs(outdir, exist_ok=True)
    selected = [j for j in SUITE if names is None or j.name in names]
    if names is not None:
        unknown = set(names) - {j.name for j in SUITE}
        if unknown:
            raise ValueError(f"unknown molecules: {sorted(unknown)}")
    tasks = [(job, bond) for job in selected for bond in job.bonds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(
                pool.map(generate_point, *zip(*[(j, b, outdir) for j, b in tasks]))
            )
    else:
        entries = [generate_point(j, b, outdir) for j, b in tasks]

    manifest = {
        "schema": SUITE_SCHEMA,
        "molecules": {},
    }
    for job in selected:
        pts = [e for e in entries if e["molecule"] == job.name]
        manifest["molecules"][job.name] = {
            "basis": job.basis,
            "points": sorted(pts, key=lambda e: e["bond_angstrom"]),
        }
    man_path = os.path.join(outdir, "suite_manifest.json")
    with open(man_path, "w") as f:
        json.dump(manifest, f, indent=1)
        f.write("\n")

    sums = []
    for e in sorted(entries, key=lambda e: e["file"]):
        sums.append(f"{_sha256(os.path.join(outdir, e['file']))}  {e['file']}")
    sums.append(f"{_sha256(man_path)}  suite_manifest.json")
    with open(os.path.join(outdir, "SHA256SUMS"), "w") as f:
        f.write("\n".join(sums) + "\n")
    return manifest
