"""FCIDUMP writer (Molpro conventions, 8-fold real symmetry)."""

from __future__ import annotations

import numpy as np

WRITE_TOL = 1e-12


def write_fcidump(
    path: str,
    core_energy: float,
    h: np.ndarray,
    g: np.ndarray,
    num_electrons: int,
    ms2: int = 0,
) -> None:
    """Write spatial-orbital integrals: H = E0 + h_pq + (pq|rs)/2 terms.

    Indices in the file are 1-based.  Only the canonical representative of
    each 8-fold symmetry class is written.
    """
    n = h.shape[0]
    if h.shape != (n, n) or g.shape != (n, n, n, n):
        raise ValueError("inconsistent integral shapes")
    lines = []
    lines.append(f"&FCI NORB={n},NELEC={num_electrons},MS2={ms2},")
    lines.append(" ORBSYM=" + ",".join(["1"] * n) + ",")
    lines.append(" ISYM=1,")
    lines.append("&END")

    def fmt(val, i, j, k, l):
        return f"{val: .16E} {i:4d} {j:4d} {k:4d} {l:4d}"

    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l in range(k + 1):
                    kl = k * (k + 1) // 2 + l
                    if ij < kl:
                        continue
                    v = g[i, j, k, l]
                    if abs(v) > WRITE_TOL:
                        lines.append(fmt(v, i + 1, j + 1, k + 1, l + 1))
    for i in range(n):
        for j in range(i + 1):
            v = h[i, j]
            if abs(v) > WRITE_TOL:
                lines.append(fmt(v, i + 1, j + 1, 0, 0))
    lines.append(fmt(core_energy, 0, 0, 0, 0))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
