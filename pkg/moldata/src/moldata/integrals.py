"""Molecular integrals over contracted Cartesian Gaussians.

Hermite-expansion (McMurchie-Davidson) recurrences for overlap, kinetic,
nuclear attraction and two-electron repulsion integrals.  Angular momenta
up to p are all the bundled bases need; the recurrences themselves are
general.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma, gammainc

from .basis import ATOMIC_NUMBER, ANGSTROM_TO_BOHR, BasisFunction


def boys(n: int, x: float) -> float:
    """F_n(x) = integral_0^1 t^(2n) exp(-x t^2) dt."""
    if x < 1e-12:
        return 1.0 / (2 * n + 1)
    return gamma(n + 0.5) * gammainc(n + 0.5, x) / (2.0 * x ** (n + 0.5))


def _hermite_coefs(i: int, j: int, a: float, b: float, qx: float) -> np.ndarray:
    """E_t^{ij} for the 1D Gaussian product, t = 0..i+j."""
    p = a + b
    mu = a * b / p
    # E[i, j, t], zero outside 0 <= t <= i+j
    E = np.zeros((i + 1, j + 1, i + j + 2))
    E[0, 0, 0] = np.exp(-mu * qx * qx)
    xpa = -b * qx / p  # Px - Ax with qx = Ax - Bx
    xpb = a * qx / p   # Px - Bx
    for ii in range(1, i + 1):
        for t in range(ii + 1):
            val = xpa * E[ii - 1, 0, t] + (t + 1) * E[ii - 1, 0, t + 1]
            if t > 0:
                val += E[ii - 1, 0, t - 1] / (2 * p)
            E[ii, 0, t] = val
    for ii in range(i + 1):
        for jj in range(1, j + 1):
            for t in range(ii + jj + 1):
                val = xpb * E[ii, jj - 1, t] + (t + 1) * E[ii, jj - 1, t + 1]
                if t > 0:
                    val += E[ii, jj - 1, t - 1] / (2 * p)
                E[ii, jj, t] = val
    return E


def _overlap_1d(i: int, j: int, a: float, b: float, qx: float) -> float:
    return _hermite_coefs(i, j, a, b, qx)[i, j, 0] * np.sqrt(np.pi / (a + b))


def _primitive_overlap(la, lb, a, b, A, B) -> float:
    out = 1.0
    for d in range(3):
        out *= _overlap_1d(la[d], lb[d], a, b, A[d] - B[d])
    return out


def _primitive_kinetic(la, lb, a, b, A, B) -> float:
    # 1D kinetic in terms of shifted overlaps, combined over the three axes
    s = [np.zeros(0)] * 3
    t = [0.0] * 3
    sv = [0.0] * 3
    for d in range(3):
        i, j = la[d], lb[d]
        q = A[d] - B[d]

        def ov(jj):
            if jj < 0:
                return 0.0
            return _overlap_1d(i, jj, a, b, q)

        sv[d] = ov(j)
        t[d] = (
            -2.0 * b * b * ov(j + 2)
            + b * (2 * j + 1) * ov(j)
            - 0.5 * j * (j - 1) * ov(j - 2)
        )
    return t[0] * sv[1] * sv[2] + sv[0] * t[1] * sv[2] + sv[0] * sv[1] * t[2]


def _hermite_integrals(tmax, umax, vmax, p, PC) -> np.ndarray:
    """R_{tuv} auxiliary integrals built from Boys functions."""
    nmax = tmax + umax + vmax
    r2 = PC[0] ** 2 + PC[1] ** 2 + PC[2] ** 2
    F = np.array([boys(n, p * r2) for n in range(nmax + 1)])
    # R[n, t, u, v] built downward in n
    R = np.zeros((nmax + 1, tmax + 1, umax + 1, vmax + 1))
    for n in range(nmax + 1):
        R[n, 0, 0, 0] = (-2.0 * p) ** n * F[n]
    for n in range(nmax - 1, -1, -1):
        for t in range(tmax + 1):
            for u in range(umax + 1):
                for v in range(vmax + 1):
                    if t + u + v == 0 or t + u + v > nmax - n:
                        continue
                    if t > 0:
                        val = PC[0] * R[n + 1, t - 1, u, v]
                        if t > 1:
                            val += (t - 1) * R[n + 1, t - 2, u, v]
                    elif u > 0:
                        val = PC[1] * R[n + 1, t, u - 1, v]
                        if u > 1:
                            val += (u - 1) * R[n + 1, t, u - 2, v]
                    else:
                        val = PC[2] * R[n + 1, t, u, v - 1]
                        if v > 1:
                            val += (v - 1) * R[n + 1, t, u, v - 2]
                    R[n, t, u, v] = val
    return R[0]


def _primitive_nuclear(la, lb, a, b, A, B, C) -> float:
    p = a + b
    P = (a * np.asarray(A) + b * np.asarray(B)) / p
    Ex = _hermite_coefs(la[0], lb[0], a, b, A[0] - B[0])[la[0], lb[0]]
    Ey = _hermite_coefs(la[1], lb[1], a, b, A[1] - B[1])[la[1], lb[1]]
    Ez = _hermite_coefs(la[2], lb[2], a, b, A[2] - B[2])[la[2], lb[2]]
    tmax = la[0] + lb[0]
    umax = la[1] + lb[1]
    vmax = la[2] + lb[2]
    R = _hermite_integrals(tmax, umax, vmax, p, P - np.asarray(C))
    val = 0.0
    for t in range(tmax + 1):
        for u in range(umax + 1):
            for v in range(vmax + 1):
                val += Ex[t] * Ey[u] * Ez[v] * R[t, u, v]
    return 2.0 * np.pi / p * val


def _primitive_eri(la, lb, lc, ld, a, b, c, d, A, B, C, D) -> float:
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    P = (a * np.asarray(A) + b * np.asarray(B)) / p
    Q = (c * np.asarray(C) + d * np.asarray(D)) / q
    E1 = [
        _hermite_coefs(la[k], lb[k], a, b, A[k] - B[k])[la[k], lb[k]]
        for k in range(3)
    ]
    E2 = [
        _hermite_coefs(lc[k], ld[k], c, d, C[k] - D[k])[lc[k], ld[k]]
        for k in range(3)
    ]
    t1 = la[0] + lb[0]
    u1 = la[1] + lb[1]
    v1 = la[2] + lb[2]
    t2 = lc[0] + ld[0]
    u2 = lc[1] + ld[1]
    v2 = lc[2] + ld[2]
    R = _hermite_integrals(t1 + t2, u1 + u2, v1 + v2, alpha, P - Q)
    val = 0.0
    for t in range(t1 + 1):
        for u in range(u1 + 1):
            for v in range(v1 + 1):
                e1 = E1[0][t] * E1[1][u] * E1[2][v]
                if e1 == 0.0:
                    continue
                for tt in range(t2 + 1):
                    for uu in range(u2 + 1):
                        for vv in range(v2 + 1):
                            e2 = E2[0][tt] * E2[1][uu] * E2[2][vv]
                            if e2 == 0.0:
                                continue
                            sign = (-1.0) ** (tt + uu + vv)
                            val += e1 * e2 * sign * R[t + tt, u + uu, v + vv]
    return val * 2.0 * np.pi ** 2.5 / (p * q * np.sqrt(p + q))


def _contract2(fa: BasisFunction, fb: BasisFunction, kernel) -> float:
    out = 0.0
    for a, ca in zip(fa.exponents, fa.coefficients):
        for b, cb in zip(fb.exponents, fb.coefficients):
            out += ca * cb * kernel(a, b)
    return out


def overlap_contracted(fa: BasisFunction, fb: BasisFunction) -> float:
    return _contract2(
        fa, fb,
        lambda a, b: _primitive_overlap(fa.powers, fb.powers, a, b, fa.center, fb.center),
    )


def kinetic_contracted(fa: BasisFunction, fb: BasisFunction) -> float:
    return _contract2(
        fa, fb,
        lambda a, b: _primitive_kinetic(fa.powers, fb.powers, a, b, fa.center, fb.center),
    )


def nuclear_contracted(fa, fb, charge_centers) -> float:
    out = 0.0
    for Z, C in charge_centers:
        out += -Z * _contract2(
            fa, fb,
            lambda a, b: _primitive_nuclear(
                fa.powers, fb.powers, a, b, fa.center, fb.center, C
            ),
        )
    return out


def eri_contracted(fa, fb, fc, fd) -> float:
    out = 0.0
    for a, ca in zip(fa.exponents, fa.coefficients):
        for b, cb in zip(fb.exponents, fb.coefficients):
            for c, cc in zip(fc.exponents, fc.coefficients):
                for d, cd in zip(fd.exponents, fd.coefficients):
                    out += ca * cb * cc * cd * _primitive_eri(
                        fa.powers, fb.powers, fc.powers, fd.powers,
                        a, b, c, d,
                        fa.center, fb.center, fc.center, fd.center,
                    )
    return out


def overlap_matrix(basis: list[BasisFunction]) -> np.ndarray:
    n = len(basis)
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            S[i, j] = S[j, i] = overlap_contracted(basis[i], basis[j])
    return S


def kinetic_matrix(basis: list[BasisFunction]) -> np.ndarray:
    n = len(basis)
    T = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            T[i, j] = T[j, i] = kinetic_contracted(basis[i], basis[j])
    return T


def nuclear_matrix(basis, symbols, coords_angstrom) -> np.ndarray:
    coords = np.asarray(coords_angstrom, dtype=float) * ANGSTROM_TO_BOHR
    centers = [(ATOMIC_NUMBER[s], c) for s, c in zip(symbols, coords)]
    n = len(basis)
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            V[i, j] = V[j, i] = nuclear_contracted(basis[i], basis[j], centers)
    return V


def eri_tensor(basis: list[BasisFunction]) -> np.ndarray:
    """Chemist-notation (ij|kl) with full 8-fold permutational symmetry."""
    n = len(basis)
    eri = np.zeros((n, n, n, n))
    done = np.zeros((n, n, n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if (i * (i + 1) // 2 + j) < (k * (k + 1) // 2 + l):
                        continue
                    if done[i, j, k, l]:
                        continue
                    v = eri_contracted(basis[i], basis[j], basis[k], basis[l])
                    for (p, q, r, s) in (
                        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
                    ):
                        eri[p, q, r, s] = v
                        done[p, q, r, s] = True
    return eri
