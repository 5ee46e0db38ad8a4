"""Integral engine checks against independent quadrature oracles.

Gauss-Hermite quadrature is exact for polynomial-times-Gaussian
integrands, so overlap/kinetic oracles are exact up to roundoff.  The
1/r factors are lifted with a Gaussian-transform outer integral handled
by adaptive quadrature.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from moldata.basis import BasisFunction, build_basis
from moldata.integrals import (
    _primitive_eri,
    _primitive_kinetic,
    _primitive_nuclear,
    _primitive_overlap,
    boys,
    eri_tensor,
    kinetic_matrix,
    nuclear_matrix,
    overlap_matrix,
)

GH_X, GH_W = np.polynomial.hermite.hermgauss(10)


def eval_prim(powers, a, A, pts):
    d = pts - np.asarray(A)
    out = np.exp(-a * np.sum(d * d, axis=1))
    for k in range(3):
        out = out * d[:, k] ** powers[k]
    return out


def grad_prim(powers, a, A, pts):
    d = pts - np.asarray(A)
    base = eval_prim(powers, a, A, pts)
    g = np.zeros((len(pts), 3))
    for k in range(3):
        term = -2 * a * d[:, k] * base
        if powers[k] > 0:
            lowered = list(powers)
            lowered[k] -= 1
            term = term + powers[k] * eval_prim(tuple(lowered), a, A, pts)
        g[:, k] = term
    return g


def product_grid(p, P):
    """Nodes/weights integrating poly * exp(-p|r-P|^2) exactly."""
    s = 1.0 / np.sqrt(p)
    xi, xj, xk = np.meshgrid(GH_X, GH_X, GH_X, indexing="ij")
    pts = P + s * np.stack([xi.ravel(), xj.ravel(), xk.ravel()], axis=1)
    wts = (GH_W[:, None, None] * GH_W[None, :, None] * GH_W[None, None, :]).ravel()
    wts = wts * s**3 * np.exp(np.sum((pts - P) ** 2, axis=1) * p)
    return pts, wts


CASES = [
    ((0, 0, 0), (0, 0, 0)),
    ((1, 0, 0), (0, 0, 0)),
    ((1, 0, 0), (0, 1, 0)),
    ((0, 0, 1), (0, 0, 1)),
    ((0, 1, 0), (0, 1, 0)),
]
A = np.array([0.1, -0.3, 0.25])
B = np.array([-0.4, 0.2, 0.6])
C = np.array([0.3, 0.1, -0.5])
EXP_A, EXP_B = 0.9, 0.55


@pytest.mark.parametrize("la,lb", CASES)
def test_overlap_vs_quadrature(la, lb):
    p = EXP_A + EXP_B
    P = (EXP_A * A + EXP_B * B) / p
    pts, wts = product_grid(p, P)
    want = np.sum(wts * eval_prim(la, EXP_A, A, pts) * eval_prim(lb, EXP_B, B, pts))
    got = _primitive_overlap(la, lb, EXP_A, EXP_B, A, B)
    assert got == pytest.approx(want, abs=1e-13)


@pytest.mark.parametrize("la,lb", CASES)
def test_kinetic_vs_quadrature(la, lb):
    # integration by parts: <a|-laplacian/2|b> = (1/2) int grad(a).grad(b)
    p = EXP_A + EXP_B
    P = (EXP_A * A + EXP_B * B) / p
    pts, wts = product_grid(p, P)
    ga = grad_prim(la, EXP_A, A, pts)
    gb = grad_prim(lb, EXP_B, B, pts)
    want = 0.5 * np.sum(wts * np.sum(ga * gb, axis=1))
    got = _primitive_kinetic(la, lb, EXP_A, EXP_B, A, B)
    assert got == pytest.approx(want, abs=1e-13)


@pytest.mark.parametrize("la,lb", CASES)
def test_nuclear_vs_gaussian_transform(la, lb):
    # 1/|r-C| = (2/sqrt(pi)) int_0^inf exp(-s^2|r-C|^2) ds
    def inner(s2):
        p = EXP_A + EXP_B + s2
        P = (EXP_A * A + EXP_B * B + s2 * C) / p
        pts, wts = product_grid(p, P)
        vals = (
            eval_prim(la, EXP_A, A, pts)
            * eval_prim(lb, EXP_B, B, pts)
            * np.exp(-s2 * np.sum((pts - C) ** 2, axis=1))
        )
        return np.sum(wts * vals)

    v, _ = quad(
        lambda t: inner((t / (1 - t)) ** 2) / (1 - t) ** 2,
        0, 1, limit=100, epsabs=1e-11, epsrel=1e-11,
    )
    want = 2.0 / np.sqrt(np.pi) * v
    got = _primitive_nuclear(la, lb, EXP_A, EXP_B, A, B, C)
    assert got == pytest.approx(want, abs=1e-9)


ERI_CASES = [
    ((0, 0, 0), (0, 0, 0), (0, 0, 0), (0, 0, 0)),
    ((1, 0, 0), (0, 0, 0), (0, 0, 0), (0, 0, 0)),
    ((1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)),
    ((0, 0, 1), (0, 0, 1), (1, 0, 0), (1, 0, 0)),
]


@pytest.mark.parametrize("la,lb,lc,ld", ERI_CASES)
def test_eri_vs_gaussian_transform(la, lb, lc, ld):
    rng = np.random.default_rng(3)
    cA, cB, cC, cD = (rng.normal(size=3) * 0.5 for _ in range(4))
    a, b, c, d = 0.8, 0.5, 1.1, 0.65

    def inner(s2):
        # the two electron coordinates couple only through s2; per axis the
        # quadratic form diagonalizes into two Gauss-Hermite directions
        total = 1.0
        for ax in range(3):
            M = np.array([[a + b + s2, -s2], [-s2, c + d + s2]])
            evals, evecs = np.linalg.eigh(M)
            rhs = np.array([a * cA[ax] + b * cB[ax], c * cC[ax] + d * cD[ax]])
            mu = np.linalg.solve(M, rhs)
            const = (
                a * cA[ax] ** 2 + b * cB[ax] ** 2
                + c * cC[ax] ** 2 + d * cD[ax] ** 2 - rhs @ mu
            )
            y1 = GH_X[:, None] / np.sqrt(evals[0])
            y2 = GH_X[None, :] / np.sqrt(evals[1])
            x1 = mu[0] + evecs[0, 0] * y1 + evecs[0, 1] * y2
            x2 = mu[1] + evecs[1, 0] * y1 + evecs[1, 1] * y2
            poly = (
                (x1 - cA[ax]) ** la[ax] * (x1 - cB[ax]) ** lb[ax]
                * (x2 - cC[ax]) ** lc[ax] * (x2 - cD[ax]) ** ld[ax]
            )
            acc = np.sum(GH_W[:, None] * GH_W[None, :] * poly)
            total *= acc / np.sqrt(evals[0] * evals[1]) * np.exp(-const)
        return total

    v, _ = quad(
        lambda t: inner((t / (1 - t)) ** 2) / (1 - t) ** 2,
        0, 1, limit=200, epsabs=1e-12, epsrel=1e-12,
    )
    want = 2.0 / np.sqrt(np.pi) * v
    got = _primitive_eri(la, lb, lc, ld, a, b, c, d, cA, cB, cC, cD)
    assert got == pytest.approx(want, abs=1e-10)


def test_boys_small_x_limit():
    assert boys(0, 0.0) == pytest.approx(1.0)
    assert boys(3, 0.0) == pytest.approx(1.0 / 7.0)
    # F_0(x) = sqrt(pi/(4x)) erf(sqrt(x))
    from scipy.special import erf

    x = 0.8
    assert boys(0, x) == pytest.approx(
        np.sqrt(np.pi / (4 * x)) * erf(np.sqrt(x)), abs=1e-14
    )


def test_h2_sto3g_textbook_values():
    # Szabo & Ostlund Sec. 3.5 tabulated values at R = 1.4 bohr
    r_ang = 1.4 / 1.8897259886
    syms = ["H", "H"]
    coords = np.array([(0, 0, 0), (0, 0, r_ang)])
    b = build_basis(syms, coords, "sto-3g")
    S = overlap_matrix(b)
    T = kinetic_matrix(b)
    eri = eri_tensor(b)
    assert S[0, 0] == pytest.approx(1.0, abs=1e-10)
    assert S[0, 1] == pytest.approx(0.6593, abs=2e-4)
    assert T[0, 0] == pytest.approx(0.7600, abs=2e-4)
    assert T[0, 1] == pytest.approx(0.2365, abs=2e-4)
    assert eri[0, 0, 0, 0] == pytest.approx(0.7746, abs=2e-4)
    assert eri[0, 0, 1, 1] == pytest.approx(0.5697, abs=2e-4)
    assert eri[0, 1, 0, 1] == pytest.approx(0.2970, abs=2e-4)
    assert eri[0, 0, 0, 1] == pytest.approx(0.4441, abs=2e-4)


def test_eri_eightfold_symmetry():
    b = build_basis(
        ["Li", "H"], np.array([(0, 0, 0), (0, 0, 1.2)]), "sto-3g"
    )
    eri = eri_tensor(b)
    assert np.allclose(eri, eri.transpose(1, 0, 2, 3), atol=1e-12)
    assert np.allclose(eri, eri.transpose(0, 1, 3, 2), atol=1e-12)
    assert np.allclose(eri, eri.transpose(2, 3, 0, 1), atol=1e-12)


def test_overlap_positive_definite():
    b = build_basis(
        ["H", "Be", "H"],
        np.array([(0, 0, -1.3), (0, 0, 0), (0, 0, 1.3)]),
        "sto-3g",
    )
    S = overlap_matrix(b)
    assert np.all(np.diag(S) == pytest.approx(1.0, abs=1e-10))
    assert np.linalg.eigvalsh(S).min() > 0
