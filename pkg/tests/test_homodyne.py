"""Kernel identities and sampler unbiasedness checked against direct integrals."""

import io
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import eval_genlaguerre

from bscvqe import homodyne as hd
from bscvqe.fermion import LadderTermSum
from bscvqe.fock import BosonState, basis_state, build_sector


# --- oracle: kernel as a characteristic-function integral ----------------
# K(n, lam, phi, x) = int dr |r|/4 e^{-i r x} <n| D(i r e^{i phi}/2) |n+lam>


def _displacement_element(a, b, g):
    g = np.asarray(g, dtype=complex)
    if a >= b:
        return (
            np.sqrt(math.factorial(b) / math.factorial(a))
            * g ** (a - b)
            * np.exp(-np.abs(g) ** 2 / 2)
            * eval_genlaguerre(b, a - b, np.abs(g) ** 2)
        )
    return (
        np.sqrt(math.factorial(a) / math.factorial(b))
        * (-np.conj(g)) ** (b - a)
        * np.exp(-np.abs(g) ** 2 / 2)
        * eval_genlaguerre(a, b - a, np.abs(g) ** 2)
    )


def kernel_oracle(n, lam, phi, x, r_max=40.0, points=200001):
    r = np.linspace(-r_max, r_max, points)
    g = 1j * r * np.exp(1j * phi) / 2
    integrand = np.abs(r) / 4 * np.exp(-1j * r * x) * _displacement_element(n, n + lam, g)
    return trapezoid(integrand, r)


@pytest.mark.parametrize(
    "n,lam",
    [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)],
)
def test_kernel_closed_form_matches_integral_oracle(n, lam):
    for phi, x in [(0.3, 0.7), (1.1, -0.4), (2.0, 1.9)]:
        closed = complex(np.asarray(hd.kernel_transition(n, lam, phi, x), dtype=complex))
        oracle = kernel_oracle(n, lam, phi, x)
        assert abs(closed - oracle) < 1e-6


def test_kernel_symbols_consistent_with_transition_form():
    phi, x = 0.7, -0.9
    kp = hd.kernel("+", phi, x)
    assert kp == pytest.approx(complex(np.asarray(hd.kernel_transition(0, 1, phi, x), complex)))
    assert hd.kernel("-", phi, x) == pytest.approx(np.conj(kp))
    kz = hd.kernel("z", phi, x)
    assert kz == pytest.approx(hd.kernel("0", phi, x) - hd.kernel("1", phi, x))
    assert hd.kernel("i", phi, x) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        hd.kernel("x", phi, x)


def test_certified_ranges_hold_on_dense_grid():
    cert = hd.certify_kernels(400001)
    assert cert["offdiag_ok"]
    assert cert["z_ok"]
    assert cert["offdiag_max_abs"] > 2.0  # the bound is tight, not slack
    lo, hi = cert["z_range"]
    assert hi == pytest.approx(4.0, abs=1e-6)


# --- quadrature density ---------------------------------------------------


def test_vacuum_density_is_quarter_variance_gaussian():
    dens = hd.QuadratureDensity(np.array([1.0, 0.0]), [0.0])
    x = np.linspace(-6, 6, 4001)
    p = dens(x)
    assert trapezoid(p, x) == pytest.approx(1.0, abs=1e-9)
    assert trapezoid(x * x * p, x) == pytest.approx(0.25, abs=1e-9)


def test_superposition_mean_rotates_with_phase():
    # (|0> + |1>)/sqrt(2) has <X_phi> = cos(phi)/2
    x = np.linspace(-6, 6, 4001)
    for phi in [0.0, 0.9, np.pi / 2, 2.4]:
        dens = hd.QuadratureDensity(np.array([1.0, 1.0]) / np.sqrt(2), [phi])
        p = dens(x)
        assert trapezoid(p, x) == pytest.approx(1.0, abs=1e-8)
        assert trapezoid(x * p, x) == pytest.approx(np.cos(phi) / 2, abs=1e-8)


def test_two_mode_density_normalizes():
    rng = np.random.default_rng(3)
    amp = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    dens = hd.QuadratureDensity(amp, [0.4, 1.3])
    x = np.linspace(-5.5, 5.5, 401)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    p = dens(xx, yy)
    total = trapezoid(trapezoid(p, x, axis=1), x)
    assert total == pytest.approx(1.0, abs=1e-6)


def _kernel_phase_average(amplitudes, symbol, phi_points=64, x_points=2001):
    """Grid integral of density times kernel over phase and quadrature."""
    xs = np.linspace(-8, 8, x_points)
    phis = (np.arange(phi_points) + 0.5) * np.pi / phi_points
    acc = 0.0 + 0.0j
    for phi in phis:
        dens = hd.QuadratureDensity(amplitudes, [phi])
        p = dens(xs)
        k = hd.kernel(symbol, phi, xs)
        acc += trapezoid(p * k, xs) / phi_points
    return acc


@pytest.mark.parametrize("seed", range(3))
def test_kernel_identity_reproduces_matrix_elements(seed):
    # averaging kernel against the outcome density returns Tr(rho A) to 1e-3
    rng = np.random.default_rng(40 + seed)
    amp = rng.normal(size=4) + 1j * rng.normal(size=4)
    amp /= np.linalg.norm(amp)
    rho = np.outer(amp, amp.conj())
    targets = {
        "+": rho[0, 1],  # Tr(rho |1><0|)
        "0": rho[0, 0],
        "1": rho[1, 1],
        "z": rho[0, 0] - rho[1, 1],
    }
    for sym, want in targets.items():
        got = _kernel_phase_average(amp, sym)
        assert abs(got - want) < 1e-3


def test_phase_average_vanishes_without_coherence():
    # Fock state |1>: no number coherence, so the transition kernel averages to zero
    amp = np.array([0.0, 1.0, 0.0])
    got = _kernel_phase_average(amp, "+")
    assert abs(got) < 1e-3


# --- exact expectation with zero-embedded symbols -------------------------


def _embedded_matrix(symbol, dim):
    m = np.zeros((dim, dim), dtype=complex)
    if symbol == "i":
        m[0, 0] = m[1, 1] = 1.0
    elif symbol == "z":
        m[0, 0], m[1, 1] = 1.0, -1.0
    elif symbol == "0":
        m[0, 0] = 1.0
    elif symbol == "1":
        m[1, 1] = 1.0
    elif symbol == "+":
        m[1, 0] = 1.0
    elif symbol == "-":
        m[0, 1] = 1.0
    return m


def dense_embedded(op, sector):
    dim = sector.num_photons + 1
    size = len(sector)
    out = np.zeros((size, size), dtype=complex)
    for key, coeff in op.terms.items():
        mats = [_embedded_matrix(s, dim) for s in key]
        for i, occ_i in enumerate(sector.states):
            for j, occ_j in enumerate(sector.states):
                val = coeff
                for p in range(sector.num_modes):
                    val = val * mats[p][occ_i[p], occ_j[p]]
                    if val == 0:
                        break
                out[i, j] += val
    return out


def _random_hermitian_ladder(rng, num_modes, keys):
    op = LadderTermSum(num_modes)
    for key in keys:
        c = complex(rng.normal(), rng.normal())
        partner = key.translate(str.maketrans("+-", "-+"))
        if partner == key:
            op.add_term(key, complex(c.real, 0.0))
        else:
            op.add_term(key, c)
            op.add_term(partner, np.conj(c))
    return op


@pytest.mark.parametrize("seed", range(4))
def test_exact_expectation_matches_dense_embedding(seed):
    rng = np.random.default_rng(70 + seed)
    sector = build_sector(3, 2)
    amp = rng.normal(size=len(sector)) + 1j * rng.normal(size=len(sector))
    amp /= np.linalg.norm(amp)
    state = BosonState(sector, amp)
    op = _random_hermitian_ladder(rng, 3, ["+-i", "z1i", "iii", "0z+", "zzz"])
    want = float(np.real(amp.conj() @ dense_embedded(op, sector) @ amp))
    assert hd.exact_expectation(state, op) == pytest.approx(want, abs=1e-12)


def test_all_identity_string_measures_encoded_weight():
    # amplitude on a doubly occupied mode must not count toward the identity string
    sector = build_sector(2, 2)
    amp = np.zeros(len(sector), dtype=complex)
    amp[sector.position((1, 1))] = np.sqrt(0.7)
    amp[sector.position((2, 0))] = np.sqrt(0.3)
    state = BosonState(sector, amp)
    op = LadderTermSum(2)
    op.add_term("ii", 1.0)
    assert hd.exact_expectation(state, op) == pytest.approx(0.7, abs=1e-12)


def test_exact_expectation_rejects_non_hermitian_sum():
    sector = build_sector(2, 1)
    state = basis_state(sector, (1, 0))
    op = LadderTermSum(2)
    op.add_term("-+", 1.0 + 0.5j)
    state = BosonState(sector, np.array([1.0, 1.0]) / np.sqrt(2))
    with pytest.raises(ValueError):
        hd.exact_expectation(state, op)


# --- term grouping --------------------------------------------------------


def test_hermitian_grouping_merges_partners():
    op = LadderTermSum(3)
    op.add_term("+-i", 0.3 - 0.2j)
    op.add_term("-+i", 0.3 + 0.2j)
    op.add_term("z0i", 0.5)
    groups = hd.group_hermitian_terms(op)
    assert len(groups) == 2
    by_key = {g.key: g for g in groups}
    assert by_key["+-i"].weight == 2
    assert by_key["z0i"].weight == 1
    assert by_key["+-i"].off_modes == (0, 1)
    assert by_key["z0i"].diag_modes == (0, 1, 2)


def test_grouping_rejects_missing_partner():
    op = LadderTermSum(2)
    op.add_term("+i", 1.0)
    with pytest.raises(ValueError):
        hd.group_hermitian_terms(op)


def test_grouping_rejects_complex_diagonal_weight():
    op = LadderTermSum(2)
    op.add_term("zi", 1.0 + 0.3j)
    with pytest.raises(ValueError):
        hd.group_hermitian_terms(op)


# --- sampling -------------------------------------------------------------


def _random_state(rng, num_modes, num_photons):
    sector = build_sector(num_modes, num_photons)
    amp = rng.normal(size=len(sector)) + 1j * rng.normal(size=len(sector))
    amp /= np.linalg.norm(amp)
    return BosonState(sector, amp)


def test_shot_values_respect_kernel_range_product():
    rng = np.random.default_rng(11)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["+z-", "-z+"])
    (group,) = hd.group_hermitian_terms(op)
    sampler = hd.StateSampler(state)
    values, _ = sampler.sample_group(group, 20000, np.random.default_rng(0))
    cap = group.weight * abs(group.coefficient) * hd.OFFDIAG_KERNEL_BOUND**2
    assert np.max(np.abs(values)) <= cap + 1e-9
    assert values.var() <= cap**2


@pytest.mark.parametrize("seed", range(3))
def test_sampled_group_means_are_unbiased(seed):
    rng = np.random.default_rng(200 + seed)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["+-i", "z1i", "iii", "0z+"])
    sampler = hd.StateSampler(state)
    shots = 100_000
    total = 0.0
    se_sq = 0.0
    for group in hd.group_hermitian_terms(op):
        values, _ = sampler.sample_group(group, shots, np.random.default_rng(seed * 17 + 3))
        pair = LadderTermSum(3)
        pair.add_term(group.key, group.coefficient)
        if group.weight == 2:
            partner = group.key.translate(str.maketrans("+-", "-+"))
            pair.add_term(partner, np.conj(group.coefficient))
        want = hd.exact_expectation(state, pair)
        se = values.std(ddof=1) / np.sqrt(shots)
        assert abs(values.mean() - want) < 5 * max(se, 1e-12)
        total += values.mean()
        se_sq += se * se
    want_total = hd.exact_expectation(state, op)
    assert abs(total - want_total) < 5 * np.sqrt(se_sq)


def test_sampling_on_basis_state_gives_exact_diagonal_values():
    # photon counts on a basis state are deterministic, so diagonal strings too
    state = basis_state(build_sector(3, 2), (1, 1, 0))
    op = LadderTermSum(3)
    op.add_term("zz0", 0.8)
    (group,) = hd.group_hermitian_terms(op)
    sampler = hd.StateSampler(state)
    values, _ = sampler.sample_group(group, 64, np.random.default_rng(1))
    assert np.all(values == pytest.approx(0.8))  # (-1)(-1)(+1) * 0.8


def test_transition_estimate_vanishes_on_number_basis_state():
    state = basis_state(build_sector(2, 1), (1, 0))
    op = LadderTermSum(2)
    op.add_term("+-", 1.0)
    op.add_term("-+", 1.0)
    (group,) = hd.group_hermitian_terms(op)
    values, _ = hd.StateSampler(state).sample_group(
        group, 50_000, np.random.default_rng(5)
    )
    se = values.std(ddof=1) / np.sqrt(len(values))
    assert hd.exact_expectation(state, op) == pytest.approx(0.0, abs=1e-12)
    assert abs(values.mean()) < 5 * se


def test_shot_records_carry_phases_and_quadratures():
    rng = np.random.default_rng(9)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["+-i"])
    (group,) = hd.group_hermitian_terms(op)
    sampler = hd.StateSampler(state)
    values, records = sampler.sample_group(
        group, 50, np.random.default_rng(2), collect_records=True
    )
    assert len(records) == 50
    for rec, val in zip(records, values):
        assert rec.term_key == "+-i"
        assert len(rec.diagonal_counts) == 1  # mode 2 only
        assert len(rec.phases) == 2
        assert all(0.0 <= p < np.pi for p in rec.phases)
        assert np.isfinite(rec.value)
        assert rec.value == pytest.approx(float(val))


def test_csv_export_round_trips_header_and_rows():
    rng = np.random.default_rng(9)
    state = _random_state(rng, 2, 1)
    rec = hd.sample_term_shot(state, _random_hermitian_ladder(rng, 2, ["+-"]), "+-", np.random.default_rng(0))
    text = hd.shot_records_to_csv([rec])
    lines = text.strip().split("\n")
    assert lines[0] == "term_id,diagonal_outcomes,phases,quadratures,value"
    assert len(lines) == 2
    assert lines[1].startswith("+-,")


# --- full estimator -------------------------------------------------------


def test_estimator_is_deterministic_under_fixed_seed():
    rng = np.random.default_rng(21)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["+-i", "z1i", "iii"])
    a = hd.estimate_energy(state, op, None, 4000, 2000, seed=77)
    b = hd.estimate_energy(state, op, None, 4000, 2000, seed=77)
    assert a.mean == b.mean
    assert a.numerator == b.numerator
    assert a.projection_ratio_estimate == b.projection_ratio_estimate
    c = hd.estimate_energy(state, op, None, 4000, 2000, seed=78)
    assert c.mean != a.mean


@pytest.mark.parametrize("seed", range(3))
def test_estimator_unbiased_within_five_standard_errors(seed):
    rng = np.random.default_rng(300 + seed)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["+-i", "z1i", "iii", "0z+"])
    report = hd.estimate_energy(state, op, None, 100_000, 50_000, seed=seed)
    from bscvqe.fock import projection_ratio

    want = hd.exact_expectation(state, op) / projection_ratio(state)
    se = np.sqrt(report.empirical_variance)
    assert abs(report.mean - want) < 5 * se
    assert report.variance_bound >= 0.0
    assert report.bias_bound >= 0.0
    # analytic bound dominates the observed variance (factor-2 slack)
    assert report.empirical_variance <= 2.0 * report.variance_bound


def test_projector_metric_matches_counting_metric():
    # the all-identity string is the encoded projector, so both paths agree
    rng = np.random.default_rng(31)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["z1i", "iii"])
    metric = LadderTermSum(3)
    metric.add_term("iii", 1.0)
    a = hd.estimate_energy(state, op, None, 40_000, 40_000, seed=4)
    b = hd.estimate_energy(state, op, metric, 40_000, 40_000, seed=4)
    se = np.sqrt(a.empirical_variance + b.empirical_variance)
    assert abs(a.mean - b.mean) < 5 * max(se, 1e-12)


def test_constant_shifts_mean_only():
    rng = np.random.default_rng(41)
    state = _random_state(rng, 2, 1)
    op = _random_hermitian_ladder(rng, 2, ["z0", "ii"])
    plain = hd.estimate_energy(state, op, None, 2000, 2000, seed=9)
    shifted = hd.estimate_energy(state, op, None, 2000, 2000, seed=9, constant=1.5)
    assert shifted.mean == pytest.approx(plain.mean + 1.5)
    assert shifted.variance_bound == plain.variance_bound


def test_vanishing_projection_signals_unreliable_estimate():
    sector = build_sector(2, 2)
    amp = np.zeros(len(sector), dtype=complex)
    amp[sector.position((2, 0))] = 1.0  # nothing in the encoded subspace
    state = BosonState(sector, amp)
    op = LadderTermSum(2)
    op.add_term("ii", 1.0)
    with pytest.raises(hd.UnreliableEstimateError):
        hd.estimate_energy(state, op, None, 1000, 1000, seed=0)


def test_budget_below_term_count_rejected():
    rng = np.random.default_rng(51)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["+-i", "z1i", "iii"])
    with pytest.raises(ValueError):
        hd.estimate_energy(state, op, None, 2, 1000, seed=0)


def test_shard_merge_equals_pooled_ratio():
    rng = np.random.default_rng(61)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["+-i", "iii"])
    r1 = hd.estimate_energy(state, op, None, 10_000, 5_000, seed=1)
    r2 = hd.estimate_energy(state, op, None, 10_000, 5_000, seed=2)
    merged = hd.merge_reports([r1, r2])
    num = (r1.numerator + r2.numerator) / 2
    den = (r1.denominator + r2.denominator) / 2
    assert merged.mean == pytest.approx(num / den, abs=1e-12)
    assert merged.projection_ratio_shots == 10_000


def test_seed_streams_differ_between_terms():
    # same per-term budget, different strings: streams must not collide
    rng = np.random.default_rng(71)
    state = _random_state(rng, 3, 2)
    op = _random_hermitian_ladder(rng, 3, ["z1i", "1zi"])
    report = hd.estimate_energy(state, op, None, 2000, 1000, seed=13, collect_records=True)
    per_term = {}
    for rec in report.records:
        per_term.setdefault(rec.term_key, []).append(rec.diagonal_counts)
    keys = list(per_term)
    assert len(keys) == 2
    assert per_term[keys[0]] != per_term[keys[1]]
