"""Hybrid photon-count + homodyne estimation of ladder-term expectations.

Diagonal symbols (I, Z, P0, P1) are read off photon counts; transition
symbols are estimated with phase-averaged quadrature kernels.  All symbol
matrices act zero outside the zero/one-photon block of each mode, so the
all-identity string measures the encoded-subspace projector rather than 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermval
from scipy.integrate import cumulative_trapezoid
from scipy.special import wofz

from .fermion import LadderTermSum
from .fock import BosonState

# certified enclosure of the transition-kernel real part
OFFDIAG_KERNEL_BOUND = 2.07317
# certified enclosure of the occupation-difference kernel (P0 - P1)
Z_KERNEL_RANGE = (-2.92345, 5.33333)
CHI_FLOOR = 0.05

GRID_POINTS = 4096
HERMITICITY_TOL = 1e-10


class UnreliableEstimateError(RuntimeError):
    """Denominator estimate too small to form a trustworthy ratio."""


def g_functions(x, mmax: int) -> np.ndarray:
    """Stack of damped parabolic-cylinder values, shape (mmax+1, *x.shape).

    g_m(x) = exp(-x^2) D_{-m}(-2ix), seeded by g_0 = 1 and
    g_1 = sqrt(pi/2) w(sqrt(2) x) with w the Faddeeva function, then the
    downward order recurrence D_{nu-1} = (z D_nu - D_{nu+1}) / nu.
    """
    x = np.asarray(x, dtype=float)
    z = -2j * x
    g = np.zeros((mmax + 1,) + x.shape, dtype=complex)
    g[0] = 1.0
    if mmax >= 1:
        g[1] = np.sqrt(np.pi / 2) * wofz(np.sqrt(2) * x)
    for m in range(1, mmax):
        g[m + 1] = (z * g[m] - g[m - 1]) / (-m)
    return g


def kernel_transition(n: int, lam: int, phi, x):
    """Kernel whose phase-and-quadrature average gives Tr(rho |n+lam><n|)."""
    if n < 0 or lam < 0:
        raise ValueError("n and lam must be nonnegative")
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    g = g_functions(x, 2 * n + lam + 2)
    s = np.zeros_like(x)
    for nu in range(n + 1):
        s = s + (
            (-1.0) ** nu / math.factorial(nu)
            * math.comb(n + lam, n - nu)
            * math.factorial(2 * nu + lam + 1)
            * np.real((-1j) ** lam * g[2 * nu + lam + 2])
        )
    pref = 2.0 * np.sqrt(math.factorial(n) / math.factorial(n + lam))
    return pref * np.exp(-1j * lam * phi) * s


def kernel(symbol: str, phi, x):
    """Pattern function for one single-rail symbol.

    '+' targets |1><0|, '-' its adjoint, '0'/'1' the occupation
    projectors, 'z' their difference, 'i' the constant 1.
    """
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    if symbol == "i":
        return np.ones(np.broadcast(phi, x).shape, dtype=complex)
    if symbol == "+":
        return kernel_transition(0, 1, phi, x)
    if symbol == "-":
        return np.conj(kernel_transition(0, 1, phi, x))
    if symbol == "0":
        return kernel_transition(0, 0, phi, x).astype(complex)
    if symbol == "1":
        return kernel_transition(1, 0, phi, x).astype(complex)
    if symbol == "z":
        kz = kernel_transition(0, 0, phi, x) - kernel_transition(1, 0, phi, x)
        return kz.astype(complex)
    raise ValueError(f"unsupported symbol {symbol!r}")


def certify_kernels(num_points: int = 1_000_000, x_max: float = 10.0) -> dict:
    """Scan kernel ranges on a dense grid against the certified enclosures.

    The transition kernel is 2 e^{-i phi} s(x) with s real, so its real
    part over all phases is enveloped by the phi=0 values; the occupation
    kernels carry no phase at all.
    """
    x = np.linspace(-x_max, x_max, num_points)
    k_plus = kernel_transition(0, 1, 0.0, x).real
    k_p0 = kernel_transition(0, 0, 0.0, x).real
    k_p1 = kernel_transition(1, 0, 0.0, x).real
    k_z = k_p0 - k_p1
    off_max = float(np.max(np.abs(k_plus)))
    z_lo, z_hi = float(k_z.min()), float(k_z.max())
    return {
        "offdiag_max_abs": off_max,
        "offdiag_certified": OFFDIAG_KERNEL_BOUND,
        "offdiag_ok": off_max <= OFFDIAG_KERNEL_BOUND,
        "z_range": (z_lo, z_hi),
        "z_certified": Z_KERNEL_RANGE,
        "z_ok": Z_KERNEL_RANGE[0] <= z_lo and z_hi <= Z_KERNEL_RANGE[1],
        "p0_range": (float(k_p0.min()), float(k_p0.max())),
        "p1_range": (float(k_p1.min()), float(k_p1.max())),
        "num_points": num_points,
    }


def quadrature_wavefunction(n: int, x) -> np.ndarray:
    """<x|n> for the quadrature X = (b dag e^{i phi} + b e^{-i phi})/2 at phi=0.

    Vacuum variance is 1/4 under this scaling.
    """
    x = np.asarray(x, dtype=float)
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    norm = 2.0 ** 0.25 / np.pi ** 0.25 / np.sqrt(2.0 ** n * math.factorial(n))
    return norm * hermval(np.sqrt(2.0) * x, coef) * np.exp(-x * x)


class QuadratureDensity:
    """Joint homodyne-outcome density of a Fock superposition at fixed phases.

    amplitudes: complex tensor with one axis per mode (occupation index);
    phases: one phase per mode.  At phase phi the mode-n position amplitude
    is e^{-i n phi} <x|n>.
    """

    def __init__(self, amplitudes: np.ndarray, phases) -> None:
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.phases = np.asarray(phases, dtype=float)
        if self.amplitudes.ndim != len(self.phases):
            raise ValueError("one phase per mode required")
        norm = np.linalg.norm(self.amplitudes)
        if norm < 1e-12:
            raise ValueError("zero state")
        self.amplitudes = self.amplitudes / norm

    def __call__(self, *xs) -> np.ndarray:
        if len(xs) != self.amplitudes.ndim:
            raise ValueError("one coordinate array per mode required")
        xs = [np.asarray(x, dtype=float) for x in xs]
        shape = np.broadcast(*[x for x in xs]).shape if len(xs) > 1 else xs[0].shape
        amp = np.zeros(shape, dtype=complex)
        for occ in np.ndindex(*self.amplitudes.shape):
            c = self.amplitudes[occ]
            if c == 0:
                continue
            term = np.full(shape, c, dtype=complex)
            for mode, n in enumerate(occ):
                term = term * (
                    np.exp(-1j * n * self.phases[mode])
                    * quadrature_wavefunction(n, xs[mode])
                )
            amp = amp + term
        return np.abs(amp) ** 2


@dataclass(frozen=True)
class TermGroup:
    """A ladder string merged with its Hermitian partner for sampling."""

    key: str
    coefficient: complex
    weight: int  # 2 when a distinct partner was folded in, else 1
    diag_modes: tuple[int, ...]
    off_modes: tuple[int, ...]

    @property
    def num_raising(self) -> int:
        return self.key.count("+")

    @property
    def num_lowering(self) -> int:
        return self.key.count("-")


def _partner_key(key: str) -> str:
    return key.translate(str.maketrans("+-", "-+"))


def group_hermitian_terms(op: LadderTermSum) -> list[TermGroup]:
    """Merge conjugate-partner strings; validates Hermiticity on the way."""
    groups = []
    seen = set()
    for key in sorted(op.terms):
        if key in seen:
            continue
        coeff = op.terms[key]
        partner = _partner_key(key)
        if partner == key:
            if abs(coeff.imag) > HERMITICITY_TOL * max(1.0, abs(coeff)):
                raise ValueError(f"self-adjoint term {key} has complex weight")
            weight = 1
            rep = key
        else:
            pc = op.terms.get(partner)
            if pc is None or abs(pc - np.conj(coeff)) > HERMITICITY_TOL * max(
                1.0, abs(coeff)
            ):
                raise ValueError(f"term {key} lacks its Hermitian partner")
            weight = 2
            rep = min(key, partner)
            coeff = op.terms[rep]
            seen.add(partner)
        seen.add(key)
        diag = tuple(m for m, s in enumerate(rep) if s in "iz01")
        off = tuple(m for m, s in enumerate(rep) if s in "+-")
        groups.append(TermGroup(rep, coeff, weight, diag, off))
    return groups


_DIAG_FACTOR = {
    # zero-embedded diagonal matrix elements by photon count (0, 1, >=2)
    "i": (1.0, 1.0, 0.0),
    "z": (1.0, -1.0, 0.0),
    "0": (1.0, 0.0, 0.0),
    "1": (0.0, 1.0, 0.0),
}


def diagonal_factor(key: str, diag_modes: tuple[int, ...], counts) -> np.ndarray:
    counts = np.atleast_2d(np.asarray(counts, dtype=int))
    out = np.ones(len(counts))
    for col, mode in enumerate(diag_modes):
        table = _DIAG_FACTOR[key[mode]]
        c = np.minimum(counts[:, col], 2)
        out = out * np.asarray(table)[c]
    return out


@dataclass
class ShotRecord:
    term_key: str
    diagonal_counts: tuple[int, ...]
    phases: tuple[float, ...]
    quadratures: tuple[float, ...]
    value: float


def shot_records_to_csv(records: list[ShotRecord]) -> str:
    lines = ["term_id,diagonal_outcomes,phases,quadratures,value"]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.term_key,
                    " ".join(str(c) for c in r.diagonal_counts),
                    " ".join(f"{p:.12g}" for p in r.phases),
                    " ".join(f"{x:.12g}" for x in r.quadratures),
                    f"{r.value:.12g}",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def exact_expectation(state: BosonState, op: LadderTermSum) -> float:
    """<state|op|state> with every symbol zero-embedded beyond one photon."""
    sector = state.sector
    if op.num_modes != sector.num_modes:
        raise ValueError("operator and state mode counts differ")
    amps = state.amplitudes
    occs = [tuple(s) for s in sector.states]
    total = 0.0 + 0.0j
    for key, coeff in op.terms.items():
        acc = 0.0 + 0.0j
        for idx, occ in enumerate(occs):
            a = amps[idx]
            if a == 0:
                continue
            factor = 1.0
            out = list(occ)
            dead = False
            for mode, sym in enumerate(key):
                n = occ[mode]
                if sym in _DIAG_FACTOR:
                    f = _DIAG_FACTOR[sym][min(n, 2)]
                    if f == 0.0:
                        dead = True
                        break
                    factor *= f
                elif sym == "+":
                    if n != 0:
                        dead = True
                        break
                    out[mode] = 1
                elif sym == "-":
                    if n != 1:
                        dead = True
                        break
                    out[mode] = 0
                else:
                    raise ValueError(f"unsupported symbol {sym!r}")
            if dead:
                continue
            j = sector.index.get(tuple(out))
            if j is None:
                continue
            acc += np.conj(amps[j]) * factor * a
        total += coeff * acc
    if abs(total.imag) > 1e-8 * max(1.0, abs(total.real)):
        raise ValueError("operator expectation came out complex; sum not Hermitian?")
    return float(total.real)


def sample_photon_counts(
    state: BosonState, num_shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Photon-count patterns over all modes, shape (num_shots, M)."""
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    idx = rng.choice(len(probs), size=num_shots, p=probs)
    return np.asarray(state.sector.states, dtype=int)[idx]


class StateSampler:
    """Draws hybrid measurement shots for ladder terms on a fixed state.

    Precomputes the quadrature wavefunction table and the pairwise
    antiderivative tensor used to evaluate conditional CDFs on the grid;
    each term group then samples photon counts on its diagonal modes and
    quadratures on its transition modes, vectorized across shots.
    """

    def __init__(self, state: BosonState, grid_points: int = GRID_POINTS) -> None:
        if abs(state.norm - 1.0) > 1e-9:
            raise ValueError("state must be normalized")
        self.state = state
        self.sector = state.sector
        self.occupations = np.asarray(self.sector.states, dtype=int)
        n_max = self.sector.num_photons
        self.n_max = n_max
        # grid reach: outer classical turning point plus four vacuum widths
        x_max = math.sqrt(n_max + 1.0) + 2.0
        self.grid = np.linspace(-x_max, x_max, grid_points)
        self.dx = self.grid[1] - self.grid[0]
        self.psi = np.stack(
            [quadrature_wavefunction(n, self.grid) for n in range(n_max + 1)]
        )
        prod = self.psi[:, None, :] * self.psi[None, :, :]
        self.pair_cdf = cumulative_trapezoid(prod, self.grid, axis=2, initial=0.0)

    def conditional_tensors(self, diag_modes, off_modes):
        """Unique diagonal count patterns with their probabilities and the
        conditional off-mode amplitude tensors."""
        occs = self.occupations
        amps = self.state.amplitudes
        d = self.n_max + 1
        if diag_modes:
            pat = occs[:, list(diag_modes)]
        else:
            pat = np.zeros((len(occs), 0), dtype=int)
        uniq, inverse = np.unique(pat, axis=0, return_inverse=True)
        probs = np.bincount(inverse, weights=np.abs(amps) ** 2, minlength=len(uniq))
        tensors = []
        for g in range(len(uniq)):
            members = np.nonzero(inverse == g)[0]
            t = np.zeros((d,) * len(off_modes), dtype=complex)
            for i in members:
                t[tuple(occs[i, list(off_modes)])] += amps[i]
            nrm = np.linalg.norm(t.ravel())
            if nrm > 0:
                t = t / nrm
            tensors.append(t)
        return uniq, probs / probs.sum(), tensors

    def sample_quadratures(self, tensor, num_shots, rng):
        """Sequential conditional inverse-CDF sampling over the off modes.

        Returns (phases, xs, kernel-ready amplitudes) with shapes
        (num_shots, n_off); the per-mode phase factors are absorbed into
        the running amplitude tensor before each conditional is formed.
        """
        n_off = tensor.ndim
        d = self.n_max + 1
        grid_n = len(self.grid)
        phases = rng.uniform(0.0, np.pi, size=(num_shots, n_off))
        xs = np.zeros((num_shots, n_off))
        amp = np.broadcast_to(tensor, (num_shots,) + tensor.shape).copy()
        amp = amp.reshape(num_shots, d, -1)
        for k in range(n_off):
            phase_fac = np.exp(-1j * np.arange(d)[None, :] * phases[:, k : k + 1])
            amp = amp * phase_fac[:, :, None]
            rho = np.einsum("snr,smr->snm", amp, amp.conj()).real

            # CDF(idx) evaluated lazily per shot; a dense (shots x grid)
            # table would not fit in memory for large shot counts
            def cdf_at(idx):
                return np.einsum("snm,nms->s", rho, self.pair_cdf[:, :, idx])

            total = np.einsum("snm,nm->s", rho, self.pair_cdf[:, :, -1])
            total = np.where(total <= 0, 1.0, total)
            u = rng.uniform(size=num_shots) * total
            lo = np.zeros(num_shots, dtype=int)
            hi = np.full(num_shots, grid_n - 1, dtype=int)
            while np.any(hi - lo > 1):
                mid = (lo + hi) // 2
                below = cdf_at(mid) < u
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            c_lo = cdf_at(lo)
            c_hi = cdf_at(hi)
            span = np.where(c_hi > c_lo, c_hi - c_lo, 1.0)
            x = self.grid[lo] + (u - c_lo) / span * self.dx
            xs[:, k] = x
            psi_x = np.stack(
                [quadrature_wavefunction(n, x) for n in range(d)], axis=1
            )
            amp = np.einsum("snr,sn->sr", amp, psi_x.astype(complex))
            nrm = np.linalg.norm(amp, axis=1, keepdims=True)
            nrm = np.where(nrm > 0, nrm, 1.0)
            amp = amp / nrm
            if k + 1 < n_off:
                amp = amp.reshape(num_shots, d, -1)
        return phases, xs

    def sample_group(
        self,
        group: TermGroup,
        num_shots: int,
        rng: np.random.Generator,
        collect_records: bool = False,
    ):
        """Shot values for one merged term, plus optional per-shot records."""
        if num_shots <= 0:
            raise ValueError("num_shots must be positive")
        patterns, probs, tensors = self.conditional_tensors(
            group.diag_modes, group.off_modes
        )
        pattern_idx = rng.choice(len(probs), size=num_shots, p=probs)
        diag = np.zeros(num_shots)
        for g in range(len(probs)):
            mask = pattern_idx == g
            if not np.any(mask):
                continue
            diag[mask] = diagonal_factor(group.key, group.diag_modes, patterns[g][None, :])
        values = np.zeros(num_shots)
        phases_all = np.zeros((num_shots, len(group.off_modes)))
        xs_all = np.zeros((num_shots, len(group.off_modes)))
        if group.off_modes:
            off_symbols = [group.key[m] for m in group.off_modes]
            for g in range(len(probs)):
                mask = (pattern_idx == g) & (diag != 0.0)
                n_g = int(mask.sum())
                if n_g == 0:
                    continue
                phases, xs = self.sample_quadratures(tensors[g], n_g, rng)
                kprod = np.ones(n_g, dtype=complex)
                for k, sym in enumerate(off_symbols):
                    kprod = kprod * kernel(sym, phases[:, k], xs[:, k])
                values[mask] = (
                    group.weight
                    * diag[mask]
                    * np.real(group.coefficient * kprod)
                )
                phases_all[mask] = phases
                xs_all[mask] = xs
        else:
            values = group.weight * diag * np.real(group.coefficient)
        records = None
        if collect_records:
            records = [
                ShotRecord(
                    term_key=group.key,
                    diagonal_counts=tuple(int(c) for c in patterns[pattern_idx[s]]),
                    phases=tuple(phases_all[s]),
                    quadratures=tuple(xs_all[s]),
                    value=float(values[s]),
                )
                for s in range(num_shots)
            ]
        return values, records


def sample_term_shot(
    state: BosonState, op: LadderTermSum, key: str, rng: np.random.Generator
) -> ShotRecord:
    """One hybrid shot for the named term (with its partner folded in)."""
    groups = [g for g in group_hermitian_terms(op) if g.key == key]
    if not groups:
        raise ValueError(f"term {key!r} not present (or not the pair representative)")
    sampler = StateSampler(state)
    _, records = sampler.sample_group(groups[0], 1, rng, collect_records=True)
    return records[0]


@dataclass
class EstimateReport:
    """Monte-Carlo ratio estimate with analytic error accounting."""

    mean: float
    numerator: float
    denominator: float
    shots_per_term: dict
    empirical_variance: float
    variance_bound: float
    bias_bound: float
    projection_ratio_estimate: float
    projection_ratio_shots: int
    chi: float
    num_variance: float = 0.0
    den_variance: float = 0.0
    constant: float = 0.0
    records: list = field(default_factory=list, repr=False)


def _sum_squared_and_norm(groups):
    ssq = sum((g.weight * abs(g.coefficient)) ** 2 for g in groups)
    one_norm = sum(g.weight * abs(g.coefficient) for g in groups)
    k_max = max((max(g.num_raising, g.num_lowering) for g in groups), default=0)
    return ssq, one_norm, k_max


def estimate_energy(
    state: BosonState,
    ham_terms: LadderTermSum,
    metric_terms: LadderTermSum | None,
    num_shots_ham: int,
    num_shots_metric: int,
    seed,
    chi: float | None = None,
    constant: float = 0.0,
    collect_records: bool = False,
) -> EstimateReport:
    """Estimate constant + <ham>/<metric> from independent shot streams.

    metric_terms=None means the metric is the encoded-subspace projector,
    estimated by pure photon counting.  chi defaults to the measured
    projection ratio minus three standard errors, floored at 0.05.
    """
    h_groups = group_hermitian_terms(ham_terms)
    if not h_groups:
        raise ValueError("empty Hamiltonian term sum")
    m_h = len(h_groups)
    if num_shots_ham < m_h:
        raise ValueError(f"need at least {m_h} shots for {m_h} terms")
    v_groups = group_hermitian_terms(metric_terms) if metric_terms is not None else []
    m_v = max(len(v_groups), 1)
    if metric_terms is not None and num_shots_metric < m_v:
        raise ValueError(f"need at least {m_v} metric shots for {m_v} terms")
    if num_shots_metric <= 0:
        raise ValueError("metric budget must be positive")

    root = np.random.SeedSequence(seed) if not isinstance(
        seed, np.random.SeedSequence
    ) else seed
    streams = root.spawn(m_h + max(len(v_groups), 0) + 1)
    sampler = StateSampler(state)

    shots_per_term = {}
    records: list[ShotRecord] = []

    num_est = 0.0
    num_var_of_mean = 0.0
    n_per_h = num_shots_ham // m_h
    for i, g in enumerate(h_groups):
        rng = np.random.default_rng(streams[i])
        values, recs = sampler.sample_group(g, n_per_h, rng, collect_records)
        shots_per_term[g.key] = n_per_h
        num_est += float(values.mean())
        if n_per_h > 1:
            num_var_of_mean += float(values.var(ddof=1)) / n_per_h
        if recs:
            records.extend(recs)

    # projection-ratio estimate always comes from pure photon counting
    q_rng = np.random.default_rng(streams[-1])
    q_counts = sample_photon_counts(state, num_shots_metric, q_rng)
    q_values = (q_counts.max(axis=1) <= 1).astype(float)
    q_est = float(q_values.mean())
    q_se = float(q_values.std(ddof=1) / np.sqrt(num_shots_metric)) if num_shots_metric > 1 else 1.0

    if metric_terms is None:
        den_est = q_est
        den_var_of_mean = q_se**2
        shots_per_term["<Q>"] = num_shots_metric
        g_sq, g_norm, k_v = 1.0, 1.0, 0
    else:
        den_est = 0.0
        den_var_of_mean = 0.0
        n_per_v = num_shots_metric // m_v
        for i, g in enumerate(v_groups):
            rng = np.random.default_rng(streams[m_h + i])
            values, recs = sampler.sample_group(g, n_per_v, rng, collect_records)
            shots_per_term[f"metric:{g.key}"] = n_per_v
            den_est += float(values.mean())
            if n_per_v > 1:
                den_var_of_mean += float(values.var(ddof=1)) / n_per_v
            if recs:
                records.extend(recs)
        g_sq, _, k_v = _sum_squared_and_norm(v_groups)

    if den_est <= 0.0:
        raise UnreliableEstimateError(
            f"metric estimate {den_est:.3g} is not positive; "
            "increase the metric budget or improve the projection ratio"
        )

    if chi is None:
        chi = max(CHI_FLOOR, q_est - 3.0 * q_se)

    h_sq, h_norm, k_h = _sum_squared_and_norm(h_groups)
    kb = OFFDIAG_KERNEL_BOUND
    n_v_budget = num_shots_metric
    var_bound = (
        kb ** (4 * k_v) * m_v * g_sq * h_norm**2 / (chi**2 * n_v_budget)
        + kb ** (4 * k_h) * m_h * h_sq / (chi**2 * num_shots_ham)
    )
    bias_bound = kb ** (2 * k_v) * m_v * g_sq * h_norm / (chi**2 * n_v_budget)

    mean = constant + num_est / den_est
    emp_var = (
        num_est**2 * den_var_of_mean + den_est**2 * num_var_of_mean
    ) / den_est**4

    return EstimateReport(
        mean=mean,
        numerator=num_est,
        denominator=den_est,
        shots_per_term=shots_per_term,
        empirical_variance=emp_var,
        variance_bound=var_bound,
        bias_bound=bias_bound,
        projection_ratio_estimate=q_est,
        projection_ratio_shots=num_shots_metric,
        chi=chi,
        num_variance=num_var_of_mean,
        den_variance=den_var_of_mean,
        constant=constant,
        records=records,
    )


def merge_reports(reports: list[EstimateReport]) -> EstimateReport:
    """Pool shard reports by shot-weighted averaging of both ratio parts."""
    if not reports:
        raise ValueError("nothing to merge")
    total_h = [sum(r.shots_per_term[k] for k in r.shots_per_term if not k.startswith("metric:") and k != "<Q>") for r in reports]
    w = np.array(total_h, dtype=float)
    w = w / w.sum()
    num = float(sum(wi * r.numerator for wi, r in zip(w, reports)))
    den = float(sum(wi * r.denominator for wi, r in zip(w, reports)))
    if den <= 0:
        raise UnreliableEstimateError("merged metric estimate not positive")
    base = reports[0]
    return EstimateReport(
        mean=base.constant + num / den,
        numerator=num,
        denominator=den,
        shots_per_term={"merged": sum(total_h)},
        empirical_variance=float(
            sum(wi**2 * r.empirical_variance for wi, r in zip(w, reports))
        ),
        variance_bound=max(r.variance_bound for r in reports),
        bias_bound=max(r.bias_bound for r in reports),
        projection_ratio_estimate=float(
            sum(wi * r.projection_ratio_estimate for wi, r in zip(w, reports))
        ),
        projection_ratio_shots=sum(r.projection_ratio_shots for r in reports),
        chi=min(r.chi for r in reports),
        constant=base.constant,
    )
