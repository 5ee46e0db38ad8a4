"""Uniform photon loss and the count-calibrated correction of gated estimates.

Loss is unravelled into pure trajectories: each photon survives with a
fixed probability, and a trajectory is the normalized state left after a
definite per-mode loss pattern.  Uniform loss commutes with passive linear
optics, so thinning the prepared state is equivalent to lossy detection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import comb as _comb

from .fermion import LadderTermSum
from .fock import BosonState, build_sector
from .homodyne import StateSampler, diagonal_factor, group_hermitian_terms, kernel
from .validation import check_unit_interval


class MitigationError(RuntimeError):
    """Calibration or gating produced no usable events."""


@dataclass(frozen=True)
class LossChannel:
    """Per-photon survival probability, identical for every mode."""

    survival: float

    def __post_init__(self):
        check_unit_interval(self.survival, "survival")
        if self.survival == 0.0:
            raise ValueError("survival probability must be positive")


@dataclass(frozen=True)
class MitigationCounts:
    """Calibration tallies from pure photon-number shots.

    n1: full photon number retained, at most one photon per mode;
    n2: gate-passing shots (target count on the diagonal modes, at most
    one per diagonal mode, other modes unconstrained);
    n3: n1 shots whose diagonal modes hold exactly the target count.
    """

    n1: int
    n2: int
    n3: int
    total_shots: int

    def __post_init__(self):
        if min(self.n1, self.n2, self.n3, self.total_shots) < 0:
            raise ValueError("counts must be nonnegative")
        if self.n3 > self.n1:
            raise ValueError("n3 counts a subset of the n1 events")


@dataclass
class MitigationResult:
    corrected: float
    raw: float
    correction_factor: float
    counts: MitigationCounts
    accepted_shots: int
    hybrid_shots: int
    corrected_se: float
    raw_se: float


def _loss_weights(occupations: np.ndarray, loss_vector: np.ndarray) -> np.ndarray:
    """Relative amplitude weights sqrt(prod-over-modes C(n_p, l_p)).

    The survival powers are constant across basis states of a fixed loss
    pattern and drop out on normalization.
    """
    ok = np.all(occupations >= loss_vector[None, :], axis=1)
    w = np.prod(_comb(occupations, loss_vector[None, :]), axis=1)
    return np.where(ok, np.sqrt(w), 0.0)


def _branch_state(state: BosonState, loss_vector: np.ndarray) -> BosonState | None:
    """Normalized trajectory state after losing the given per-mode pattern."""
    sector = state.sector
    occs = np.asarray(sector.states, dtype=int)
    weights = _loss_weights(occs, loss_vector)
    lost = int(loss_vector.sum())
    target = build_sector(sector.num_modes, sector.num_photons - lost)
    amp = np.zeros(len(target), dtype=complex)
    for j in np.nonzero(weights)[0]:
        reduced = tuple(occs[j] - loss_vector)
        amp[target.index[reduced]] += state.amplitudes[j] * weights[j]
    norm = np.linalg.norm(amp)
    if norm == 0.0:
        return None
    return BosonState(target, amp / norm)


def _sample_loss_vectors(
    state: BosonState, channel: LossChannel, num_shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Loss patterns distributed as the channel's trajectory weights."""
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    occs = np.asarray(state.sector.states, dtype=int)
    idx = rng.choice(len(probs), size=num_shots, p=probs)
    return rng.binomial(occs[idx], 1.0 - channel.survival)


def apply_loss(
    state: BosonState, channel: LossChannel, rng: np.random.Generator
) -> tuple[BosonState, int]:
    """One loss trajectory: the post-loss pure state and the photons lost."""
    if abs(state.norm - 1.0) > 1e-9:
        raise ValueError("state must be normalized")
    loss_vec = _sample_loss_vectors(state, channel, 1, rng)[0]
    lost = int(loss_vec.sum())
    if lost == 0:
        return state, 0
    branch = _branch_state(state, loss_vec)
    assert branch is not None  # the sampled pattern has positive weight
    return branch, lost


def sample_lossy_counts(
    state: BosonState, channel: LossChannel, num_shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Photon-count shots after loss, shape (num_shots, num_modes).

    Counting commutes with per-mode thinning, so surviving counts are
    binomial draws from ideal count samples.
    """
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    occs = np.asarray(state.sector.states, dtype=int)
    idx = rng.choice(len(probs), size=num_shots, p=probs)
    return rng.binomial(occs[idx], channel.survival)


def _pair_group(num_modes: int, term_key: str, coefficient: complex):
    op = LadderTermSum(num_modes)
    op.add_term(term_key, coefficient)
    partner = term_key.translate(str.maketrans("+-", "-+"))
    if partner != term_key:
        op.add_term(partner, np.conj(complex(coefficient)))
    (group,) = group_hermitian_terms(op)
    return group


def gated_counting_estimate(
    state: BosonState,
    term_key: str,
    coefficient: complex,
    channel: LossChannel,
    num_shots: int,
    seed: int,
) -> tuple[float, float]:
    """Lossy estimation of a purely diagonal string by post-selection.

    A lossy shot keeping all photons comes from the lossless trajectory,
    so conditioning on the encoded count patterns reproduces the ideal
    gated estimate directly; no correction factor enters.  Returns
    (corrected, raw) where raw applies the lossless counting estimator
    blindly to every shot.  The corrected target is the same normalized
    value the mitigated estimator reports for off-diagonal strings.
    """
    if num_shots < 1:
        raise ValueError("need at least one shot")
    group = _pair_group(state.sector.num_modes, term_key, coefficient)
    if group.off_modes:
        raise ValueError(
            "term has off-diagonal factors; use mitigated_estimate instead"
        )
    rng = np.random.default_rng(seed)
    counts = sample_lossy_counts(state, channel, num_shots, rng)
    values = (
        group.weight
        * np.real(group.coefficient)
        * diagonal_factor(group.key, group.diag_modes, counts[:, list(group.diag_modes)])
    )
    raw = float(values.mean())
    gate = (counts.sum(axis=1) == state.sector.num_photons) & (
        counts.max(axis=1) <= 1
    )
    if not gate.any():
        raise MitigationError("no shot retained every photon within the encoding")
    corrected = float(values[gate].mean())
    return corrected, raw


def mitigated_estimate(
    state: BosonState,
    term_key: str,
    coefficient: complex,
    channel: LossChannel,
    num_hybrid_shots: int,
    num_calibration_shots: int,
    seed,
) -> MitigationResult:
    """Loss-corrected estimate of the Hermitian pair built on `term_key`.

    Hybrid shots count the diagonal modes and proceed to homodyne only
    when those modes hold exactly the number of photons the term leaves
    there, one at most per mode.  A separate pure-counting calibration
    stream supplies the correction factor, composed literally as
    (n3/n1)(n2/n3) so a vanishing n3 surfaces instead of cancelling.
    """
    if abs(state.norm - 1.0) > 1e-9:
        raise ValueError("state must be normalized")
    group = _pair_group(state.sector.num_modes, term_key, coefficient)
    k = group.num_raising
    if k < 1 or group.num_raising != group.num_lowering:
        raise ValueError("term must carry equally many raising and lowering symbols")
    num_photons = state.sector.num_photons
    gate_count = num_photons - k
    if num_hybrid_shots <= 0 or num_calibration_shots <= 0:
        raise ValueError("shot budgets must be positive")

    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    hyb_seq, cal_seq = root.spawn(2)

    # calibration pass: pure photon counting on every mode
    cal_rng = np.random.default_rng(cal_seq)
    counts = sample_lossy_counts(state, channel, num_calibration_shots, cal_rng)
    totals = counts.sum(axis=1)
    encoded = (totals == num_photons) & (counts.max(axis=1) <= 1)
    diag_cols = list(group.diag_modes)
    if diag_cols:
        diag_tot = counts[:, diag_cols].sum(axis=1)
        diag_max = counts[:, diag_cols].max(axis=1)
    else:
        diag_tot = np.zeros(num_calibration_shots, dtype=int)
        diag_max = np.zeros(num_calibration_shots, dtype=int)
    gate_ok = (diag_tot == gate_count) & (diag_max <= 1)
    n1 = int(encoded.sum())
    n2 = int(gate_ok.sum())
    n3 = int((encoded & (diag_tot == gate_count)).sum())
    tallies = MitigationCounts(n1, n2, n3, num_calibration_shots)
    if n1 == 0 or n3 == 0:
        raise MitigationError(
            f"calibration found n1={n1}, n3={n3}; cannot build the correction factor"
        )

    # hybrid pass: trajectories grouped by loss pattern, then gated homodyne
    hyb_rng = np.random.default_rng(hyb_seq)
    loss_vectors = _sample_loss_vectors(state, channel, num_hybrid_shots, hyb_rng)
    unique_losses, loss_counts = np.unique(loss_vectors, axis=0, return_counts=True)
    accepted_values: list[np.ndarray] = []
    off_symbols = [group.key[m] for m in group.off_modes]
    for loss_vec, n_shots in zip(unique_losses, loss_counts):
        if num_photons - int(loss_vec.sum()) < gate_count:
            continue  # too few photons left to ever pass the gate
        branch = _branch_state(state, loss_vec)
        if branch is None:
            continue
        sampler = StateSampler(branch)
        patterns, probs, tensors = sampler.conditional_tensors(
            group.diag_modes, group.off_modes
        )
        pat_idx = hyb_rng.choice(len(probs), size=int(n_shots), p=probs)
        if patterns.shape[1]:
            pat_tot = patterns.sum(axis=1)
            pat_max = patterns.max(axis=1)
        else:
            pat_tot = np.zeros(len(patterns), dtype=int)
            pat_max = np.zeros(len(patterns), dtype=int)
        ok = (pat_tot[pat_idx] == gate_count) & (pat_max[pat_idx] <= 1)
        for g in np.unique(pat_idx[ok]):
            n_g = int(np.sum(pat_idx[ok] == g))
            dfac = diagonal_factor(group.key, group.diag_modes, patterns[g][None, :])[0]
            phases, xs = sampler.sample_quadratures(tensors[g], n_g, hyb_rng)
            kprod = np.ones(n_g, dtype=complex)
            for col, sym in enumerate(off_symbols):
                kprod = kprod * kernel(sym, phases[:, col], xs[:, col])
            accepted_values.append(
                group.weight * dfac * np.real(group.coefficient * kprod)
            )

    if not accepted_values:
        raise MitigationError("no hybrid shot passed the photon-count gate")
    values = np.concatenate(accepted_values)
    accepted = len(values)
    raw = float(values.mean())
    raw_se = float(values.std(ddof=1) / np.sqrt(accepted)) if accepted > 1 else float("inf")

    factor = (n3 / n1) * (n2 / n3)
    corrected = factor * raw

    # delta-method spread: hybrid and calibration streams are independent;
    # within calibration, cov(1_{n1}, 1_{n2}) = p3 - p1 p2 shot by shot
    s = num_calibration_shots
    p1, p2, p3 = n1 / s, n2 / s, n3 / s
    var_factor = (
        factor**2
        * (
            (1 - p1) / (p1 * s)
            + (1 - p2) / (p2 * s)
            - 2 * (p3 - p1 * p2) / (p1 * p2 * s)
        )
        if n2 > 0
        else float("inf")
    )
    corrected_se = float(np.sqrt(factor**2 * raw_se**2 + raw**2 * max(var_factor, 0.0)))

    return MitigationResult(
        corrected=corrected,
        raw=raw,
        correction_factor=factor,
        counts=tallies,
        accepted_shots=accepted,
        hybrid_shots=num_hybrid_shots,
        corrected_se=corrected_se,
        raw_se=raw_se,
    )
