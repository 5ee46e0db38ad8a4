"""Variational driver: exact-path energy, penalty, restarts, and PES scans.

The cost never leaves the encoded subspace: the interferometer contributes
transition amplitudes from the reference onto determinant patterns (a batch
of permanents), the classical operator contributes a determinant-space
matrix, and the energy is a Rayleigh quotient of the cached sector
Hamiltonian at the composed vector.  Sampling-based estimation lives in the
measurement modules and is validated at fixed parameters, not inside the
optimizer loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .fermion import FermiTermSum
from .hamiltonian import (
    CisdAmplitudes,
    SecondQuantHam,
    ham_from_json,
    parse_fcidump,
)
from .interferometer import HermitianPacking, permanent_batch

METHODS = ("bs-hf", "bs-cisd")
GRAD_STEP = 1e-6
DENOMINATOR_FLOOR = 1e-12
_LEIBNIZ_MAX = 5  # explicit determinant expansion beats batched LAPACK up to here


def _expi(generator: np.ndarray) -> np.ndarray:
    """exp(i*H) for Hermitian H through its eigendecomposition."""
    vals, vecs = np.linalg.eigh(generator)
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


def _leibniz_table(n: int):
    import itertools

    perms = np.array(list(itertools.permutations(range(n))), dtype=int)
    signs = np.empty(len(perms))
    for k, p in enumerate(perms):
        inversions = sum(
            1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j]
        )
        signs[k] = -1.0 if inversions % 2 else 1.0
    return perms, signs


def _det_batch(mats: np.ndarray) -> np.ndarray:
    """Determinants over the trailing two axes, fast for very small blocks."""
    n = mats.shape[-1]
    if n == 0:
        return np.ones(mats.shape[:-2], dtype=mats.dtype)
    if n > _LEIBNIZ_MAX:
        return np.linalg.det(mats)
    perms, signs = _leibniz_table(n)
    gathered = mats[..., np.arange(n), perms]  # (..., n!, n)
    return gathered.prod(axis=-1) @ signs


class DegenerateAnsatzError(RuntimeError):
    """The metric expectation collapsed; the ansatz left the usable manifold."""


class OptimizationFailedError(RuntimeError):
    """Every restart ended at a non-finite cost."""

    def __init__(self, message: str, results):
        super().__init__(message)
        self.results = results


def _alpha_mask(num_modes: int, num_electrons: int, full: bool) -> np.ndarray:
    """Upper-triangle mask for the interferometer generator.

    The restricted form keeps occupied-to-virtual and virtual-to-virtual
    couplings and freezes occupied-occupied rotations, which mostly shuffle
    photons among already-filled rails and dilute the projection ratio.
    """
    mask = np.triu(np.ones((num_modes, num_modes), dtype=bool), k=1)
    if not full:
        occ = np.arange(num_modes) < num_electrons
        mask &= ~(occ[:, None] & occ[None, :])
    return mask


class Problem:
    """One Hamiltonian prepared for repeated cost evaluation."""

    def __init__(self, ham: SecondQuantHam, method: str, full_alpha_mask: bool = False):
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {method!r}")
        self.ham = ham
        self.method = method
        m, n = ham.num_spin_orbitals, ham.num_electrons
        self.num_modes = m
        self.num_photons = n
        self.reference_occ = ham.reference_occupation()
        self.det_basis = ham.sector_basis()
        self.det_index = {occ: i for i, occ in enumerate(self.det_basis)}
        self.h0 = np.ascontiguousarray(ham.sector_matrix(self.det_basis))
        self.constant = float(ham.constant)
        self.alpha_packing = HermitianPacking(
            m, mask_upper=_alpha_mask(m, n, full_alpha_mask)
        )
        self._det_orbitals = np.array(
            [np.nonzero(occ)[0] for occ in self.det_basis], dtype=int
        )
        self._ref_cols = np.nonzero(np.array(self.reference_occ))[0]
        if method == "bs-hf":
            # determinant rotations: only occupied-virtual mixing moves the state
            mask = np.zeros((m, m), dtype=bool)
            mask[:n, n:] = True
            self.beta_packing = HermitianPacking(
                m, mask_upper=np.triu(mask, k=1), include_diagonal=False
            )
            self.num_beta = self.beta_packing.size
            self._scatter = None
        else:
            self.beta_packing = None
            singles, doubles = CisdAmplitudes.slot_keys(m, n)
            self._cisd_singles = singles
            self._cisd_doubles = doubles
            self.num_beta = len(singles) + len(doubles)
            self._scatter = self._build_scatter(singles, doubles)
        self.num_alpha = self.alpha_packing.size
        self.num_params = self.num_alpha + self.num_beta

    def _build_scatter(self, singles, doubles):
        """Sparse action of each excitation slot on the determinant basis."""
        slot_ops = [[(a, True), (i, False)] for (i, a) in singles]
        slot_ops += [
            [(a, True), (b, True), (j, False), (i, False)] for (i, j, a, b) in doubles
        ]
        rows, cols, slots, weights = [], [], [], []
        for k, ops in enumerate(slot_ops):
            op = FermiTermSum.from_ops(ops, 1.0)
            for j, occ in enumerate(self.det_basis):
                for coeff, out_occ in op.apply_to_occupation(occ):
                    rows.append(self.det_index[out_occ])
                    cols.append(j)
                    slots.append(k)
                    weights.append(float(coeff.real))
        return (
            np.asarray(rows, dtype=int),
            np.asarray(cols, dtype=int),
            np.asarray(slots, dtype=int),
            np.asarray(weights, dtype=float),
        )

    # -- parameter bookkeeping ----------------------------------------------

    def beta_slot_labels(self) -> tuple[str, ...]:
        if self.method == "bs-hf":
            return tuple(self.beta_packing.describe())
        labels = [f"t[{i}->{a}]" for (i, a) in self._cisd_singles]
        labels += [f"t[{i},{j}->{a},{b}]" for (i, j, a, b) in self._cisd_doubles]
        return tuple(labels)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got {x.shape}")
        return x[: self.num_alpha], x[self.num_alpha :]

    # -- cost kernels --------------------------------------------------------

    def encoded_amplitudes(self, alpha_vec: np.ndarray) -> np.ndarray:
        u = _expi(self.alpha_packing.unpack(alpha_vec))
        # determinant targets hold at most one photon: factorial norms are all 1
        stack = u[self._det_orbitals[:, :, None], self._ref_cols[None, None, :]]
        return permanent_batch(stack)

    def classical_matrix(self, beta_vec: np.ndarray) -> np.ndarray:
        beta_vec = np.asarray(beta_vec, dtype=float)
        if beta_vec.shape != (self.num_beta,):
            raise ValueError(f"expected {self.num_beta} beta parameters")
        size = len(self.det_basis)
        if self.method == "bs-hf":
            u = _expi(self.beta_packing.unpack(beta_vec))
            idx = self._det_orbitals
            sub = u[idx[:, None, :, None], idx[None, :, None, :]]
            return _det_batch(sub)
        w = np.eye(size, dtype=complex)
        rows, cols, slots, weights = self._scatter
        np.add.at(w, (rows, cols), beta_vec[slots] * weights)
        return w


@dataclass(frozen=True)
class AnsatzParams:
    """Interferometer and classical-operator parameters with slot labels."""

    alpha: np.ndarray
    beta: np.ndarray
    alpha_slots: tuple[str, ...] = ()
    beta_slots: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if self.alpha_slots and len(self.alpha_slots) != len(self.alpha):
            raise ValueError("alpha slot labels do not match the vector length")
        if self.beta_slots and len(self.beta_slots) != len(self.beta):
            raise ValueError("beta slot labels do not match the vector length")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    @classmethod
    def from_vector(cls, problem: Problem, x: np.ndarray) -> "AnsatzParams":
        alpha, beta = problem.split(x)
        return cls(
            alpha=alpha,
            beta=beta,
            alpha_slots=tuple(problem.alpha_packing.describe()),
            beta_slots=problem.beta_slot_labels(),
        )

    @classmethod
    def zeros(cls, problem: Problem) -> "AnsatzParams":
        return cls.from_vector(problem, np.zeros(problem.num_params))


def _combine(problem: Problem, a: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    b = w @ a
    denominator = float(np.vdot(b, b).real)
    if denominator < DENOMINATOR_FLOOR:
        raise DegenerateAnsatzError(
            f"metric expectation {denominator:.3e} below {DENOMINATOR_FLOOR:g}"
        )
    energy = problem.constant + float(np.vdot(b, problem.h0 @ b).real) / denominator
    q_ratio = float(np.vdot(a, a).real)
    return energy, q_ratio


def _cost_vector(problem: Problem, x: np.ndarray) -> tuple[float, float]:
    alpha_vec, beta_vec = problem.split(x)
    a = problem.encoded_amplitudes(alpha_vec)
    w = problem.classical_matrix(beta_vec)
    return _combine(problem, a, w)


def penalized_gradient(
    problem: Problem, x: np.ndarray, penalty: float, step: float = GRAD_STEP
) -> np.ndarray:
    """Central differences of the penalized cost with a fixed absolute step.

    A slot perturbation touches either the interferometer amplitudes or the
    classical matrix, never both, so the untouched factor is reused.  The
    values are identical to naive differencing of the full cost.
    """
    alpha_vec, beta_vec = problem.split(x)
    a0 = problem.encoded_amplitudes(alpha_vec)
    w0 = problem.classical_matrix(beta_vec)

    def value(a, w):
        energy, q_ratio = _combine(problem, a, w)
        return energy - penalty * q_ratio

    grad = np.zeros(problem.num_params)
    for k in range(problem.num_alpha):
        plus, minus = alpha_vec.copy(), alpha_vec.copy()
        plus[k] += step
        minus[k] -= step
        grad[k] = (
            value(problem.encoded_amplitudes(plus), w0)
            - value(problem.encoded_amplitudes(minus), w0)
        ) / (2.0 * step)
    for k in range(problem.num_beta):
        plus, minus = beta_vec.copy(), beta_vec.copy()
        plus[k] += step
        minus[k] -= step
        grad[problem.num_alpha + k] = (
            value(a0, problem.classical_matrix(plus))
            - value(a0, problem.classical_matrix(minus))
        ) / (2.0 * step)
    return grad


def cost(params: AnsatzParams, problem: Problem) -> tuple[float, float]:
    """Energy and projection ratio of the ansatz state at these parameters."""
    return _cost_vector(problem, params.to_vector())


def cost_penalized(params: AnsatzParams, problem: Problem, penalty: float) -> float:
    """Energy minus penalty times the projection ratio."""
    if not math.isfinite(penalty):
        raise ValueError("penalty must be finite")
    energy, q_ratio = cost(params, problem)
    return energy - penalty * q_ratio


def finite_diff_gradient(fun, x: np.ndarray, step: float = GRAD_STEP) -> np.ndarray:
    """Componentwise central differences with a fixed absolute step."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for k in range(len(x)):
        forward = x.copy()
        forward[k] += step
        backward = x.copy()
        backward[k] -= step
        grad[k] = (fun(forward) - fun(backward)) / (2.0 * step)
    return grad


# -- classical reference methods ---------------------------------------------


def fci_energy(ham: SecondQuantHam) -> float:
    """Lowest eigenvalue on the full N-electron determinant basis."""
    h = ham.sector_matrix()
    return float(np.linalg.eigvalsh(h)[0]) + float(ham.constant)


def cisd_energy(ham: SecondQuantHam) -> float:
    """Variational energy on the reference-plus-singles-doubles subspace."""
    ref = ham.reference_occupation()
    basis = ham.sector_basis()
    keep = [
        occ
        for occ in basis
        if sum(o != r for o, r in zip(occ, ref)) <= 4  # at most a double excitation
    ]
    h = ham.sector_matrix(keep)
    return float(np.linalg.eigvalsh(h)[0]) + float(ham.constant)


def reference_energy(ham: SecondQuantHam) -> float:
    """Determinant energy of the lowest-orbital reference occupation."""
    h = ham.sector_matrix([ham.reference_occupation()])
    return float(h[0, 0].real) + float(ham.constant)


def hf_energy(ham: SecondQuantHam, restarts: int = 3, seed: int = 0,
              max_iter: int = 200) -> float:
    """Best single-determinant energy from rotation-only optimization."""
    problem = Problem(ham, "bs-hf")
    rng_streams = np.random.SeedSequence(seed).spawn(restarts)
    n = problem.num_beta
    alpha0 = np.zeros(problem.num_alpha)

    a0 = problem.encoded_amplitudes(alpha0)

    def objective(beta_vec):
        energy, _ = _combine(problem, a0, problem.classical_matrix(beta_vec))
        return energy

    best = objective(np.zeros(n))  # canonical orbitals are usually the optimum
    for stream in rng_streams:
        x0 = np.random.default_rng(stream).uniform(-0.1, 0.1, size=n)
        res = minimize(
            objective,
            x0,
            jac=lambda v: finite_diff_gradient(objective, v),
            method="L-BFGS-B",
            options={"maxiter": max_iter},
        )
        if np.isfinite(res.fun):
            best = min(best, float(res.fun))
    return best


# -- optimizer ----------------------------------------------------------------


@dataclass(frozen=True)
class OptimizeConfig:
    restarts: int = 10
    max_iter: int = 200
    penalty: float = 0.0
    seed: int = 0
    optimizer: str = "l-bfgs-b"  # or "nelder-mead"
    init_scale: float = 0.1
    warm_start: bool = False  # add one restart seeded from the classical solution

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.optimizer not in ("l-bfgs-b", "nelder-mead"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not math.isfinite(self.penalty):
            raise ValueError("penalty must be finite")


@dataclass
class VqeResult:
    energy: float
    params: AnsatzParams
    projection_ratio: float
    iterations: int
    restart_index: int
    converged: bool
    trace: list = field(default_factory=list, repr=False)
    penalized: float = float("nan")


def _classical_start(problem: Problem) -> np.ndarray:
    """Parameter vector reproducing the classical method's own optimum."""
    x = np.zeros(problem.num_params)
    if problem.method == "bs-cisd":
        # expansion coefficients of the lowest CI vector, rescaled to amplitudes
        h = problem.h0
        _, vecs = np.linalg.eigh(h)
        ground = vecs[:, 0]
        ref_col = problem.det_index[problem.reference_occ]
        c0 = ground[ref_col]
        if abs(c0) > 1e-8:
            rows, cols, slots, weights = problem._scatter
            on_ref = cols == ref_col
            coeff = ground[rows[on_ref]] / c0
            x[problem.num_alpha + slots[on_ref]] = (coeff / weights[on_ref]).real
    return x


def optimize(problem: Problem, config: OptimizeConfig) -> tuple[VqeResult, list[VqeResult]]:
    """Restarted minimization of the penalized cost; best restart plus all."""
    streams = np.random.SeedSequence(config.seed).spawn(config.restarts)
    starts = [
        np.random.default_rng(s).uniform(
            -config.init_scale, config.init_scale, size=problem.num_params
        )
        for s in streams
    ]
    if config.warm_start:
        starts.append(_classical_start(problem))

    def safe_cost(x):
        # the optimizer may probe non-finite parameters after a failed step
        if not np.all(np.isfinite(x)):
            return float("nan"), 0.0
        try:
            return _cost_vector(problem, x)
        except (DegenerateAnsatzError, np.linalg.LinAlgError):
            return float("nan"), 0.0

    def objective(x):
        energy, q_ratio = safe_cost(x)
        return energy - config.penalty * q_ratio

    results: list[VqeResult] = []
    for index, x0 in enumerate(starts):
        trace: list[tuple[float, float]] = []

        def record(xk):
            trace.append(safe_cost(xk))

        def gradient(x):
            try:
                return penalized_gradient(problem, x, config.penalty)
            except (DegenerateAnsatzError, np.linalg.LinAlgError):
                return np.full(problem.num_params, float("nan"))

        record(x0)
        if config.optimizer == "l-bfgs-b":
            res = minimize(
                objective,
                x0,
                jac=gradient,
                method="L-BFGS-B",
                callback=record,
                options={"maxiter": config.max_iter},
            )
        else:
            res = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                callback=record,
                options={"maxiter": config.max_iter * problem.num_params},
            )
        energy, q_ratio = safe_cost(res.x)
        penalized = energy - config.penalty * q_ratio
        results.append(
            VqeResult(
                energy=energy,
                params=AnsatzParams.from_vector(problem, res.x),
                projection_ratio=q_ratio,
                iterations=int(res.nit),
                restart_index=index,
                converged=bool(res.success) and math.isfinite(energy),
                trace=trace,
                penalized=penalized,
            )
        )

    finite = [r for r in results if math.isfinite(r.penalized)]
    if not finite:
        raise OptimizationFailedError(
            "every restart ended at a non-finite cost", results
        )
    best = min(finite, key=lambda r: r.penalized)
    return best, results


# -- potential-energy-surface scans -------------------------------------------


def load_hamiltonian(path) -> SecondQuantHam:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return ham_from_json(text)
    return parse_fcidump(text, label=path.stem)


@dataclass
class ScanRow:
    label: str
    e_bsc: float
    e_hf: float
    e_cisd: float
    e_fci: float
    q_ratio: float
    converged: bool
    error: str | None = None


def scan_pes(entries, config: OptimizeConfig) -> list[ScanRow]:
    """Optimize every manifest entry and tabulate reference methods alongside.

    Entries are mappings with keys label, file, method.  A failing geometry
    produces a row with the failure message; the scan keeps going.
    """
    rows = []
    for entry in entries:
        label = str(entry["label"])
        method = entry.get("method", "bs-hf")
        try:
            ham = load_hamiltonian(entry["file"])
            problem = Problem(ham, method)
            best, _ = optimize(problem, config)
            rows.append(
                ScanRow(
                    label=label,
                    e_bsc=best.energy,
                    e_hf=hf_energy(ham, seed=config.seed),
                    e_cisd=cisd_energy(ham),
                    e_fci=fci_energy(ham),
                    q_ratio=best.projection_ratio,
                    converged=best.converged,
                )
            )
        except (OSError, ValueError, KeyError, OptimizationFailedError) as exc:
            rows.append(
                ScanRow(
                    label=label,
                    e_bsc=float("nan"),
                    e_hf=float("nan"),
                    e_cisd=float("nan"),
                    e_fci=float("nan"),
                    q_ratio=float("nan"),
                    converged=False,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return rows


def rows_to_csv(rows) -> str:
    lines = ["label,e_bsc,e_hf,e_cisd,e_fci,q_ratio,converged"]
    for r in rows:
        lines.append(
            f"{r.label},{r.e_bsc:.10f},{r.e_hf:.10f},{r.e_cisd:.10f},"
            f"{r.e_fci:.10f},{r.q_ratio:.10f},{str(r.converged).lower()}"
        )
    return "\n".join(lines) + "\n"


# -- estimator-style facade ---------------------------------------------------


class BscVqeSolver:
    """Configured solver with a fit/predict surface over `optimize`.

    fit(ham) runs the restarted optimization and stores the outcome in
    trailing-underscore attributes; predict(ham) evaluates the fitted
    parameters on a compatible Hamiltonian (the same one by default),
    which is how neighboring scan points reuse a solution.
    """

    _param_names = (
        "method",
        "restarts",
        "max_iter",
        "penalty",
        "seed",
        "optimizer",
        "init_scale",
        "full_alpha_mask",
        "warm_start",
    )

    def __init__(
        self,
        method: str = "bs-hf",
        restarts: int = 10,
        max_iter: int = 200,
        penalty: float = 0.0,
        seed: int = 0,
        optimizer: str = "l-bfgs-b",
        init_scale: float = 0.1,
        full_alpha_mask: bool = False,
        warm_start: bool = False,
    ):
        self.method = method
        self.restarts = restarts
        self.max_iter = max_iter
        self.penalty = penalty
        self.seed = seed
        self.optimizer = optimizer
        self.init_scale = init_scale
        self.full_alpha_mask = full_alpha_mask
        self.warm_start = warm_start

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params) -> "BscVqeSolver":
        for name, value in params.items():
            if name not in self._param_names:
                raise ValueError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def _config(self) -> OptimizeConfig:
        return OptimizeConfig(
            restarts=self.restarts,
            max_iter=self.max_iter,
            penalty=self.penalty,
            seed=self.seed,
            optimizer=self.optimizer,
            init_scale=self.init_scale,
            warm_start=self.warm_start,
        )

    def fit(self, ham: SecondQuantHam) -> "BscVqeSolver":
        self.problem_ = Problem(ham, self.method, self.full_alpha_mask)
        self.result_, self.restarts_ = optimize(self.problem_, self._config())
        self.energy_ = self.result_.energy
        self.params_ = self.result_.params
        self.projection_ratio_ = self.result_.projection_ratio
        return self

    def _require_fitted(self):
        if not hasattr(self, "result_"):
            raise RuntimeError("call fit before using the fitted solver")

    def predict(self, ham: SecondQuantHam | None = None) -> float:
        self._require_fitted()
        if ham is None:
            return self.energy_
        problem = Problem(ham, self.method, self.full_alpha_mask)
        energy, _ = cost(self.params_, problem)
        return energy
