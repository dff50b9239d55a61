"""Cross-Kerr QND photon counting in a Mach–Zehnder interferometer.

Mode 1 holds the signal (n photons), modes 2 and 3 are the interferometer
arms. The probe enters mode 3 as a coherent state; only mode 2 passes through
the interaction region. Detector D1 reads output mode 2, D2 reads output mode 3.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from enum import Enum
import logging
import math
from typing import Any, Callable, Optional, Sequence
import numpy as np
from scipy.optimize import minimize
from .errors import OutOfRange, PhaseAliasing, QndpyError, TruncationTooSmall
from .fock import (
    ModeLayout,
    StateVector,
    annihilator,
    coherent_amplitudes,
    evolve,
    number_op,
    product_state,
    required_dim,
)
from .model import Variant, build_effective, probe_self_phase
from .params import DerivedParams

logger = logging.getLogger(__name__)

PHASE_WINDOW_TOL = 1e-12
OUT_OF_RANGE_RTOL = 1e-9
SWEEP_FIELDS = ("n_true", "alpha", "T", "sigma_scale")
CSV_SCHEMA = "qndpy.qnd_record/v1"


class Backend(str, Enum):
    ANALYTIC = "analytic"
    FOCK = "fock"


@dataclass(frozen=True)
class ProtocolConfig:
    """One protocol run.

    `delta1`/`delta2` default to the rotating-frame detunings carried by
    `params`; `sigma_scale` multiplies the self-phase terms of the
    interaction Hamiltonian.
    """

    params: DerivedParams
    n_true: int
    alpha: complex
    T: float
    variant: Variant = Variant.EFFECTIVE_IDEAL
    backend: Backend = Backend.ANALYTIC
    probe_dim: int = 40
    n_search_max: int = 5
    sigma_scale: float = 1.0
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    shot_noise_samples: int = 0
    seed: Optional[int] = None
    allow_aliasing: bool = False

    def __post_init__(self):
        if int(self.n_true) != self.n_true or self.n_true < 0:
            raise ValueError(f"n_true must be a non-negative integer, got {self.n_true}")
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "backend", Backend(self.backend))
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not self.variant.is_effective:
            raise ValueError(
                f"the interaction region takes an effective Hamiltonian, got {self.variant.value}"
            )
        if self.backend == Backend.FOCK and self.probe_dim < required_dim(self.alpha):
            raise TruncationTooSmall(
                f"probe |α| = {abs(self.alpha):g} needs probe_dim >= {required_dim(self.alpha)}, "
                f"got {self.probe_dim}"
            )

    @property
    def effective_params(self) -> DerivedParams:
        delta1 = self.params.delta1 if self.delta1 is None else self.delta1
        delta2 = self.params.delta2 if self.delta2 is None else self.delta2
        return self.params.with_detuning(delta1, delta2)


@dataclass(frozen=True)
class Estimate:
    n_est_real: float
    n_est: int
    ambiguous: bool = False


@dataclass(frozen=True)
class QndRunRecord:
    n_true: int
    alpha: complex
    T: float
    delta2: float
    gamma: float
    variant: str
    backend: str
    sigma_scale: float
    theta: float
    expect_D: float
    n_est_real: Optional[float]
    n_est: Optional[int]
    residual: Optional[float]
    ambiguous: bool = False
    aliased: bool = False
    fidelity_probe: Optional[float] = None
    signal_number: Optional[float] = None
    expect_D_exact: Optional[float] = None
    error: Optional[str] = None

    @property
    def bias(self) -> Optional[float]:
        return None if self.n_est_real is None else self.n_est_real - self.n_true

    def to_row(self) -> dict[str, Any]:
        row = asdict(self)
        row["alpha"] = self.alpha
        row["bias"] = self.bias
        return row


def beam_splitter(amp2: complex, amp3: complex) -> tuple[complex, complex]:
    """50/50 splitter with i on reflection: (0, α) → (iα/√2, α/√2)."""
    root2 = math.sqrt(2.0)
    return (amp2 + 1j * amp3) / root2, (1j * amp2 + amp3) / root2


def apply_beam_splitter(state: StateVector, first: str = "a2", second: str = "a3") -> StateVector:
    """The same splitter acting on a Fock-space state: exp(−iHπ/4) with H = −(a†b + b†a)."""
    a = annihilator(state.layout, first)
    b = annihilator(state.layout, second)
    H = -(a.dag() @ b + b.dag() @ a)
    return evolve(H, state, math.pi / 4.0)


def recommended_time(
    params: DerivedParams, delta2: Optional[float] = None, n_search_max: int = 5
) -> float:
    """T = π/(2(Δ2 + γ n_max)), keeping the search range on the monotonic arccos branch."""
    delta2 = params.delta2 if delta2 is None else delta2
    rate = delta2 + params.gamma * n_search_max
    if not rate > 0:
        raise ValueError(f"Δ2 + γ·n_search_max must be positive, got {rate:g}")
    return math.pi / (2.0 * rate)


def phase(T: float, delta2: float, gamma: float, n) -> float:
    return T * (delta2 + gamma * n)


def check_phase_window(T: float, delta2: float, gamma: float, n_search_max: int) -> None:
    """Raise PhaseAliasing unless T(Δ2 + γn) ∈ [0, π] for n = 0..n_search_max."""
    phases = phase(T, delta2, gamma, np.arange(n_search_max + 1))
    bad = np.flatnonzero((phases < -PHASE_WINDOW_TOL) | (phases > math.pi + PHASE_WINDOW_TOL))
    if bad.size:
        n = int(bad[0])
        raise PhaseAliasing(
            f"phase T(Δ2 + γn) = {phases[n]:.6g} at n = {n} leaves [0, π]; "
            f"arccos inversion is ambiguous (try T = {math.pi / 2:.4g}/(Δ2 + γ·{n_search_max}))"
        )


def estimate_n(
    expect_D: float,
    alpha: complex,
    T: float,
    delta2: float,
    gamma: float,
    n_search_max: int = 5,
    resolution: Optional[float] = None,
    check_window: bool = True,
) -> Estimate:
    """Invert ⟨D⟩ = |α|² cos(T(Δ2 + γn)) for n.

    `resolution` is the detector resolution on ⟨D⟩ used for the ambiguity flag
    (default 1e-9·|α|²).

    Raises:
        OutOfRange: if |⟨D⟩| exceeds |α|² or γ = 0.
        PhaseAliasing: if the search range leaves the arccos branch.
    """
    intensity = abs(alpha) ** 2
    if abs(expect_D) > intensity * (1.0 + OUT_OF_RANGE_RTOL):
        raise OutOfRange(f"|⟨D⟩| = {abs(expect_D):.6g} exceeds |α|² = {intensity:.6g}")
    if not gamma > 0:
        raise OutOfRange(f"cannot invert for n with γ = {gamma:g}")
    if T <= 0:
        raise OutOfRange(f"interaction time must be positive, got {T:g}")
    if check_window:
        check_phase_window(T, delta2, gamma, n_search_max)

    ratio = min(1.0, max(-1.0, expect_D / intensity))
    n_real = (math.acos(ratio) / T - delta2) / gamma
    n_est = int(round(n_real))

    if resolution is None:
        resolution = 1e-9 * intensity
    levels = intensity * np.cos(phase(T, delta2, gamma, np.arange(n_search_max + 1)))
    gaps = np.abs(np.subtract.outer(levels, levels))[np.triu_indices(levels.size, 1)]
    ambiguous = bool(gaps.size and gaps.min() < resolution)
    return Estimate(n_est_real=n_real, n_est=n_est, ambiguous=ambiguous)


def _coherent_fidelity(rho: np.ndarray, beta: complex) -> float:
    dim = rho.shape[0]
    # largest |β| admitted by the truncation rule at this dimension
    if abs(beta) > -3.0 + math.sqrt(dim - 1.0):
        return 0.0
    c = coherent_amplitudes(beta, dim)
    return float(np.real(np.vdot(c, rho @ c)))


def nearest_coherent_fidelity(state, guess: complex = 0.0, starts: int = 8) -> float:
    """max over β of ⟨β|ρ|β⟩ for a single-mode state vector or density matrix.

    Nelder–Mead from `guess` rotated by `starts` equally spaced angles.
    """
    state = np.asarray(state, dtype=complex)
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state

    def objective(x):
        return -_coherent_fidelity(rho, complex(x[0], x[1]))

    best = 0.0
    for k in range(starts):
        start = complex(guess) * np.exp(2j * math.pi * k / starts)
        result = minimize(
            objective,
            [start.real, start.imag],
            method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 2000},
        )
        best = max(best, -float(result.fun))
        if complex(guess) == 0:
            break
    return best


def _analytic(cfg: ProtocolConfig, params: DerivedParams, theta: float):
    self_phase = probe_self_phase(params, cfg.variant, cfg.sigma_scale)
    if abs(self_phase) > 1e-12 * abs(params.sigma_inner):
        raise ValueError(
            f"the analytic backend cannot represent the probe self-phase of "
            f"{cfg.variant.value} (use the Fock backend or sigma_scale = 0)"
        )
    amp2, amp3 = beam_splitter(0.0, cfg.alpha)
    amp2 *= np.exp(1j * theta)
    out2, out3 = beam_splitter(amp2, amp3)
    intensities = (abs(out2) ** 2, abs(out3) ** 2)
    return {
        "expect_D": intensities[0] - intensities[1],
        "intensities": intensities,
        "signal_number": float(cfg.n_true),
        "fidelity_probe": None,
        "joint": None,
    }


def protocol_layout(cfg: ProtocolConfig) -> ModeLayout:
    return ModeLayout.of(
        ("a1", cfg.n_true + 2), ("a2", cfg.probe_dim), ("a3", cfg.probe_dim)
    )


def _fock(cfg: ProtocolConfig, params: DerivedParams, theta: float):
    layout = protocol_layout(cfg)
    signal = np.zeros(layout.dim("a1"), dtype=complex)
    signal[cfg.n_true] = 1.0
    psi = product_state(
        layout, {"a1": signal, "a3": coherent_amplitudes(cfg.alpha, cfg.probe_dim)}
    )

    psi = apply_beam_splitter(psi)
    interaction_layout = ModeLayout.of(("a1", layout.dim("a1")), ("a2", cfg.probe_dim))
    H = build_effective(params, cfg.variant, interaction_layout, cfg.sigma_scale).operator
    psi = evolve(H.embed(layout), psi, cfg.T)

    probe = psi.reduced_density_matrix(["a2"])
    ideal_probe = 1j * cfg.alpha / math.sqrt(2.0) * np.exp(1j * theta)
    fidelity = nearest_coherent_fidelity(probe, ideal_probe)

    psi = apply_beam_splitter(psi)
    n2 = number_op(layout, "a2").expect(psi).real
    n3 = number_op(layout, "a3").expect(psi).real
    return {
        "expect_D": n2 - n3,
        "intensities": (n2, n3),
        "signal_number": number_op(layout, "a1").expect(psi).real,
        "fidelity_probe": fidelity,
        "joint": np.real(np.diag(psi.reduced_density_matrix(["a2", "a3"]))),
    }


def _shot_noise(cfg: ProtocolConfig, outcome: dict) -> float:
    rng = np.random.default_rng(cfg.seed)
    samples = cfg.shot_noise_samples
    if outcome["joint"] is None:
        counts2 = rng.poisson(outcome["intensities"][0], samples)
        counts3 = rng.poisson(outcome["intensities"][1], samples)
        return float(np.mean(counts2 - counts3))
    probabilities = np.clip(outcome["joint"], 0.0, None)
    probabilities = probabilities / probabilities.sum()
    picks = rng.choice(probabilities.size, size=samples, p=probabilities)
    counts2, counts3 = np.unravel_index(picks, (cfg.probe_dim, cfg.probe_dim))
    return float(np.mean(counts2 - counts3))


def run_protocol(cfg: ProtocolConfig) -> QndRunRecord:
    """Run the interferometer once and invert the detector signal for n.

    Raises:
        PhaseAliasing: if T(Δ2 + γn) leaves [0, π] over the search range and
            `allow_aliasing` is not set.
        TruncationTooSmall: if the probe does not fit the Fock truncation.
    """
    params = cfg.effective_params
    search_max = max(cfg.n_search_max, cfg.n_true)
    aliased = False
    try:
        check_phase_window(cfg.T, params.delta2, params.gamma, search_max)
    except PhaseAliasing:
        if not cfg.allow_aliasing:
            raise
        aliased = True
        logger.warning("phase window violated, continuing because aliasing is allowed")

    theta = -phase(cfg.T, params.delta2, params.gamma, cfg.n_true)
    runner = _analytic if cfg.backend == Backend.ANALYTIC else _fock
    outcome = runner(cfg, params, theta)

    expect_D_exact = float(outcome["expect_D"])
    expect_D = expect_D_exact
    resolution = None
    if cfg.shot_noise_samples > 0:
        expect_D = _shot_noise(cfg, outcome)
        resolution = abs(cfg.alpha) / math.sqrt(cfg.shot_noise_samples)

    intensity = abs(cfg.alpha) ** 2
    estimate = estimate_n(
        max(-intensity, min(intensity, expect_D)),
        cfg.alpha,
        cfg.T,
        params.delta2,
        params.gamma,
        search_max,
        resolution=resolution,
        check_window=not aliased,
    )
    logger.debug(
        "%s/%s n=%d θ=%.6g ⟨D⟩=%.12g n_est=%.9g",
        cfg.variant.value,
        cfg.backend.value,
        cfg.n_true,
        theta,
        expect_D,
        estimate.n_est_real,
    )
    return QndRunRecord(
        n_true=cfg.n_true,
        alpha=cfg.alpha,
        T=cfg.T,
        delta2=params.delta2,
        gamma=params.gamma,
        variant=cfg.variant.value,
        backend=cfg.backend.value,
        sigma_scale=cfg.sigma_scale,
        theta=theta,
        expect_D=expect_D,
        n_est_real=estimate.n_est_real,
        n_est=estimate.n_est,
        residual=abs(estimate.n_est_real - estimate.n_est),
        ambiguous=estimate.ambiguous,
        aliased=aliased,
        fidelity_probe=outcome["fidelity_probe"],
        signal_number=outcome["signal_number"],
        expect_D_exact=expect_D_exact,
    )


def _failed_record(cfg: ProtocolConfig, error: Exception, **overrides) -> QndRunRecord:
    """Error row for `cfg`; `overrides` carry a swept value that `cfg` could not take."""
    params = cfg.effective_params
    fields = dict(n_true=cfg.n_true, alpha=cfg.alpha, T=cfg.T, sigma_scale=cfg.sigma_scale)
    fields.update(overrides)
    fields["alpha"] = complex(fields["alpha"])
    return QndRunRecord(
        **fields,
        delta2=params.delta2,
        gamma=params.gamma,
        variant=cfg.variant.value,
        backend=cfg.backend.value,
        theta=-phase(fields["T"], params.delta2, params.gamma, fields["n_true"]),
        expect_D=math.nan,
        n_est_real=None,
        n_est=None,
        residual=None,
        aliased=isinstance(error, PhaseAliasing),
        error=f"{type(error).__name__}: {error}",
    )


def sweep(
    template: ProtocolConfig,
    vary: str,
    grid: Sequence,
    jobs: int = 1,
    on_done: Optional[Callable[[], None]] = None,
) -> list[QndRunRecord]:
    """run_protocol over `grid` values of one field; errors are recorded per point.

    Records come back in grid order regardless of `jobs`.
    """
    if vary not in SWEEP_FIELDS:
        raise ValueError(f"can only sweep over {SWEEP_FIELDS}, got '{vary}'")

    def run(value):
        try:
            cfg = replace(template, **{vary: value})
        except (QndpyError, ValueError) as e:
            record = _failed_record(template, e, **{vary: value})
        else:
            try:
                record = run_protocol(cfg)
            except (QndpyError, ValueError) as e:
                logger.info("sweep point %s=%s failed: %s", vary, value, e)
                record = _failed_record(cfg, e)
        if on_done:
            on_done()
        return record

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, grid))
    return [run(value) for value in grid]
