"""Physical configuration and the closed-form effective-Hamiltonian parameters.

All dynamics run in dimensionless units: ħ = 1 and frequencies in units of the
mechanical frequency ω_m. `derive_params` converts a lab-frame (SI)
`PhysicalConfig` into those units; `from_ratios` builds the same
`DerivedParams` directly from the ratios g/ω_m, G/ω_m and G0/ω_m.
"""

from dataclasses import dataclass, asdict, replace
import hashlib
import json
import logging
import math
from typing import Optional
import numpy as np
from scipy.optimize import minimize
from .errors import (
    ConfigError,
    ConvergenceFailure,
    GeometryViolation,
    SignViolation,
    StabilityViolation,
)

logger = logging.getLogger(__name__)

COULOMB_K = 8.9875517923e9
HBAR = 1.054571817e-34

APPENDIX_A_SIGNS = ("paper", "derived")

# Relative tolerance for the k·q01·q00 = k·q22·q02 symmetry requirement
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class PhysicalConfig:
    """Lab-frame parameters of the two charged optomechanical cavities (SI units)."""

    omega_c: float
    omega_m: float
    mass: float
    cavity_length: float
    r0: float
    R0: float
    q1: float
    q2: float
    q01: float
    q00: float
    q02: float
    q22: float
    coulomb_k: float = COULOMB_K
    hbar: float = HBAR
    geometry_ratio_max: float = 1e-2

    def __post_init__(self):
        for name in ("omega_m", "mass", "cavity_length", "r0", "R0", "hbar"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")

        if not self.rho < 0:
            raise SignViolation(
                f"rho = k·q1·q2 must be negative (attractive inner charges), got {self.rho}"
            )
        if not self.rho0 < 0:
            raise SignViolation(
                f"rho0 = k·q01·q00 must be negative (attractive outer charges), got {self.rho0}"
            )
        rho0_right = self.coulomb_k * self.q22 * self.q02
        if not math.isclose(self.rho0, rho0_right, rel_tol=SYMMETRY_RTOL):
            raise SignViolation(
                f"outer charges must be symmetric: k·q01·q00 = {self.rho0} "
                f"but k·q22·q02 = {rho0_right}"
            )

        for name in ("r0", "R0"):
            ratio = getattr(self, name) / self.cavity_length
            if not ratio < self.geometry_ratio_max:
                raise GeometryViolation(
                    f"{name}/L = {ratio:.3g} violates {name}/L < {self.geometry_ratio_max:g}"
                )

    @property
    def rho(self) -> float:
        return self.coulomb_k * self.q1 * self.q2

    @property
    def rho0(self) -> float:
        return self.coulomb_k * self.q01 * self.q00


@dataclass(frozen=True)
class SIQuantities:
    """Lab-frame quantities computed by `derive_params` (reported, not used in dynamics)."""

    omega_m: float
    omega_c: float
    hbar: float
    alpha_force: float
    d1: float
    d2: float
    d01: float
    d02: float
    Q_inner: float
    Q_outer: float
    G_inner: float
    G_outer: float
    g0: float
    g: float
    delta1: float
    delta2: float
    delta1_s: float
    delta2_s: float
    V0_inner: float
    V0_outer: float


@dataclass(frozen=True)
class DerivedParams:
    """Effective-Hamiltonian parameters in units of ω_m (ħ = 1).

    `delta_override` holds the rotating-frame detunings (Δ1, Δ2) injected into
    every Hamiltonian; the optical-scale lab detunings live in `si`.
    """

    g: float
    G_inner: float
    G_outer: float
    lambda1: float
    lambda2: float
    nu: float
    chi: float
    r_squeeze: float
    omega_s: float
    g_s: float
    gamma: float
    sigma_inner: float
    sigma_outer: float
    omega_m: float = 1.0
    appendix_a_sign: str = "paper"
    delta_override: tuple[float, float] = (0.0, 0.0)
    si: Optional[SIQuantities] = None

    @property
    def delta1(self) -> float:
        return self.delta_override[0]

    @property
    def delta2(self) -> float:
        return self.delta_override[1]

    @property
    def nu_minus_one(self) -> float:
        """ν − 1 without cancellation (ν − 1 = 2χ/λ1)."""
        return 2.0 * self.chi / self.lambda1

    @property
    def self_phase(self) -> float:
        """Net n² coefficient of the combined effective Hamiltonian."""
        return self.sigma_outer - self.sigma_inner

    def with_detuning(self, delta1: float, delta2: float) -> "DerivedParams":
        return replace(self, delta_override=(float(delta1), float(delta2)))

    def to_dict(self) -> dict:
        """Flat JSON-ready mapping: dimensionless fields plus `si_*` fields."""
        data = asdict(self)
        si = data.pop("si")
        data["delta_override"] = list(self.delta_override)
        data["energy_offset_chi"] = -self.chi
        if si:
            data.update({f"si_{key}": value for key, value in si.items()})
        return data


def sigma_inner(g: float, G_inner: float, omega_m: float = 1.0) -> float:
    return g**2 * (omega_m - 4.0 * G_inner) / (omega_m * (omega_m - 8.0 * G_inner))


def sigma_outer(
    g: float, G_outer: float, omega_m: float = 1.0, sign: str = "paper"
) -> float:
    """Outer self-phase coefficient g_s²/ω_s = g²/(ω_m − 4G0), signed by convention.

    "paper" keeps the plus sign that the cancellation condition relies on;
    "derived" is the sign the elimination of the squeezed mode produces.
    """
    if sign not in APPENDIX_A_SIGNS:
        raise ValueError(f"appendix_a_sign must be one of {APPENDIX_A_SIGNS}, got {sign}")
    magnitude = g**2 / (omega_m - 4.0 * G_outer)
    return magnitude if sign == "paper" else -magnitude


def check_stability(G_inner: float, G_outer: float, omega_m: float = 1.0) -> None:
    if not omega_m > 8.0 * G_inner:
        raise StabilityViolation(
            f"condition ω_m > 8G violated: ω_m = {omega_m:g}, 8G = {8.0 * G_inner:g}"
        )
    if not omega_m > 4.0 * G_outer:
        raise StabilityViolation(
            f"condition ω_m > 4G0 violated: ω_m = {omega_m:g}, 4G0 = {4.0 * G_outer:g}"
        )


def from_ratios(
    g: float,
    G_inner: float,
    G_outer: float,
    omega_m: float = 1.0,
    delta_override: tuple[float, float] = (0.0, 0.0),
    appendix_a_sign: str = "paper",
) -> DerivedParams:
    """Compute every derived symbol from the coupling ratios.

    Args:
        g: single-photon optomechanical coupling.
        G_inner: spring shift from the inner charges q1, q2.
        G_outer: spring shift from the outer charged bodies.
        omega_m: mechanical frequency (1 in dimensionless runs).
        delta_override: rotating-frame detunings (Δ1, Δ2).
        appendix_a_sign: "paper" or "derived" sign of the outer self-phase term.

    Raises:
        StabilityViolation: if ω_m ≤ 8G or ω_m ≤ 4G0.
    """
    check_stability(G_inner, G_outer, omega_m)

    lambda1 = math.sqrt(omega_m * (omega_m - 8.0 * G_inner))
    lambda2 = omega_m
    # (ω−4G)² − λ1² = 16G², so ω − 4G − λ1 = 16G²/(ω − 4G + λ1)
    chi = 8.0 * G_inner**2 / (omega_m - 4.0 * G_inner + lambda1)
    nu = (lambda2 - 4.0 * G_inner) / lambda1

    r_squeeze = 0.25 * math.log(omega_m / (omega_m - 4.0 * G_outer))
    omega_s = (omega_m - 4.0 * G_outer) * math.exp(2.0 * r_squeeze)
    g_s = g * math.exp(r_squeeze)

    gamma = g**2 * 8.0 * G_inner / (omega_m * (omega_m - 8.0 * G_inner))

    return DerivedParams(
        g=float(g),
        G_inner=float(G_inner),
        G_outer=float(G_outer),
        lambda1=lambda1,
        lambda2=lambda2,
        nu=nu,
        chi=chi,
        r_squeeze=r_squeeze,
        omega_s=omega_s,
        g_s=g_s,
        gamma=gamma,
        sigma_inner=sigma_inner(g, G_inner, omega_m),
        sigma_outer=sigma_outer(g, G_outer, omega_m, appendix_a_sign),
        omega_m=float(omega_m),
        appendix_a_sign=appendix_a_sign,
        delta_override=(float(delta_override[0]), float(delta_override[1])),
    )


def equilibrium_shifts(cfg: PhysicalConfig) -> tuple[float, float, float, float]:
    """Minimum of the second-order expanded Coulomb + harmonic potentials.

    Returns:
        tuple: (d1, d2, d01, d02) in meters, with d2 = −d1 and d02 = −d01.
    """
    k_spring = cfg.mass * cfg.omega_m**2
    alpha = cfg.rho / cfg.r0**2
    d1 = -alpha * cfg.r0 / (k_spring * cfg.r0 + 4.0 * alpha)
    d01 = cfg.rho0 / (k_spring * cfg.R0**2 + 2.0 * cfg.rho0 / cfg.R0)
    return d1, -d1, d01, -d01


def derive_params(
    cfg: PhysicalConfig,
    appendix_a_sign: str = "paper",
    delta_override: tuple[float, float] = (0.0, 0.0),
) -> DerivedParams:
    """Derive the effective-Hamiltonian parameters from a lab-frame configuration.

    Raises:
        StabilityViolation: if ω_m ≤ 8G or ω_m ≤ 4G0.
    """
    wm = cfg.omega_m
    alpha = cfg.rho / cfg.r0**2
    d1, d2, d01, d02 = equilibrium_shifts(cfg)

    Q_inner = -cfg.rho / cfg.r0**3
    Q_outer = -cfg.rho0 / cfg.R0**3
    G_inner = Q_inner / (2.0 * cfg.mass * wm)
    G_outer = Q_outer / (2.0 * cfg.mass * wm)
    g0 = cfg.omega_c / cfg.cavity_length
    g = g0 * math.sqrt(cfg.hbar / (2.0 * cfg.mass * wm))

    si = SIQuantities(
        omega_m=wm,
        omega_c=cfg.omega_c,
        hbar=cfg.hbar,
        alpha_force=alpha,
        d1=d1,
        d2=d2,
        d01=d01,
        d02=d02,
        Q_inner=Q_inner,
        Q_outer=Q_outer,
        G_inner=G_inner,
        G_outer=G_outer,
        g0=g0,
        g=g,
        delta1=cfg.omega_c - g0 * (d1 + d01),
        delta2=cfg.omega_c - g0 * (d2 + d02),
        delta1_s=cfg.omega_c + g0 * d1,
        delta2_s=cfg.omega_c + g0 * d2,
        V0_inner=cfg.rho / cfg.r0,
        V0_outer=2.0 * cfg.rho0 / cfg.R0,
    )
    logger.debug("SI quantities: %s", si)

    params = from_ratios(
        g / wm,
        G_inner / wm,
        G_outer / wm,
        delta_override=delta_override,
        appendix_a_sign=appendix_a_sign,
    )
    return replace(params, si=si)


def solve_cancellation(G_inner: float, omega_m: float = 1.0) -> float:
    """Outer spring shift G0 that cancels the total self-phase term.

    Raises:
        StabilityViolation: if ω_m ≤ 8G or the resulting G0 ≥ ω_m/4.
    """
    if not omega_m > 8.0 * G_inner:
        raise StabilityViolation(
            f"condition ω_m > 8G violated: ω_m = {omega_m:g}, 8G = {8.0 * G_inner:g}"
        )
    G_outer = omega_m * G_inner / (omega_m - 4.0 * G_inner)
    if not G_outer < omega_m / 4.0:
        raise StabilityViolation(
            f"cancelling G0 = {G_outer:g} violates ω_m > 4G0 (squeezing undefined)"
        )
    return G_outer


def _minimize_scaled(fun, jac, hess, x0, scale: float, grad_tol: float):
    result = minimize(
        fun,
        x0,
        jac=jac,
        hess=hess,
        method="trust-exact",
        options={"gtol": grad_tol * scale, "maxiter": 500},
    )
    grad_norm = float(np.linalg.norm(jac(result.x)))
    if not np.all(np.isfinite(result.x)) or grad_norm > grad_tol * scale:
        raise ConvergenceFailure(
            f"equilibrium search stopped with gradient norm {grad_norm:.3g} "
            f"(tolerance {grad_tol * scale:.3g}): {result.message}"
        )
    return result.x


def find_equilibrium_numeric(
    cfg: PhysicalConfig, grad_tol: float = 1e-10
) -> tuple[float, float]:
    """Numerically minimize the exact inner potential ρ/(r0 + x2 − x1) + (m/2)ω_m²(x1² + x2²).

    Lengths are scaled by r0 and energies by m ω_m² r0², so the search runs on
    order-one numbers; `grad_tol` is relative to the Coulomb strength.

    Raises:
        ConvergenceFailure: if the gradient norm does not drop below tolerance.
    """
    kappa = cfg.rho / (cfg.mass * cfg.omega_m**2 * cfg.r0**3)

    def fun(u):
        return kappa / (1.0 + u[1] - u[0]) + 0.5 * (u[0] ** 2 + u[1] ** 2)

    def jac(u):
        c = kappa / (1.0 + u[1] - u[0]) ** 2
        return np.array([c + u[0], -c + u[1]])

    def hess(u):
        c = 2.0 * kappa / (1.0 + u[1] - u[0]) ** 3
        return np.array([[c + 1.0, -c], [-c, c + 1.0]])

    u = _minimize_scaled(fun, jac, hess, np.zeros(2), abs(kappa), grad_tol)
    if not 1.0 + u[1] - u[0] > 0:
        raise ConvergenceFailure("inner mirrors collapsed: no stable equilibrium")
    return float(u[0] * cfg.r0), float(u[1] * cfg.r0)


def find_outer_equilibrium_numeric(cfg: PhysicalConfig, grad_tol: float = 1e-10) -> float:
    """Numerically minimize ρ0/(R0 + x) + (m/2)ω_m² x², the oracle for d01."""
    kappa = cfg.rho0 / (cfg.mass * cfg.omega_m**2 * cfg.R0**3)

    def fun(u):
        return kappa / (1.0 + u[0]) + 0.5 * u[0] ** 2

    def jac(u):
        return np.array([-kappa / (1.0 + u[0]) ** 2 + u[0]])

    def hess(u):
        return np.array([[2.0 * kappa / (1.0 + u[0]) ** 3 + 1.0]])

    u = _minimize_scaled(fun, jac, hess, np.zeros(1), abs(kappa), grad_tol)
    return float(u[0] * cfg.R0)


def params_hash(params: DerivedParams) -> str:
    """Short stable hash of the parameters that enter the dynamics."""
    payload = {
        key: value
        for key, value in params.to_dict().items()
        if not key.startswith("si_")
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
