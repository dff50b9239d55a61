"""Independent numerical checks of the effective-Hamiltonian reductions.

The oracle diagonalizes the mechanical block of a full Hamiltonian at fixed
photon numbers. Each block is a displaced quadratic form, so its ground energy
is exactly polynomial in (n1, n2) up to truncation error.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import itertools
import logging
import math
from typing import Callable, Optional
import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from .errors import QndpyError, TruncationTooSmall
from .fock import FockOperator, ModeLayout, StateVector, annihilator, interior_indices
from .model import (
    Variant,
    bogoliubov_ops,
    inverse_bogoliubov,
    outer_mode_operator,
    sector_operator,
)
from .params import (
    DerivedParams,
    check_stability,
    from_ratios,
    sigma_outer,
    solve_cancellation,
)

logger = logging.getLogger(__name__)

MIN_MECH_DIM = 16
MIN_BOGOLIUBOV_DIM = 24
DOUBLING_TOL = 1e-8
DENSE_LIMIT = 1600
SHIFT_MARGIN = 0.05
# recorded as failed checks by sector_suite
SUITE_ERRORS = (QndpyError, ArpackNoConvergence)
IDENTITY_RTOL = 1e-12
# λ1/ω_m below this is reported as ill-conditioned
CONDITIONING_FLOOR = 1e-3


@dataclass(frozen=True)
class SectorSpectrum:
    n1: int
    n2: int
    eigenvalues: tuple[float, ...]
    ground_energy: float
    mech_dim: int
    solver: str = "eigh"

    def to_row(self) -> dict:
        return {
            "n1": self.n1,
            "n2": self.n2,
            "ground_energy": self.ground_energy,
            "mech_dim": self.mech_dim,
        }


@dataclass(frozen=True)
class EffectiveFit:
    """Least-squares coefficients of ground_energy(n1, n2)."""

    c0: float
    c1: float
    c2: float
    c11: float
    c22: float
    c12: float
    residual: float
    sectors: tuple[SectorSpectrum, ...] = ()

    def coefficients(self) -> dict:
        return {
            key: value
            for key, value in asdict(self).items()
            if key not in ("sectors",)
        }


@dataclass(frozen=True)
class CheckResult:
    name: str
    expression: str
    defect: float
    tolerance: float
    passed: bool
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class VerificationReport:
    suite: str
    checks: list[CheckResult] = field(default_factory=list)
    findings: list[dict] = field(default_factory=list)
    ill_conditioned: bool = False

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "ill_conditioned": self.ill_conditioned,
            "checks": [check.to_dict() for check in self.checks],
            "findings": self.findings,
        }


def _relative(lhs: float, rhs: float, scale: float = 0.0) -> float:
    denom = max(abs(lhs), abs(rhs), abs(scale))
    return 0.0 if denom == 0.0 else abs(lhs - rhs) / denom


def _check(name, expression, lhs, rhs, scale=0.0, tolerance=IDENTITY_RTOL, note="") -> CheckResult:
    defect = _relative(lhs, rhs, scale)
    return CheckResult(
        name=name,
        expression=expression,
        defect=defect,
        tolerance=tolerance,
        passed=bool(defect < tolerance),
        lhs=float(lhs),
        rhs=float(rhs),
        note=note,
    )


def lowest_levels(
    op: FockOperator,
    n_levels: int = 6,
    vectors: bool = False,
    sigma: Optional[float] = None,
) -> tuple[np.ndarray, Optional[np.ndarray], str]:
    """Ascending lowest eigenvalues (and eigenvectors) of a Hermitian block.

    Dense `eigh` up to `DENSE_LIMIT` states, Lanczos (`eigsh`) above. A
    `sigma` known to lie just below the ground energy switches Lanczos to
    shift-invert mode.
    """
    n = op.layout.total_dim
    if n <= DENSE_LIMIT:
        w, v = scipy.linalg.eigh(op.toarray(), subset_by_index=[0, min(n_levels, n) - 1])
        return w, (v if vectors else None), "eigh"
    k = min(n_levels, n - 2)
    v0 = np.full(n, 1e-3, dtype=complex)
    v0[0] = 1.0
    matrix = op.tocsr()
    if not np.any(matrix.imag.data):
        matrix, v0 = matrix.real, v0.real
    if sigma is None:
        w, v = eigsh(matrix, k=k, which="SA", v0=v0, tol=0)
    else:
        w, v = eigsh(matrix, k=k, sigma=sigma, which="LM", v0=v0, tol=0)
    order = np.argsort(w)
    return w[order], (v[:, order] if vectors else None), "eigsh"


def _block_levels(op: FockOperator, n_levels: int, sigma=None) -> tuple[np.ndarray, str]:
    w, _, solver = lowest_levels(op, n_levels, sigma=sigma)
    return np.asarray(w, dtype=float), solver


def _outer_levels(params, n1, n2, mech_dim, n_levels):
    w1, _ = _block_levels(outer_mode_operator(params, n1, mech_dim), n_levels)
    w2, _ = _block_levels(outer_mode_operator(params, n2, mech_dim), n_levels)
    sums = np.sort(np.add.outer(w1, w2).ravel())[:n_levels]
    return sums + params.delta1 * n1 + params.delta2 * n2


def _sector_levels(variant: Variant, params, n1, n2, mech_dim, n_levels, sigma=None):
    # The outer modes decouple from each other and from the inner pair
    if variant == Variant.FULL_INNER:
        return _block_levels(sector_operator(variant, params, n1, n2, mech_dim), n_levels, sigma)
    if variant == Variant.FULL_OUTER:
        return _outer_levels(params, n1, n2, mech_dim, n_levels), "eigh"
    if variant == Variant.FULL_COMBINED:
        inner, solver = _block_levels(
            sector_operator(Variant.FULL_INNER, params, n1, n2, mech_dim), n_levels, None
        )
        outer = _outer_levels(params, n1, n2, mech_dim, n_levels)
        outer = outer - params.delta1 * n1 - params.delta2 * n2
        return np.sort(np.add.outer(inner, outer).ravel())[:n_levels], solver
    raise ValueError(f"{variant.value} has no mechanical sector")


def sector_ground_energy(
    variant: Variant,
    params: DerivedParams,
    n1: int,
    n2: int,
    mech_dim: int = 60,
    n_levels: int = 6,
    check_truncation: bool = True,
) -> SectorSpectrum:
    """Exact lowest levels of the mechanical block of a full Hamiltonian at (n1, n2).

    Raises:
        StabilityViolation: if the parameters are outside the stable regime.
        TruncationTooSmall: if mech_dim < 16 or the ground energy moves by more
            than 1e-8 when mech_dim is doubled.
    """
    variant = Variant(variant)
    check_stability(params.G_inner, params.G_outer, params.omega_m)
    if mech_dim < MIN_MECH_DIM:
        raise TruncationTooSmall(
            f"sector ({n1}, {n2}): mech_dim {mech_dim} below the minimum {MIN_MECH_DIM}"
        )

    levels, solver = _sector_levels(variant, params, n1, n2, mech_dim, n_levels)
    ground = float(levels[0])
    if check_truncation:
        # the doubled ground energy lies at or just below the current one
        doubled, _ = _sector_levels(
            variant, params, n1, n2, 2 * mech_dim, 1, sigma=ground - SHIFT_MARGIN
        )
        shift = abs(ground - float(doubled[0]))
        if shift > DOUBLING_TOL:
            raise TruncationTooSmall(
                f"sector ({n1}, {n2}): ground energy moves by {shift:.3g} when "
                f"mech_dim doubles from {mech_dim}"
            )
    logger.debug(
        "%s sector (%d, %d) mech_dim=%d solver=%s E0=%.15g",
        variant.value,
        n1,
        n2,
        mech_dim,
        solver,
        ground,
    )
    return SectorSpectrum(
        n1=n1,
        n2=n2,
        eigenvalues=tuple(float(x) for x in levels),
        ground_energy=ground,
        mech_dim=mech_dim,
        solver=solver,
    )


def truncation_sentinels(n_max: int) -> set[tuple[int, int]]:
    """Sectors with the largest mechanical displacements on the grid.

    The centre-of-mass shift grows with n1 + n2, the relative shift with
    |n1 − n2|; the blocks are symmetric under n1 ↔ n2.
    """
    return {(n_max, n_max), (n_max, 0)}


def sector_grid(
    variant: Variant,
    params: DerivedParams,
    n_max: int = 3,
    mech_dim: int = 60,
    jobs: int = 1,
    check_truncation: bool = True,
    on_done: Optional[Callable[[], None]] = None,
) -> list[SectorSpectrum]:
    """Ground energies over 0 ≤ n1, n2 ≤ n_max in row-major grid order.

    The doubling check runs on the `truncation_sentinels` only.
    """
    points = list(itertools.product(range(n_max + 1), repeat=2))
    sentinels = truncation_sentinels(n_max)

    def run(point):
        spectrum = sector_ground_energy(
            variant, params, *point, mech_dim=mech_dim, n_levels=1,
            check_truncation=check_truncation and point in sentinels,
        )
        if on_done:
            on_done()
        return spectrum

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, points))
    return [run(point) for point in points]


def fit_sectors(sectors: list[SectorSpectrum]) -> EffectiveFit:
    n1 = np.array([s.n1 for s in sectors], dtype=float)
    n2 = np.array([s.n2 for s in sectors], dtype=float)
    energies = np.array([s.ground_energy for s in sectors])
    design = np.column_stack([np.ones_like(n1), n1, n2, n1**2, n2**2, n1 * n2])
    coeffs, *_ = np.linalg.lstsq(design, energies, rcond=None)
    residual = float(np.max(np.abs(design @ coeffs - energies)))
    return EffectiveFit(*(float(c) for c in coeffs), residual=residual, sectors=tuple(sectors))


def fit_effective(
    variant: Variant,
    params: DerivedParams,
    n_max: int = 3,
    mech_dim: int = 60,
    jobs: int = 1,
    check_truncation: bool = True,
    on_done: Optional[Callable[[], None]] = None,
) -> EffectiveFit:
    """Fit c0 + c1 n1 + c2 n2 + c11 n1² + c22 n2² + c12 n1 n2 to the sector ground energies."""
    if n_max < 3:
        raise ValueError(f"n_max must be at least 3 to fit six coefficients, got {n_max}")
    sectors = sector_grid(
        variant, params, n_max, mech_dim, jobs, check_truncation, on_done=on_done
    )
    fit = fit_sectors(sectors)
    logger.info(
        "%s fit: c12=%.10g c11=%.10g residual=%.3g", Variant(variant).value, fit.c12, fit.c11, fit.residual
    )
    return fit


def verify_identities(params: DerivedParams) -> VerificationReport:
    """Check the algebraic chain behind the cross-Kerr and self-phase coefficients."""
    report = VerificationReport("identities")
    w, G, G0, g = params.omega_m, params.G_inner, params.G_outer, params.g
    lam1, nu = params.lambda1, params.nu
    nu_m1 = params.nu_minus_one

    report.add(
        _check("lambda1_squared", "λ1² = ω_m(ω_m − 8G)", lam1**2, w * (w - 8.0 * G), scale=w * w)
    )
    report.add(
        _check(
            "nu_squared_minus_one",
            "sqrt(ν² − 1) = 4G/λ1",
            math.sqrt(nu_m1 * (nu + 1.0)),
            4.0 * G / lam1,
        )
    )
    root_sum_sq = (math.sqrt(nu_m1) + math.sqrt(nu + 1.0)) ** 2
    report.add(
        _check("root_sum_squared", "(sqrt(ν−1) + sqrt(ν+1))² = 2ω_m/λ1", root_sum_sq, 2.0 * w / lam1)
    )

    # −A (n1 − n2)² − B (n1 + n2)² against −σ (n1² + n2²) + γ n1 n2
    A = g**2 / (4.0 * lam1) * root_sum_sq
    B = g**2 / (2.0 * params.lambda2)
    n1, n2 = np.meshgrid(np.arange(11.0), np.arange(11.0))
    lhs = -A * (n1 - n2) ** 2 - B * (n1 + n2) ** 2
    rhs = -params.sigma_inner * (n1**2 + n2**2) + params.gamma * n1 * n2
    scale = (A + B) * (n1**2 + n2**2)
    denom = np.maximum.reduce([np.abs(lhs), np.abs(rhs), scale])
    with np.errstate(invalid="ignore", divide="ignore"):
        defects = np.where(denom > 0, np.abs(lhs - rhs) / np.where(denom > 0, denom, 1.0), 0.0)
    worst = np.unravel_index(np.argmax(defects), defects.shape)
    defect = float(defects[worst])
    report.add(
        CheckResult(
            name="elimination_expansion",
            expression="−(g²/4λ1)(√(ν−1)+√(ν+1))²(n1−n2)² − (g²/2λ2)(n1+n2)² = −σ(n1²+n2²) + γ n1 n2",
            defect=defect,
            tolerance=IDENTITY_RTOL,
            passed=defect < IDENTITY_RTOL,
            lhs=float(lhs[worst]),
            rhs=float(rhs[worst]),
            note="max over 0 ≤ n1, n2 ≤ 10",
        )
    )

    report.add(
        _check(
            "squeezed_coupling",
            "g_s²/ω_s = g²/(ω_m − 4G0)",
            params.g_s**2 / params.omega_s,
            g**2 / (w - 4.0 * G0),
        )
    )
    G0_cancel = solve_cancellation(G, w)
    report.add(
        _check(
            "cancellation",
            "σ_outer(G0 = ω_m G/(ω_m − 4G)) = σ_inner",
            sigma_outer(g, G0_cancel, w, "paper"),
            params.sigma_inner,
            note=f"G0 = {G0_cancel:.17g}",
        )
    )

    if lam1 < CONDITIONING_FLOOR * w:
        report.ill_conditioned = True
        report.findings.append(
            {
                "kind": "conditioning",
                "message": f"λ1 = {lam1:.3g} is close to zero (G near ω_m/8)",
            }
        )
    return report


def random_admissible(rng: np.random.Generator) -> DerivedParams:
    """Uniform draw with ω_m = 1, G ∈ (0, 0.12), G0 ∈ (0, 0.24), g ∈ (0, 0.05)."""
    G = rng.uniform(0.0, 0.12)
    G0 = rng.uniform(0.0, 0.24)
    g = rng.uniform(0.0, 0.05)
    return from_ratios(g, G, G0)


def identity_sweep(draws: int = 1000, seed: int = 0) -> VerificationReport:
    """verify_identities over random admissible draws; keeps the worst defect per identity."""
    rng = np.random.default_rng(seed)
    worst: dict[str, CheckResult] = {}
    ill_conditioned = False
    for _ in range(draws):
        params = random_admissible(rng)
        single = verify_identities(params)
        ill_conditioned |= single.ill_conditioned
        for check in single.checks:
            current = worst.get(check.name)
            if current is None or check.defect > current.defect:
                worst[check.name] = check
    report = VerificationReport("identity_sweep", list(worst.values()))
    report.ill_conditioned = ill_conditioned
    report.findings.append({"kind": "sweep", "draws": draws, "seed": seed})
    return report


def _random_interior_state(layout: ModeLayout, margin: int, rng) -> StateVector:
    indices = interior_indices(layout, margin)
    amplitudes = np.zeros(layout.total_dim, dtype=complex)
    amplitudes[indices] = rng.normal(size=indices.size) + 1j * rng.normal(size=indices.size)
    return StateVector(layout, amplitudes, normalize=True)


def verify_bogoliubov(
    params: DerivedParams, mech_dim: int = 24, trials: int = 20, seed: int = 0
) -> VerificationReport:
    """Canonical commutators of B1, B2 on random interior states and the inverse map.

    Raises:
        TruncationTooSmall: if mech_dim < 24.
    """
    if mech_dim < MIN_BOGOLIUBOV_DIM:
        raise TruncationTooSmall(
            f"Bogoliubov check needs mechanical dims >= {MIN_BOGOLIUBOV_DIM}, got {mech_dim}"
        )
    report = VerificationReport("bogoliubov")
    layout = ModeLayout.of(("b1", mech_dim), ("b2", mech_dim))
    B1, B2 = bogoliubov_ops(params, layout)
    relations = {
        "B1_B1dag": (B1.commutator(B1.dag()), 1.0, "[B1, B1†] = 1"),
        "B2_B2dag": (B2.commutator(B2.dag()), 1.0, "[B2, B2†] = 1"),
        "B1_B2dag": (B1.commutator(B2.dag()), 0.0, "[B1, B2†] = 0"),
        "B1_B2": (B1.commutator(B2), 0.0, "[B1, B2] = 0"),
    }
    rng = np.random.default_rng(seed)
    states = [_random_interior_state(layout, 2, rng) for _ in range(trials)]
    for name, (op, target, expression) in relations.items():
        defect = max(abs(op.expect(state) - target) for state in states)
        report.add(
            CheckResult(
                name=name,
                expression=expression,
                defect=float(defect),
                tolerance=1e-9,
                passed=bool(defect < 1e-9),
                note=f"{trials} random interior states",
            )
        )

    b1_rec, b2_rec = inverse_bogoliubov(params, B1, B2)
    interior = interior_indices(layout, 1)
    for label, rec in (("b1", b1_rec), ("b2", b2_rec)):
        exact = annihilator(layout, label).toarray()[np.ix_(interior, interior)]
        defect = float(np.max(np.abs(rec.toarray()[np.ix_(interior, interior)] - exact)))
        report.add(
            CheckResult(
                name=f"inverse_{label}",
                expression=f"{label} reconstructed from (B1, B2)",
                defect=defect,
                tolerance=1e-12,
                passed=defect < 1e-12,
            )
        )
    return report


def stationary_amplitudes(params: DerivedParams, n1: int, n2: int) -> tuple[float, float]:
    """Stationary (B1, B2) from setting their Heisenberg equations to zero."""
    drive1 = 0.5 * params.g * (math.sqrt(params.nu_minus_one) + math.sqrt(params.nu + 1.0)) * (n1 - n2)
    drive2 = params.g * (n1 + n2) / math.sqrt(2.0)
    return drive1 / params.lambda1, drive2 / params.lambda2


def verify_elimination(
    params: DerivedParams, n1: int, n2: int, mech_dim: int = 40, tolerance: float = 1e-8
) -> VerificationReport:
    """Compare the stationary amplitudes with ⟨B1⟩, ⟨B2⟩ in the exact sector ground state."""
    report = VerificationReport("elimination")
    op = sector_operator(Variant.FULL_INNER, params, n1, n2, mech_dim)
    _, vectors, _ = lowest_levels(op, 1, vectors=True)
    ground = StateVector(op.layout, vectors[:, 0], normalize=True)
    B1, B2 = bogoliubov_ops(params, op.layout)
    expected = stationary_amplitudes(params, n1, n2)
    for name, B, target in (("B1", B1, expected[0]), ("B2", B2, expected[1])):
        value = B.expect(ground)
        defect = abs(value - target)
        report.add(
            CheckResult(
                name=f"stationary_{name}",
                expression=f"⟨{name}⟩ = stationary amplitude",
                defect=float(defect),
                tolerance=tolerance,
                passed=bool(defect < tolerance),
                lhs=float(value.real),
                rhs=float(target),
                note=f"sector ({n1}, {n2}), mech_dim {mech_dim}",
            )
        )
    return report


def verify_outer_frequency(
    params: DerivedParams, mech_dim: int = 60, levels: int = 6, tolerance: float = 1e-8
) -> VerificationReport:
    """Level spacings of the undriven outer mode against ω_s = sqrt(ω_m(ω_m − 4G0))."""
    report = VerificationReport("outer_frequency")
    w, _, _ = lowest_levels(outer_mode_operator(params, 0, mech_dim), levels + 1)
    for k, spacing in enumerate(np.diff(w)[:levels]):
        report.add(
            _check(
                f"spacing_{k}",
                f"E{k + 1} − E{k} = ω_s",
                float(spacing),
                params.omega_s,
                tolerance=tolerance,
            )
        )
    return report


def verify_outer_sign(
    params: DerivedParams, n_max: int = 3, mech_dim: int = 60, tolerance: float = 1e-8
) -> VerificationReport:
    """Side-by-side outer self-phase coefficient: stated (+g_s²/ω_s) against the oracle fit.

    The magnitude must agree; the sign is reported as a finding.
    """
    report = VerificationReport("outer_sign")
    fit = fit_effective(Variant.FULL_OUTER, params, n_max, mech_dim)
    stated = params.g_s**2 / params.omega_s
    for name, fitted in (("c11", fit.c11), ("c22", fit.c22)):
        defect = abs(abs(fitted) - stated)
        report.add(
            CheckResult(
                name=f"outer_magnitude_{name}",
                expression="|fitted n² coefficient| = g_s²/ω_s",
                defect=float(defect),
                tolerance=tolerance,
                passed=bool(defect < tolerance),
                lhs=float(fitted),
                rhs=float(stated),
            )
        )
    report.findings.append(
        {
            "kind": "appendix_a_sign",
            "stated_coefficient": stated,
            "oracle_coefficient": fit.c11,
            "oracle_sign": "negative" if fit.c11 < 0 else "positive",
            "configured_convention": params.appendix_a_sign,
            "configured_coefficient": params.sigma_outer,
            "agrees_with_configured": bool(np.sign(fit.c11) == np.sign(params.sigma_outer))
            if params.g
            else True,
            "message": (
                "the exact outer-sector energies carry the opposite sign to the stated "
                "+g_s²/ω_s coefficient; the magnitudes agree"
                if fit.c11 < 0
                else "the exact outer-sector energies agree in sign with +g_s²/ω_s"
            ),
        }
    )
    return report


def inner_fit_checks(
    params: DerivedParams, fit: EffectiveFit, tolerance: float = 1e-8
) -> list[CheckResult]:
    """Compare an inner-sector fit with γ and −σ_inner."""
    checks = []
    for name, fitted, target in (
        ("c12_gamma", fit.c12, params.gamma),
        ("c11_sigma", fit.c11, -params.sigma_inner),
        ("c22_sigma", fit.c22, -params.sigma_inner),
    ):
        defect = abs(fitted - target)
        checks.append(
            CheckResult(
                name=name,
                expression="fitted coefficient = closed form",
                defect=float(defect),
                tolerance=tolerance,
                passed=bool(defect < tolerance),
                lhs=float(fitted),
                rhs=float(target),
            )
        )
    checks.append(
        CheckResult(
            name="fit_residual",
            expression="max |fit − E0| over the grid",
            defect=fit.residual,
            tolerance=tolerance,
            passed=fit.residual < tolerance,
        )
    )
    return checks


def verify_inner_fit(
    params: DerivedParams,
    n_max: int = 3,
    mech_dim: int = 60,
    jobs: int = 1,
    tolerance: float = 1e-8,
) -> tuple[VerificationReport, EffectiveFit]:
    """Oracle fit of the inner sectors against γ and −σ_inner."""
    fit = fit_effective(Variant.FULL_INNER, params, n_max, mech_dim, jobs)
    return VerificationReport("inner_fit", inner_fit_checks(params, fit, tolerance)), fit


def sector_suite(
    params: DerivedParams,
    n_max: int = 3,
    mech_dim: int = 60,
    jobs: int = 1,
    on_done: Optional[Callable[[], None]] = None,
) -> tuple[VerificationReport, list[SectorSpectrum]]:
    """Every sector-based check; a failing sector is recorded and the rest still run."""
    report = VerificationReport("sectors")
    points = list(itertools.product(range(n_max + 1), repeat=2))
    sentinels = truncation_sentinels(n_max)

    def run(point):
        try:
            result = sector_ground_energy(
                Variant.FULL_INNER, params, *point, mech_dim, n_levels=1,
                check_truncation=point in sentinels,
            )
        except SUITE_ERRORS as e:
            result = e
        if on_done:
            on_done()
        return result

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, points))
    else:
        results = [run(point) for point in points]

    sectors = []
    for (n1, n2), result in zip(points, results):
        if isinstance(result, SUITE_ERRORS):
            report.add(failed_check(f"sector_{n1}_{n2}", result))
        else:
            sectors.append(result)
    if len(sectors) == len(points):
        report.checks.extend(inner_fit_checks(params, fit_sectors(sectors)))

    subchecks = (
        ("outer_frequency", lambda: verify_outer_frequency(params, mech_dim)),
        ("outer_sign", lambda: verify_outer_sign(params, n_max, mech_dim)),
        ("elimination", lambda: verify_elimination(params, 1, 0, min(mech_dim, 30))),
    )
    for name, check in subchecks:
        try:
            sub = check()
        except SUITE_ERRORS as e:
            report.add(failed_check(name, e))
            continue
        report.checks.extend(sub.checks)
        report.findings.extend(sub.findings)
    return report, sectors


def failed_check(name: str, error: Exception) -> CheckResult:
    return CheckResult(
        name=name,
        expression=type(error).__name__,
        defect=math.inf,
        tolerance=0.0,
        passed=False,
        note=str(error),
    )
