"""Hamiltonian variants of the coupled-cavity system as `FockOperator`s.

Mode labels: photonic `a1`, `a2`; inner mechanical `b1`, `b2` (charges q1, q2);
outer mechanical `b01`, `b02` (charged bodies). Units: ħ = 1, frequencies in
units of ω_m. Detuning terms use `params.delta_override`.
"""

from dataclasses import dataclass
from enum import Enum
import json
import logging
import math
from pathlib import Path
import scipy.sparse as sp
from .errors import DimensionMismatch, NonHermitian
from .fock import (
    FockOperator,
    ModeLayout,
    annihilator,
    identity,
    number_op,
)
from .params import DerivedParams, check_stability, params_hash

logger = logging.getLogger(__name__)

PHOTONIC = ("a1", "a2")
INNER = ("b1", "b2")
OUTER = ("b01", "b02")
MECHANICAL = INNER + OUTER

# Extra levels per mechanical mode used before projecting a quadratic operator
PROJECTION_PADDING = 2

NUMBER_CONSERVATION_RTOL = 1e-12


class Variant(str, Enum):
    FULL_INNER = "FullInner"
    FULL_OUTER = "FullOuter"
    FULL_COMBINED = "FullCombined"
    EFFECTIVE_IDEAL = "EffectiveIdeal"
    EFFECTIVE_SIMPLIFIED = "EffectiveSimplified"
    EFFECTIVE_COMBINED = "EffectiveCombined"

    @property
    def is_effective(self) -> bool:
        return self.name.startswith("EFFECTIVE")


@dataclass(frozen=True)
class HamiltonianModel:
    """A built Hamiltonian, checked for Hermiticity and photon-number conservation."""

    variant: Variant
    operator: FockOperator
    params: DerivedParams
    number_conserving: bool = True

    def __post_init__(self):
        defect = self.operator.hermiticity_defect()
        if defect > 1e-12:
            raise NonHermitian(f"{self.variant.value} Hamiltonian is not Hermitian ({defect:.3g})")
        if self.number_conserving:
            defect = self.number_conservation_defect()
            if defect > NUMBER_CONSERVATION_RTOL:
                raise ValueError(
                    f"{self.variant.value} Hamiltonian does not conserve photon number ({defect:.3g})"
                )

    @property
    def layout(self) -> ModeLayout:
        return self.operator.layout

    def number_conservation_defect(self) -> float:
        """max|[H, n_i]| over photonic modes, relative to max|H|."""
        scale = self.operator.max_abs() or 1.0
        defects = [
            self.operator.commutator(number_op(self.layout, label)).max_abs() / scale
            for label in PHOTONIC
            if label in self.layout
        ]
        return max(defects, default=0.0)

    def export(self, path: Path) -> Path:
        """Write a JSON header line followed by `row col re im` triplets."""
        header = {
            "variant": self.variant.value,
            "params_hash": params_hash(self.params),
            "layout": [list(mode) for mode in self.layout.modes],
            "storage": self.operator.storage,
        }
        path = Path(path)
        path.write_text(
            json.dumps(header) + "\n" + self.operator.to_triplets() + "\n", encoding="utf-8"
        )
        return path


def _quadrature(layout: ModeLayout, label: str) -> FockOperator:
    b = annihilator(layout, label)
    return b + b.dag()


def _squares(layout: ModeLayout, label: str) -> FockOperator:
    b = annihilator(layout, label)
    return b @ b + b.dag() @ b.dag()


def _projected(layout: ModeLayout, build) -> FockOperator:
    """Build on a layout padded on its mechanical modes, then project back."""
    mechanical = [label for label in layout.labels if label not in PHOTONIC]
    padded = layout.padded(mechanical, PROJECTION_PADDING)
    return build(padded).restrict(layout)


def _photon_numbers(layout: ModeLayout, photons):
    """Number operators of a1, a2, or the scalar occupations of a fixed sector."""
    if photons is None:
        return number_op(layout, "a1"), number_op(layout, "a2")
    return photons


def _times(n, op: FockOperator) -> FockOperator:
    return n @ op if isinstance(n, FockOperator) else n * op


def _detuning(params: DerivedParams, layout: ModeLayout, photons=None) -> FockOperator:
    n1, n2 = _photon_numbers(layout, photons)
    return _times(n1, params.delta1 * identity(layout)) + _times(
        n2, params.delta2 * identity(layout)
    )


def _inner_terms(params: DerivedParams, layout: ModeLayout, photons=None) -> FockOperator:
    w, G, g = params.omega_m, params.G_inner, params.g
    n1, n2 = _photon_numbers(layout, photons)
    b1, b2 = annihilator(layout, "b1"), annihilator(layout, "b2")
    x1, x2 = _quadrature(layout, "b1"), _quadrature(layout, "b2")
    return (
        (w - 2.0 * G) * (b1.dag() @ b1 + b2.dag() @ b2)
        - g * _times(n1, x1)
        - g * _times(n2, x2)
        - G * (_squares(layout, "b1") + _squares(layout, "b2") - 2.0 * (x1 @ x2))
    )


def _outer_terms(params: DerivedParams, layout: ModeLayout, photons=None) -> FockOperator:
    w, G0, g = params.omega_m, params.G_outer, params.g
    n1, n2 = _photon_numbers(layout, photons)
    b01, b02 = annihilator(layout, "b01"), annihilator(layout, "b02")
    return (
        (w - 2.0 * G0) * (b01.dag() @ b01 + b02.dag() @ b02)
        - g * _times(n1, _quadrature(layout, "b01"))
        - g * _times(n2, _quadrature(layout, "b02"))
        - G0 * (_squares(layout, "b01") + _squares(layout, "b02"))
    )


_TERMS = {
    "FullInner": (INNER, lambda p, lay, ph: _inner_terms(p, lay, ph)),
    "FullOuter": (OUTER, lambda p, lay, ph: _outer_terms(p, lay, ph)),
    "FullCombined": (
        MECHANICAL,
        lambda p, lay, ph: _inner_terms(p, lay, ph) + _outer_terms(p, lay, ph),
    ),
}


def _build_full(variant: "Variant", params: DerivedParams, layout: ModeLayout) -> HamiltonianModel:
    mechanical, terms = _TERMS[variant.value]
    layout.require(*PHOTONIC, *mechanical)
    operator = _projected(
        layout, lambda lay: terms(params, lay, None) + _detuning(params, lay)
    )
    return HamiltonianModel(variant, operator, params)


def build_full_inner(params: DerivedParams, layout: ModeLayout) -> HamiltonianModel:
    """H_I plus detunings on (a1, a2, b1, b2).

    Raises:
        MissingMode: if any of a1, a2, b1, b2 is absent from the layout.
    """
    return _build_full(Variant.FULL_INNER, params, layout)


def build_full_outer(params: DerivedParams, layout: ModeLayout) -> HamiltonianModel:
    """H_Q plus detunings on (a1, a2, b01, b02)."""
    return _build_full(Variant.FULL_OUTER, params, layout)


def build_full_combined(params: DerivedParams, layout: ModeLayout) -> HamiltonianModel:
    return _build_full(Variant.FULL_COMBINED, params, layout)


def _bogoliubov_coefficients(params: DerivedParams) -> tuple[float, float]:
    # sqrt((ν+1)/2) and sqrt((ν−1)/2); their squares differ by one
    return math.sqrt((params.nu + 1.0) / 2.0), math.sqrt(params.nu_minus_one / 2.0)


def bogoliubov_ops(params: DerivedParams, layout: ModeLayout) -> tuple[FockOperator, FockOperator]:
    """Matrix forms of the normal-mode operators B1 and B2.

    Raises:
        StabilityViolation: if ω_m ≤ 8G (ν undefined).
    """
    check_stability(params.G_inner, params.G_outer, params.omega_m)
    layout.require(*INNER)
    b1, b2 = annihilator(layout, "b1"), annihilator(layout, "b2")
    p = math.sqrt(params.nu + 1.0) / 2.0
    m = math.sqrt(params.nu_minus_one) / 2.0
    B1 = p * b1 - m * b1.dag() - p * b2 + m * b2.dag()
    B2 = (b1 + b2) / math.sqrt(2.0)
    return B1, B2


def inverse_bogoliubov(
    params: DerivedParams, B1: FockOperator, B2: FockOperator
) -> tuple[FockOperator, FockOperator]:
    """Recover (b1, b2) from (B1, B2)."""
    c, s = _bogoliubov_coefficients(params)
    b_minus = c * B1 + s * B1.dag()
    root2 = math.sqrt(2.0)
    return (B2 + b_minus) / root2, (B2 - b_minus) / root2


def build_full_inner_bogoliubov(params: DerivedParams, layout: ModeLayout) -> HamiltonianModel:
    """H_I in the normal modes: λ1 B1†B1 + λ2 B2†B2 − χ minus the drive terms.

    Equal element-wise to `build_full_inner` on the same layout.
    """
    layout.require(*PHOTONIC, *INNER)
    c, s = _bogoliubov_coefficients(params)
    g = params.g

    def build(lay: ModeLayout) -> FockOperator:
        B1, B2 = bogoliubov_ops(params, lay)
        n1, n2 = number_op(lay, "a1"), number_op(lay, "a2")
        drive1 = (g * (c + s) / math.sqrt(2.0)) * ((n1 - n2) @ (B1 + B1.dag()))
        drive2 = (g / math.sqrt(2.0)) * ((n1 + n2) @ (B2 + B2.dag()))
        return (
            params.lambda1 * (B1.dag() @ B1)
            + params.lambda2 * (B2.dag() @ B2)
            - params.chi * identity(lay)
            - drive1
            - drive2
            + _detuning(params, lay)
        )

    return HamiltonianModel(Variant.FULL_INNER, _projected(layout, build), params)


def build_squeezed_outer(params: DerivedParams, layout: ModeLayout) -> HamiltonianModel:
    """Squeezed-frame H_Q: ω_s b_s†b_s − g_s n (b_s† + b_s) per outer mode, constant excluded."""
    layout.require(*PHOTONIC, *OUTER)

    def build(lay: ModeLayout) -> FockOperator:
        total = _detuning(params, lay)
        for photon, mode in zip(PHOTONIC, OUTER):
            b = annihilator(lay, mode)
            total = total + params.omega_s * (b.dag() @ b)
            total = total - params.g_s * (number_op(lay, photon) @ _quadrature(lay, mode))
        return total

    return HamiltonianModel(Variant.FULL_OUTER, _projected(layout, build), params)


def effective_energy(params: DerivedParams, variant: Variant, n1, n2, sigma_scale: float = 1.0):
    """Eigenvalue of an effective Hamiltonian in the joint number state |n1, n2⟩."""
    energy = params.delta1 * n1 + params.delta2 * n2 + params.gamma * n1 * n2
    if variant == Variant.EFFECTIVE_SIMPLIFIED:
        energy = energy - sigma_scale * params.sigma_inner * (n1**2 + n2**2)
    elif variant == Variant.EFFECTIVE_COMBINED:
        energy = energy + sigma_scale * params.self_phase * (n1**2 + n2**2)
    elif variant != Variant.EFFECTIVE_IDEAL:
        raise ValueError(f"{variant} is not an effective variant")
    return energy


def probe_self_phase(params: DerivedParams, variant: Variant, sigma_scale: float = 1.0) -> float:
    """n2² coefficient of an effective Hamiltonian."""
    variant = Variant(variant)
    if variant == Variant.EFFECTIVE_SIMPLIFIED:
        return -sigma_scale * params.sigma_inner
    if variant == Variant.EFFECTIVE_COMBINED:
        return sigma_scale * params.self_phase
    return 0.0


def build_effective(
    params: DerivedParams, variant: Variant, layout: ModeLayout, sigma_scale: float = 1.0
) -> HamiltonianModel:
    """Diagonal effective Hamiltonian on (a1, a2).

    `sigma_scale` multiplies the self-phase terms (1 reproduces the derived
    coefficients, 0 removes them).
    """
    layout.require(*PHOTONIC)
    if layout.labels != PHOTONIC:
        raise DimensionMismatch(
            f"effective Hamiltonians act on {PHOTONIC} only, got {layout.labels}"
        )
    variant = Variant(variant)
    n1 = number_op(layout, "a1").diagonal().real
    n2 = number_op(layout, "a2").diagonal().real
    energies = effective_energy(params, variant, n1, n2, sigma_scale)
    operator = FockOperator(layout, sp.diags(energies, 0, format="csr"))
    return HamiltonianModel(variant, operator, params)


def sector_layout(variant: Variant, mech_dim: int) -> ModeLayout:
    mechanical, _ = _TERMS[Variant(variant).value]
    return ModeLayout.of(*((label, mech_dim) for label in mechanical))


def sector_operator(
    variant: Variant, params: DerivedParams, n1: int, n2: int, mech_dim: int
) -> FockOperator:
    """Mechanical-only block of a full Hamiltonian at photon numbers (n1, n2).

    Photon numbers enter as scalars; the detuning energy Δ1 n1 + Δ2 n2 stays
    as a constant so the block equals the (n1, n2) sector of the full operator.
    """
    variant = Variant(variant)
    if variant.is_effective:
        raise ValueError(f"{variant.value} has no mechanical sector")
    _, terms = _TERMS[variant.value]
    photons = (float(n1), float(n2))
    return _projected(
        sector_layout(variant, mech_dim),
        lambda lay: terms(params, lay, photons) + _detuning(params, lay, photons),
    )


def outer_mode_operator(params: DerivedParams, n: int, mech_dim: int) -> FockOperator:
    """Single outer mode at photon number n: (ω_m−2G0) b†b − g n (b† + b) − G0 (b² + b†²)."""
    w, G0, g = params.omega_m, params.G_outer, params.g

    def build(lay: ModeLayout) -> FockOperator:
        b = annihilator(lay, "b0")
        return (w - 2.0 * G0) * (b.dag() @ b) - (g * n) * _quadrature(lay, "b0") - G0 * _squares(
            lay, "b0"
        )

    return _projected(ModeLayout.of(("b0", mech_dim)), build)
