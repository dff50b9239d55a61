import json
import tempfile
import unittest
from pathlib import Path
import numpy as np
from numpy.testing import assert_allclose
from src.qndpy.shared.errors import DimensionMismatch, MissingMode
from src.qndpy.shared.fock import ModeLayout, annihilator, number_op
from src.qndpy.shared.model import (
    Variant,
    bogoliubov_ops,
    build_effective,
    build_full_combined,
    build_full_inner,
    build_full_inner_bogoliubov,
    build_full_outer,
    build_squeezed_outer,
    effective_energy,
    inverse_bogoliubov,
    probe_self_phase,
    sector_operator,
)
from src.qndpy.shared.params import from_ratios, solve_cancellation

PARAMS = from_ratios(0.01, 0.05, 0.1).with_detuning(0.2, 0.3)


def photon_layout(dim: int = 4) -> ModeLayout:
    return ModeLayout.of(("a1", dim), ("a2", dim))


class TestFullHamiltonians(unittest.TestCase):
    def test_full_inner_conserves_photon_numbers(self):
        layout = ModeLayout.of(("a1", 3), ("a2", 3), ("b1", 6), ("b2", 6))
        model = build_full_inner(PARAMS, layout)

        self.assertEqual(model.variant, Variant.FULL_INNER)
        self.assertLess(model.operator.hermiticity_defect(), 1e-12)
        self.assertLess(model.number_conservation_defect(), 1e-12)

    def test_full_outer_and_combined(self):
        outer = build_full_outer(
            PARAMS, ModeLayout.of(("a1", 2), ("a2", 2), ("b01", 5), ("b02", 5))
        )
        combined = build_full_combined(
            PARAMS,
            ModeLayout.of(("a1", 2), ("a2", 2), ("b1", 3), ("b2", 3), ("b01", 3), ("b02", 3)),
        )

        self.assertLess(outer.number_conservation_defect(), 1e-12)
        self.assertLess(combined.number_conservation_defect(), 1e-12)

    def test_missing_mechanical_mode(self):
        with self.assertRaises(MissingMode):
            build_full_inner(PARAMS, ModeLayout.of(("a1", 2), ("a2", 2), ("b1", 4)))

    def test_sector_matches_full_block(self):
        layout = ModeLayout.of(("a1", 3), ("a2", 3), ("b1", 6), ("b2", 6))
        full = build_full_inner(PARAMS, layout).operator
        block = sector_operator(Variant.FULL_INNER, PARAMS, 2, 1, 6)

        assert_allclose(full.sector({"a1": 2, "a2": 1}).toarray(), block.toarray(), atol=1e-13)

    def test_projection_matches_larger_truncation(self):
        small = build_full_inner(PARAMS, ModeLayout.of(("a1", 2), ("a2", 2), ("b1", 5), ("b2", 5)))
        large = build_full_inner(PARAMS, ModeLayout.of(("a1", 2), ("a2", 2), ("b1", 9), ("b2", 9)))

        restricted = large.operator.restrict(small.layout)
        assert_allclose(restricted.toarray(), small.operator.toarray(), atol=1e-13)


class TestBogoliubov(unittest.TestCase):
    def test_normal_mode_form_equals_full_inner(self):
        layout = ModeLayout.of(("a1", 3), ("a2", 3), ("b1", 7), ("b2", 7))
        direct = build_full_inner(PARAMS, layout).operator
        normal = build_full_inner_bogoliubov(PARAMS, layout).operator

        assert_allclose(normal.toarray(), direct.toarray(), atol=1e-12)

    def test_inverse_map(self):
        layout = ModeLayout.of(("b1", 8), ("b2", 8))
        B1, B2 = bogoliubov_ops(PARAMS, layout)
        b1, b2 = inverse_bogoliubov(PARAMS, B1, B2)

        self.assertTrue(b1.allclose(annihilator(layout, "b1"), atol=1e-12))
        self.assertTrue(b2.allclose(annihilator(layout, "b2"), atol=1e-12))

    def test_squeezed_outer_spacing(self):
        params = from_ratios(0.0, 0.05, 0.1)
        layout = ModeLayout.of(("a1", 2), ("a2", 2), ("b01", 6), ("b02", 6))
        model = build_squeezed_outer(params, layout)

        vacuum_photons = model.operator.sector({"a1": 0, "a2": 0}).diagonal().real
        self.assertAlmostEqual(sorted(set(np.round(vacuum_photons, 12)))[1], params.omega_s)


class TestEffectiveHamiltonians(unittest.TestCase):
    def test_ideal_is_diagonal_cross_kerr(self):
        layout = photon_layout()
        model = build_effective(PARAMS, Variant.EFFECTIVE_IDEAL, layout)
        n1 = number_op(layout, "a1").diagonal().real
        n2 = number_op(layout, "a2").diagonal().real

        self.assertTrue(model.operator.is_diagonal())
        assert_allclose(
            model.operator.diagonal().real,
            0.2 * n1 + 0.3 * n2 + PARAMS.gamma * n1 * n2,
            atol=1e-15,
        )

    def test_simplified_self_phase(self):
        layout = photon_layout()
        model = build_effective(PARAMS, Variant.EFFECTIVE_SIMPLIFIED, layout)
        ideal = build_effective(PARAMS, Variant.EFFECTIVE_IDEAL, layout)
        n1 = number_op(layout, "a1").diagonal().real
        n2 = number_op(layout, "a2").diagonal().real

        assert_allclose(
            (model.operator - ideal.operator).diagonal().real,
            -PARAMS.sigma_inner * (n1**2 + n2**2),
            atol=1e-15,
        )

    def test_sigma_scale_zero_reduces_to_ideal(self):
        layout = photon_layout()
        scaled = build_effective(PARAMS, Variant.EFFECTIVE_SIMPLIFIED, layout, sigma_scale=0.0)
        ideal = build_effective(PARAMS, Variant.EFFECTIVE_IDEAL, layout)

        self.assertTrue(scaled.operator.allclose(ideal.operator, atol=0.0))

    def test_cancellation_makes_combined_ideal(self):
        G = 0.05
        params = from_ratios(0.01, G, solve_cancellation(G), appendix_a_sign="paper")
        layout = photon_layout(11)
        combined = build_effective(params, Variant.EFFECTIVE_COMBINED, layout)
        ideal = build_effective(params, Variant.EFFECTIVE_IDEAL, layout)

        self.assertTrue(combined.operator.allclose(ideal.operator, atol=1e-12))

    def test_derived_sign_does_not_cancel(self):
        G = 0.05
        params = from_ratios(0.01, G, solve_cancellation(G), appendix_a_sign="derived")

        self.assertAlmostEqual(
            probe_self_phase(params, Variant.EFFECTIVE_COMBINED),
            -2.0 * params.sigma_inner,
            delta=1e-18,
        )

    def test_rejects_mechanical_modes(self):
        layout = ModeLayout.of(("a1", 2), ("a2", 2), ("b1", 2))
        with self.assertRaises(DimensionMismatch):
            build_effective(PARAMS, Variant.EFFECTIVE_IDEAL, layout)

    def test_rejects_full_variant(self):
        with self.assertRaises(ValueError):
            effective_energy(PARAMS, Variant.FULL_INNER, 1, 1)


class TestExport(unittest.TestCase):
    def test_header_and_triplets(self):
        model = build_effective(PARAMS, Variant.EFFECTIVE_IDEAL, photon_layout(2))
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = model.export(Path(tmp_dir) / "h.txt")
            lines = path.read_text(encoding="utf-8").splitlines()

        header = json.loads(lines[0])
        self.assertEqual(header["variant"], "EffectiveIdeal")
        self.assertEqual(header["layout"], [["a1", 2], ["a2", 2]])
        rows = [line.split() for line in lines[1:]]
        self.assertEqual([(int(r[0]), int(r[1])) for r in rows], [(1, 1), (2, 2), (3, 3)])


if __name__ == "__main__":
    unittest.main()
