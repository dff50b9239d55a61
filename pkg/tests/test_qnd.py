import itertools
import math
import unittest
from dataclasses import replace
from hypothesis import given, settings, strategies as st
import numpy as np
from src.qndpy.shared.errors import OutOfRange, PhaseAliasing, TruncationTooSmall
from src.qndpy.shared.fock import ModeLayout, coherent_amplitudes, coherent_state
from src.qndpy.shared.model import Variant
from src.qndpy.shared.params import from_ratios, solve_cancellation
from src.qndpy.shared.qnd import (
    Backend,
    ProtocolConfig,
    apply_beam_splitter,
    beam_splitter,
    estimate_n,
    nearest_coherent_fidelity,
    recommended_time,
    run_protocol,
    sweep,
)

PARAMS = from_ratios(0.01, 0.05, 0.0)
ALPHA = 2.0


def protocol(n_true: int, **overrides) -> ProtocolConfig:
    values = dict(
        params=PARAMS,
        n_true=n_true,
        alpha=ALPHA,
        T=recommended_time(PARAMS, 0.0, 5),
        variant=Variant.EFFECTIVE_IDEAL,
        backend=Backend.FOCK,
        probe_dim=40,
        n_search_max=5,
    )
    values.update(overrides)
    return ProtocolConfig(**values)


class TestBeamSplitter(unittest.TestCase):
    def test_single_input(self):
        out2, out3 = beam_splitter(0.0, 2.0)

        self.assertAlmostEqual(out2, 2j / math.sqrt(2))
        self.assertAlmostEqual(out3, 2 / math.sqrt(2))

    def test_balanced_interferometer_routes_to_mode_two(self):
        out2, out3 = beam_splitter(*beam_splitter(0.0, 2.0))

        self.assertAlmostEqual(abs(out2) ** 2, 4.0)
        self.assertAlmostEqual(abs(out3), 0.0)

    def test_fock_splitter_matches_amplitude_map(self):
        layout = ModeLayout.of(("a2", 20), ("a3", 20))
        state = apply_beam_splitter(coherent_state(layout, "a3", 1.0))
        expected2, expected3 = beam_splitter(0.0, 1.0)

        rho2 = state.reduced_density_matrix(["a2"])
        rho3 = state.reduced_density_matrix(["a3"])
        c2 = coherent_amplitudes(expected2, 20)
        c3 = coherent_amplitudes(expected3, 20)
        self.assertAlmostEqual(np.vdot(c2, rho2 @ c2).real, 1.0, delta=1e-9)
        self.assertAlmostEqual(np.vdot(c3, rho3 @ c3).real, 1.0, delta=1e-9)


class TestEstimator(unittest.TestCase):
    def test_inverts_ideal_signal(self):
        T = recommended_time(PARAMS, 0.0, 5)
        for n in range(6):
            D = ALPHA**2 * math.cos(T * PARAMS.gamma * n)
            estimate = estimate_n(D, ALPHA, T, 0.0, PARAMS.gamma)
            self.assertEqual(estimate.n_est, n)
            self.assertAlmostEqual(estimate.n_est_real, n, delta=1e-8)
            self.assertFalse(estimate.ambiguous)

    @settings(deadline=None)
    @given(n=st.integers(0, 5), delta2=st.floats(0.0, 1e-3), alpha=st.floats(0.5, 4.0))
    def test_recovers_n_inside_phase_window(self, n, delta2, alpha):
        T = recommended_time(PARAMS, delta2, 5)
        D = alpha**2 * math.cos(T * (delta2 + PARAMS.gamma * n))

        self.assertEqual(estimate_n(D, alpha, T, delta2, PARAMS.gamma).n_est, n)

    def test_first_order_sensitivity(self):
        T = recommended_time(PARAMS, 0.0, 5)
        n = 2
        theta = T * PARAMS.gamma * n
        D = ALPHA**2 * math.cos(theta) + 1e-3 * ALPHA**2
        estimate = estimate_n(D, ALPHA, T, 0.0, PARAMS.gamma)

        bound = 1e-3 / (T * PARAMS.gamma * math.sin(theta))
        deviation = abs(estimate.n_est_real - n)
        self.assertEqual(estimate.n_est, n)
        self.assertLessEqual(deviation, 1.01 * bound)
        self.assertGreaterEqual(deviation, 0.99 * bound)

    def test_out_of_range_signal(self):
        with self.assertRaises(OutOfRange):
            estimate_n(5.0, ALPHA, 1.0, 0.0, PARAMS.gamma)

    def test_zero_cross_kerr(self):
        with self.assertRaises(OutOfRange):
            estimate_n(1.0, ALPHA, 1.0, 0.0, 0.0)

    def test_phase_window(self):
        T = 3.0 * recommended_time(PARAMS, 0.0, 5)
        with self.assertRaises(PhaseAliasing):
            estimate_n(1.0, ALPHA, T, 0.0, PARAMS.gamma)

    def test_recommended_time_needs_positive_rate(self):
        with self.assertRaises(ValueError):
            recommended_time(PARAMS, -1.0, 5)


class TestBackendEquivalence(unittest.TestCase):
    def test_fock_signal_matches_closed_form(self):
        for n in range(6):
            record = run_protocol(protocol(n))
            theta = -record.T * PARAMS.gamma * n
            expected = ALPHA**2 * math.cos(theta)

            self.assertAlmostEqual(record.theta, theta)
            self.assertAlmostEqual(record.expect_D, expected, delta=1e-6 * ALPHA**2)
            self.assertEqual(record.n_est, n)
            self.assertGreater(record.fidelity_probe, 1.0 - 1e-8)

    def test_fock_matches_analytic_for_other_amplitudes(self):
        for alpha, n in itertools.product((1.0, 3.0), range(6)):
            with self.subTest(alpha=alpha, n=n):
                fock = run_protocol(protocol(n, alpha=alpha))
                analytic = run_protocol(protocol(n, alpha=alpha, backend=Backend.ANALYTIC))

                self.assertAlmostEqual(fock.expect_D, analytic.expect_D, delta=1e-6 * alpha**2)
                self.assertEqual(fock.n_est, n)

    def test_analytic_backend(self):
        for n in range(6):
            record = run_protocol(protocol(n, backend=Backend.ANALYTIC))
            expected = ALPHA**2 * math.cos(record.theta)

            self.assertAlmostEqual(record.expect_D, expected, delta=1e-12)
            self.assertEqual(record.n_est, n)
            self.assertEqual(record.bias, record.n_est_real - n)

    def test_probe_truncation(self):
        with self.assertRaises(TruncationTooSmall):
            protocol(0, probe_dim=20)

    def test_full_variants_are_rejected(self):
        with self.assertRaises(ValueError):
            protocol(0, variant=Variant.FULL_INNER)

    def test_analytic_backend_refuses_self_phase(self):
        with self.assertRaises(ValueError):
            run_protocol(
                protocol(0, backend=Backend.ANALYTIC, variant=Variant.EFFECTIVE_SIMPLIFIED)
            )

    def test_aliasing(self):
        cfg = protocol(1, backend=Backend.ANALYTIC, T=10.0 * recommended_time(PARAMS, 0.0, 5))
        with self.assertRaises(PhaseAliasing):
            run_protocol(cfg)

        record = run_protocol(replace(cfg, allow_aliasing=True))
        self.assertTrue(record.aliased)


class TestNondemolition(unittest.TestCase):
    def test_signal_photon_number_is_preserved(self):
        G = 0.05
        cancelling = from_ratios(0.01, G, solve_cancellation(G))
        for variant in (
            Variant.EFFECTIVE_IDEAL,
            Variant.EFFECTIVE_SIMPLIFIED,
            Variant.EFFECTIVE_COMBINED,
        ):
            for n in (0, 3, 5):
                record = run_protocol(protocol(n, params=cancelling, variant=variant))
                self.assertAlmostEqual(record.signal_number, n, delta=1e-10)

    def test_cancellation_restores_ideal_readout(self):
        G = 0.05
        cancelling = from_ratios(0.01, G, solve_cancellation(G))
        T = recommended_time(cancelling, 0.0, 5)
        combined = run_protocol(
            protocol(3, params=cancelling, T=T, variant=Variant.EFFECTIVE_COMBINED)
        )
        ideal = run_protocol(protocol(3, params=cancelling, T=T))

        self.assertAlmostEqual(combined.expect_D, ideal.expect_D, delta=1e-9)
        self.assertEqual(combined.n_est, 3)


class TestSelfPhaseDegradation(unittest.TestCase):
    def simplified(self, sigma_T: float, **overrides) -> ProtocolConfig:
        return protocol(
            1,
            T=sigma_T / PARAMS.sigma_inner,
            variant=Variant.EFFECTIVE_SIMPLIFIED,
            n_search_max=3,
            **overrides,
        )

    def test_fidelity_drops_with_self_phase(self):
        fidelity = {
            sigma_T: run_protocol(self.simplified(sigma_T)).fidelity_probe
            for sigma_T in (0.1, 0.5, math.pi / 2)
        }

        self.assertLess(fidelity[0.1], 1.0 - 1e-3)
        self.assertGreater(fidelity[0.1], fidelity[0.5])
        self.assertGreater(fidelity[0.5], fidelity[math.pi / 2])
        self.assertLess(fidelity[math.pi / 2], 0.6)

    def test_estimator_bias_for_two_component_cat(self):
        record = run_protocol(self.simplified(math.pi / 2))

        self.assertGreater(abs(record.bias), 0.1)
        self.assertAlmostEqual(record.signal_number, 1.0, delta=1e-10)

    def test_zero_sigma_scale_reproduces_ideal(self):
        for n in range(6):
            ideal = run_protocol(protocol(n))
            scaled = run_protocol(
                protocol(n, variant=Variant.EFFECTIVE_SIMPLIFIED, sigma_scale=0.0)
            )
            self.assertEqual(scaled.expect_D, ideal.expect_D)
            self.assertEqual(scaled.n_est, n)


class TestNearestCoherent(unittest.TestCase):
    def test_coherent_input(self):
        c = coherent_amplitudes(1.0 + 0.5j, 30)

        self.assertAlmostEqual(nearest_coherent_fidelity(c, 0.8 + 0.3j), 1.0, delta=1e-8)

    def test_number_state(self):
        c = np.zeros(30, dtype=complex)
        c[1] = 1.0

        # max over β of |β|² e^{−|β|²} is 1/e at |β| = 1
        self.assertAlmostEqual(nearest_coherent_fidelity(c, 0.9), math.exp(-1.0), delta=1e-6)


class TestShotNoise(unittest.TestCase):
    def test_seeded_samples_are_reproducible(self):
        cfg = protocol(2, backend=Backend.ANALYTIC, shot_noise_samples=5000, seed=7)
        first, second = run_protocol(cfg), run_protocol(cfg)

        self.assertEqual(first.expect_D, second.expect_D)
        self.assertNotEqual(first.expect_D, first.expect_D_exact)
        self.assertAlmostEqual(first.expect_D, first.expect_D_exact, delta=0.5)


class TestSweep(unittest.TestCase):
    def test_records_in_grid_order(self):
        template = protocol(0, backend=Backend.ANALYTIC)
        records = sweep(template, "n_true", [3, 0, 5, 1], jobs=2)

        self.assertEqual([record.n_true for record in records], [3, 0, 5, 1])
        self.assertEqual([record.n_est for record in records], [3, 0, 5, 1])

    def test_failures_are_recorded_per_point(self):
        template = protocol(0, backend=Backend.ANALYTIC)
        T = recommended_time(PARAMS, 0.0, 5)
        records = sweep(template, "T", [T, 10.0 * T])

        self.assertIsNone(records[0].error)
        self.assertTrue(records[1].aliased)
        self.assertIn("PhaseAliasing", records[1].error)

    def test_rejected_point_keeps_its_grid_value(self):
        template = protocol(0, alpha=2.0, backend=Backend.FOCK, probe_dim=40)
        records = sweep(template, "alpha", [1.0, 5.0])

        self.assertEqual([record.alpha for record in records], [1.0, 5.0])
        self.assertIsNone(records[0].error)
        self.assertIn("TruncationTooSmall", records[1].error)
        self.assertIsNone(records[1].n_est)

    def test_rejected_photon_number_is_recorded(self):
        records = sweep(protocol(0, backend=Backend.ANALYTIC), "n_true", [1, -1])

        self.assertEqual([record.n_true for record in records], [1, -1])
        self.assertIn("ValueError", records[1].error)

    def test_unknown_field(self):
        with self.assertRaises(ValueError):
            sweep(protocol(0), "probe_dim", [10])


if __name__ == "__main__":
    unittest.main()
