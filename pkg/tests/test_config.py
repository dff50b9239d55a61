import tempfile
import unittest
from pathlib import Path
from src.qndpy.shared.config import load_config, parse_config_text
from src.qndpy.shared.errors import ConfigError, SignViolation
from tests.helpers import DIMENSIONLESS_CONFIG, physical_config_text, write_config


class TestLoadConfig(unittest.TestCase):
    def test_dimensionless_config(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = write_config(tmp_dir, DIMENSIONLESS_CONFIG)
            run_config = load_config(path)

        self.assertIsNone(run_config.physical)
        self.assertEqual(run_config.alpha, 2 + 0j)
        self.assertEqual(run_config.n_true, 2)
        self.assertEqual(run_config.probe_dim, 40)
        self.assertEqual(len(run_config.sha256), 64)
        params = run_config.derive()
        self.assertEqual(params.g, 0.01)
        self.assertEqual(params.G_outer, 0.0625)

    def test_physical_config(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = write_config(tmp_dir, physical_config_text())
            params = load_config(path).derive()

        self.assertAlmostEqual(params.G_inner, 0.05, places=12)
        self.assertIsNotNone(params.si)

    def test_ratio_override_keeps_si_block(self):
        text = physical_config_text() + "[dimensionless]\nG0_over_wm = 0.1\n"
        with tempfile.TemporaryDirectory() as tmp_dir:
            params = load_config(write_config(tmp_dir, text)).derive("derived")

        self.assertEqual(params.G_outer, 0.1)
        self.assertAlmostEqual(params.G_inner, 0.05, places=12)
        self.assertIsNotNone(params.si)
        self.assertLess(params.sigma_outer, 0.0)

    def test_detunings_reach_params(self):
        text = DIMENSIONLESS_CONFIG.replace("delta2 = 0.0", "delta1 = 0.5\ndelta2 = 0.25")
        with tempfile.TemporaryDirectory() as tmp_dir:
            params = load_config(write_config(tmp_dir, text)).derive()

        self.assertEqual(params.delta_override, (0.5, 0.25))

    def test_missing_physical_key(self):
        text = "\n".join(
            line for line in physical_config_text().splitlines() if not line.startswith("q22")
        )
        with tempfile.TemporaryDirectory() as tmp_dir:
            with self.assertRaises(ConfigError) as ctx:
                load_config(write_config(tmp_dir, text))
        self.assertIn("missing required key 'q22'", str(ctx.exception))

    def test_missing_ratio_without_physical_block(self):
        text = "[dimensionless]\ng_over_wm = 0.01\nG_over_wm = 0.05\n"
        with tempfile.TemporaryDirectory() as tmp_dir:
            with self.assertRaises(ConfigError) as ctx:
                load_config(write_config(tmp_dir, text))
        self.assertIn("G0_over_wm", str(ctx.exception))

    def test_sign_violation_propagates(self):
        text = physical_config_text().replace("q2 = -", "q2 = ")
        with tempfile.TemporaryDirectory() as tmp_dir:
            with self.assertRaises(SignViolation):
                load_config(write_config(tmp_dir, text))

    def test_unreadable_file(self):
        with self.assertRaises(ConfigError):
            load_config(Path("/nonexistent/run.cfg"))


class TestParseConfigText(unittest.TestCase):
    def test_keys_are_case_sensitive(self):
        sections = parse_config_text("r0 = 1e-5\nR0 = 2e-5\n")

        self.assertEqual(sections[""], {"r0": 1e-5, "R0": 2e-5})

    def test_comments_and_blank_lines(self):
        sections = parse_config_text("# header\n\nmass = 1e-9  # kg\n")

        self.assertEqual(sections[""], {"mass": 1e-9})

    def test_complex_alpha(self):
        sections = parse_config_text("[dimensionless]\nalpha = 1 + 1j\n")

        self.assertEqual(sections["dimensionless"]["alpha"], 1 + 1j)

    def test_malformed_line(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text("mass 1e-9\n")
        self.assertIn("line 1", str(ctx.exception))

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text("mass = 1\nspin = 2\n")
        self.assertIn("line 2", str(ctx.exception))
        self.assertIn("spin", str(ctx.exception))

    def test_unknown_section(self):
        with self.assertRaises(ConfigError):
            parse_config_text("[lab]\n")

    def test_duplicate_key(self):
        with self.assertRaises(ConfigError):
            parse_config_text("mass = 1\nmass = 2\n")

    def test_non_numeric_value(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text("[dimensionless]\nn_true = two\n")
        self.assertIn("n_true", str(ctx.exception))


if __name__ == "__main__":
    unittest.main()
