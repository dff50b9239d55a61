"""Plain-text run configuration: `key = value` lines with an optional
`[dimensionless]` section."""

from dataclasses import dataclass, field, replace
import hashlib
import logging
from pathlib import Path
from typing import Optional
from .errors import ConfigError
from .params import DerivedParams, PhysicalConfig, derive_params, from_ratios

logger = logging.getLogger(__name__)

PHYSICAL_KEYS = (
    "omega_c",
    "omega_m",
    "mass",
    "cavity_length",
    "r0",
    "R0",
    "q1",
    "q2",
    "q01",
    "q00",
    "q02",
    "q22",
)
OPTIONAL_PHYSICAL_KEYS = ("coulomb_k", "hbar", "geometry_ratio_max")
RATIO_KEYS = ("g_over_wm", "G_over_wm", "G0_over_wm")
DIMENSIONLESS_KEYS = RATIO_KEYS + (
    "delta1",
    "delta2",
    "T",
    "alpha",
    "n_true",
    "n_search_max",
    "probe_dim",
)
INT_KEYS = ("n_true", "n_search_max", "probe_dim")
SECTIONS = ("", "dimensionless")


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration file.

    `physical` is None for purely dimensionless runs. `ratios` holds the
    `[dimensionless]` overrides of g/ω_m, G/ω_m and G0/ω_m that were present.
    """

    path: Optional[Path] = None
    sha256: str = ""
    physical: Optional[PhysicalConfig] = None
    ratios: dict = field(default_factory=dict)
    delta1: float = 0.0
    delta2: float = 0.0
    T: Optional[float] = None
    alpha: Optional[complex] = None
    n_true: Optional[int] = None
    n_search_max: Optional[int] = None
    probe_dim: Optional[int] = None

    def derive(self, appendix_a_sign: str = "paper") -> DerivedParams:
        """Derived parameters with the ratio overrides and rotating-frame detunings applied."""
        delta = (self.delta1, self.delta2)
        if self.physical is None:
            return from_ratios(
                self.ratios["g_over_wm"],
                self.ratios["G_over_wm"],
                self.ratios["G0_over_wm"],
                delta_override=delta,
                appendix_a_sign=appendix_a_sign,
            )

        params = derive_params(
            self.physical, appendix_a_sign=appendix_a_sign, delta_override=delta
        )
        if not self.ratios:
            return params
        logger.info("Overriding derived ratios with %s", self.ratios)
        overridden = from_ratios(
            self.ratios.get("g_over_wm", params.g),
            self.ratios.get("G_over_wm", params.G_inner),
            self.ratios.get("G0_over_wm", params.G_outer),
            delta_override=delta,
            appendix_a_sign=appendix_a_sign,
        )
        return replace(overridden, si=params.si)


def _parse_value(key: str, raw: str, line_no: int):
    try:
        if key == "alpha":
            return complex(raw.replace(" ", ""))
        if key in INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"line {line_no}: value {raw!r} for key '{key}' is not a valid number"
        ) from None


def parse_config_text(text: str) -> dict[str, dict]:
    """Split the file into `{section: {key: value}}`, the top level under ""."""
    sections: dict[str, dict] = {name: {} for name in SECTIONS}
    current = ""
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in SECTIONS:
                raise ConfigError(f"line {line_no}: unknown section [{current}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        allowed = (
            PHYSICAL_KEYS + OPTIONAL_PHYSICAL_KEYS if current == "" else DIMENSIONLESS_KEYS
        )
        if key not in allowed:
            where = f"[{current}]" if current else "top level"
            raise ConfigError(f"line {line_no}: unknown key '{key}' at {where}")
        if key in sections[current]:
            raise ConfigError(f"line {line_no}: duplicate key '{key}'")
        sections[current][key] = _parse_value(key, value.strip(), line_no)
    return sections


def build_run_config(
    sections: dict[str, dict], path: Optional[Path] = None, sha256: str = ""
) -> RunConfig:
    top = sections.get("", {})
    dimensionless = sections.get("dimensionless", {})

    physical = None
    if top:
        missing = [key for key in PHYSICAL_KEYS if key not in top]
        if missing:
            raise ConfigError(f"missing required key '{missing[0]}'")
        physical = PhysicalConfig(**top)

    ratios = {key: dimensionless[key] for key in RATIO_KEYS if key in dimensionless}
    if physical is None:
        missing = [key for key in RATIO_KEYS if key not in ratios]
        if missing:
            raise ConfigError(
                f"missing required key '{missing[0]}' "
                "(no physical parameters given, [dimensionless] ratios are required)"
            )

    return RunConfig(
        path=path,
        sha256=sha256,
        physical=physical,
        ratios=ratios,
        delta1=dimensionless.get("delta1", 0.0),
        delta2=dimensionless.get("delta2", 0.0),
        T=dimensionless.get("T"),
        alpha=dimensionless.get("alpha"),
        n_true=dimensionless.get("n_true"),
        n_search_max=dimensionless.get("n_search_max"),
        probe_dim=dimensionless.get("probe_dim"),
    )


def load_config(path: Path) -> RunConfig:
    """Read and validate a configuration file.

    Raises:
        ConfigError: unreadable file, malformed line or missing key.
        SignViolation, GeometryViolation: physical parameters break the model assumptions.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"config file {path} is not UTF-8 text") from e

    digest = hashlib.sha256(data).hexdigest()
    logger.debug("Loaded config %s (sha256 %s)", path, digest)
    return build_run_config(parse_config_text(text), path=Path(path), sha256=digest)
