import math
from pathlib import Path
from src.qndpy.shared.params import COULOMB_K, PhysicalConfig

OMEGA_M = 1e6
MASS = 1e-9
CAVITY_LENGTH = 1e-2
R0_INNER = 1e-5
R0_OUTER = 2e-5

DIMENSIONLESS_CONFIG = """\
# ratios only
[dimensionless]
g_over_wm = 0.01
G_over_wm = 0.05
G0_over_wm = 0.0625
delta2 = 0.0
alpha = 2
n_true = 2
n_search_max = 5
probe_dim = 40
"""


def charge_pair(ratio: float, distance: float) -> tuple[float, float]:
    """Opposite charges giving the spring shift `ratio`·ω_m at separation `distance`."""
    Q = 2.0 * MASS * OMEGA_M**2 * ratio
    rho = -Q * distance**3
    q = math.sqrt(-rho / COULOMB_K)
    return q, -q


def physical_config(G: float = 0.05, G0: float = 0.05, **overrides) -> PhysicalConfig:
    q1, q2 = charge_pair(G, R0_INNER)
    q01, q00 = charge_pair(G0, R0_OUTER)
    values = dict(
        omega_c=1e15,
        omega_m=OMEGA_M,
        mass=MASS,
        cavity_length=CAVITY_LENGTH,
        r0=R0_INNER,
        R0=R0_OUTER,
        q1=q1,
        q2=q2,
        q01=q01,
        q00=q00,
        q02=q00,
        q22=q01,
    )
    values.update(overrides)
    return PhysicalConfig(**values)


def physical_config_text(G: float = 0.05, G0: float = 0.05) -> str:
    cfg = physical_config(G, G0)
    lines = [
        f"{name} = {getattr(cfg, name)!r}"
        for name in (
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
    ]
    return "\n".join(lines) + "\n"


def write_config(directory: str, text: str, name: str = "run.cfg") -> Path:
    path = Path(directory) / name
    path.write_text(text, encoding="utf-8")
    return path
