from typing import List
from rich.console import Console
from rich.table import Table
import typer
from ..shared.cli import run_options
from ..shared.fock import ModeLayout
from ..shared.model import (
    INNER,
    MECHANICAL,
    OUTER,
    PHOTONIC,
    Variant,
    build_effective,
    build_full_combined,
    build_full_inner,
    build_full_outer,
)
from ..shared.output import write_json
from ..shared.params import DerivedParams

FULL_BUILDERS = {
    Variant.FULL_INNER: (build_full_inner, INNER),
    Variant.FULL_OUTER: (build_full_outer, OUTER),
    Variant.FULL_COMBINED: (build_full_combined, MECHANICAL),
}

TABLE_FIELDS = (
    ("g", "g/ω_m"),
    ("G_inner", "G/ω_m"),
    ("G_outer", "G0/ω_m"),
    ("lambda1", "λ1/ω_m"),
    ("nu", "ν"),
    ("chi", "χ/ω_m"),
    ("r_squeeze", "r"),
    ("omega_s", "ω_s/ω_m"),
    ("gamma", "γ/ω_m"),
    ("sigma_inner", "σ_inner/ω_m"),
    ("sigma_outer", "σ_outer/ω_m"),
)


def params_table(params: DerivedParams) -> Table:
    table = Table(title="Derived parameters (units of ω_m, ħ = 1)")
    table.add_column("Symbol")
    table.add_column("Value", justify="right")
    for name, label in TABLE_FIELDS:
        table.add_row(label, f"{getattr(params, name):.10g}")
    if params.si:
        for name, label in (("d1", "d1 [m]"), ("d01", "d01 [m]"), ("g", "g [rad/s]")):
            table.add_row(label, f"{getattr(params.si, name):.10g}")
    return table


def export_hamiltonian(params: DerivedParams, variant: Variant, photon_dim: int, mech_dim: int):
    if variant.is_effective:
        layout = ModeLayout.of(*((label, photon_dim) for label in PHOTONIC))
        return build_effective(params, variant, layout)
    builder, mechanical = FULL_BUILDERS[variant]
    layout = ModeLayout.of(
        *((label, photon_dim) for label in PHOTONIC),
        *((label, mech_dim) for label in mechanical),
    )
    return builder(params, layout)


def derive(
    ctx: typer.Context,
    export: List[Variant] = typer.Option(
        [], "--export", help="Also write this Hamiltonian as sparse triplets (repeatable)"
    ),
    photon_dim: int = typer.Option(4, "--photon-dim", help="Photonic truncation for --export"),
    mech_dim: int = typer.Option(8, "--mech-dim", help="Mechanical truncation for --export"),
):
    options = run_options(ctx)
    run_config = options.load()
    params = run_config.derive(options.appendix_a_sign)
    manifest = options.manifest("derive", export=[variant.value for variant in export])

    path = manifest.add_output(write_json(options.output("derived.json"), params.to_dict()))
    for variant in export:
        model = export_hamiltonian(params, variant, photon_dim, mech_dim)
        manifest.add_output(model.export(options.output(f"hamiltonian_{variant.value}.txt")))
    manifest.write(options.out_dir)

    Console().print(params_table(params))
    typer.secho(f"✅ Derived parameters written to {path}", fg=typer.colors.GREEN)
