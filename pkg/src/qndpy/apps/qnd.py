from typing import Optional
from rich.progress import Progress
import typer
from ..shared.cli import RunOptions, run_options
from ..shared.model import Variant
from ..shared.output import write_csv, write_json
from ..shared.qnd import (
    CSV_SCHEMA,
    SWEEP_FIELDS,
    Backend,
    ProtocolConfig,
    recommended_time,
    run_protocol,
    sweep as run_sweep,
)

RECORD_COLUMNS = [
    "n_true",
    "alpha",
    "T",
    "delta2",
    "gamma",
    "variant",
    "backend",
    "sigma_scale",
    "theta",
    "expect_D",
    "expect_D_exact",
    "n_est_real",
    "n_est",
    "residual",
    "bias",
    "ambiguous",
    "aliased",
    "fidelity_probe",
    "signal_number",
    "error",
]


def parse_alpha(text: Optional[str]) -> Optional[complex]:
    if text is None:
        return None
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise typer.BadParameter(f"'{text}' is not a complex number") from None


def parse_grid(vary: str, text: str) -> list:
    values = [value.strip() for value in text.split(",") if value.strip()]
    if not values:
        raise typer.BadParameter("--values needs at least one value")
    try:
        if vary == "n_true":
            return [int(value) for value in values]
        if vary == "alpha":
            return [complex(value) for value in values]
        return [float(value) for value in values]
    except ValueError:
        raise typer.BadParameter(f"cannot parse values '{text}' for {vary}") from None


def first(*values):
    return next((value for value in values if value is not None), None)


def protocol_config(
    options: RunOptions,
    n_true: Optional[int],
    alpha: Optional[str],
    T: Optional[float],
    delta2: Optional[float],
    variant: Variant,
    backend: Backend,
    probe_dim: Optional[int],
    n_search_max: Optional[int],
    sigma_scale: float,
    shot_noise: int,
) -> ProtocolConfig:
    """Protocol settings from flags, falling back to the config's [dimensionless] section."""
    run_config = options.load()
    params = run_config.derive(options.appendix_a_sign)
    delta2 = first(delta2, run_config.delta2)
    params = params.with_detuning(params.delta1, delta2)
    n_search_max = first(n_search_max, run_config.n_search_max, 5)
    T = first(T, run_config.T)
    if T is None:
        T = recommended_time(params, delta2, n_search_max)
    return ProtocolConfig(
        params=params,
        n_true=first(n_true, run_config.n_true, 0),
        alpha=first(parse_alpha(alpha), run_config.alpha, 2.0),
        T=T,
        variant=variant,
        backend=backend,
        probe_dim=first(probe_dim, run_config.probe_dim, 40),
        n_search_max=n_search_max,
        sigma_scale=sigma_scale,
        shot_noise_samples=shot_noise,
        seed=options.seed,
        allow_aliasing=options.allow_aliasing,
    )


def qnd(
    ctx: typer.Context,
    n_true: Optional[int] = typer.Option(None, "--n-true", "-n", help="Signal photon number"),
    alpha: Optional[str] = typer.Option(None, "--alpha", "-a", help="Probe amplitude, e.g. 2 or 1+1j"),
    T: Optional[float] = typer.Option(None, "--T", help="Interaction time (default: phase-window recommendation)"),
    delta2: Optional[float] = typer.Option(None, "--delta2", help="Rotating-frame probe detuning"),
    variant: Variant = typer.Option(Variant.EFFECTIVE_IDEAL, "--variant", help="Interaction Hamiltonian"),
    backend: Backend = typer.Option(Backend.ANALYTIC, "--backend", "-b", help="Simulation backend"),
    probe_dim: Optional[int] = typer.Option(None, "--probe-dim", help="Fock truncation of the probe modes"),
    n_search_max: Optional[int] = typer.Option(None, "--n-search-max", help="Largest n in the estimator search range"),
    sigma_scale: float = typer.Option(1.0, "--sigma-scale", help="Multiplier on the self-phase terms"),
    shot_noise: int = typer.Option(0, "--shot-noise", help="Detector samples (0 for exact expectations)"),
):
    options = run_options(ctx)
    cfg = protocol_config(
        options, n_true, alpha, T, delta2, variant, backend, probe_dim, n_search_max, sigma_scale, shot_noise
    )
    record = run_protocol(cfg)

    manifest = options.manifest("qnd", variant=cfg.variant.value, backend=cfg.backend.value)
    manifest.add_output(write_json(options.output("qnd.json"), record.to_row()))
    manifest.add_output(
        write_csv(options.output("qnd.csv"), [record.to_row()], RECORD_COLUMNS, CSV_SCHEMA)
    )
    manifest.write(options.out_dir)

    typer.echo(f"n_est = {record.n_est}")
    typer.secho(
        f"θ = {record.theta:.10g}, ⟨D⟩ = {record.expect_D:.10g}, n_est_real = {record.n_est_real:.10g}",
        fg=typer.colors.BLUE,
    )
    if record.ambiguous:
        typer.secho("⚠️  Two photon numbers in the search range give nearly the same ⟨D⟩", fg=typer.colors.YELLOW)


def sweep(
    ctx: typer.Context,
    vary: str = typer.Option(..., "--vary", help=f"Field to sweep: {', '.join(SWEEP_FIELDS)}"),
    values: str = typer.Option(..., "--values", help="Comma-separated grid, e.g. 0,0.5,1"),
    n_true: Optional[int] = typer.Option(None, "--n-true", "-n", help="Signal photon number"),
    alpha: Optional[str] = typer.Option(None, "--alpha", "-a", help="Probe amplitude"),
    T: Optional[float] = typer.Option(None, "--T", help="Interaction time"),
    delta2: Optional[float] = typer.Option(None, "--delta2", help="Rotating-frame probe detuning"),
    variant: Variant = typer.Option(Variant.EFFECTIVE_SIMPLIFIED, "--variant", help="Interaction Hamiltonian"),
    backend: Backend = typer.Option(Backend.FOCK, "--backend", "-b", help="Simulation backend"),
    probe_dim: Optional[int] = typer.Option(None, "--probe-dim", help="Fock truncation of the probe modes"),
    n_search_max: Optional[int] = typer.Option(None, "--n-search-max", help="Largest n in the search range"),
    sigma_scale: float = typer.Option(1.0, "--sigma-scale", help="Multiplier on the self-phase terms"),
    shot_noise: int = typer.Option(0, "--shot-noise", help="Detector samples (0 for exact expectations)"),
):
    if vary not in SWEEP_FIELDS:
        raise typer.BadParameter(f"--vary must be one of {', '.join(SWEEP_FIELDS)}")
    grid = parse_grid(vary, values)
    options = run_options(ctx)
    template = protocol_config(
        options, n_true, alpha, T, delta2, variant, backend, probe_dim, n_search_max, sigma_scale, shot_noise
    )

    with Progress() as progress:
        task = progress.add_task(f"Sweeping {vary}...", total=len(grid))
        records = run_sweep(
            template,
            vary,
            grid,
            jobs=options.jobs,
            on_done=lambda: progress.update(task, advance=1),
        )

    rows = [record.to_row() for record in records]
    manifest = options.manifest("sweep", vary=vary, grid=grid, variant=template.variant.value)
    manifest.add_output(write_csv(options.output("sweep.csv"), rows, RECORD_COLUMNS, CSV_SCHEMA))
    manifest.add_output(write_json(options.output("sweep.json"), rows))
    manifest.write(options.out_dir)

    failed = sum(1 for record in records if record.error)
    for record, value in zip(records, grid):
        if record.error:
            typer.secho(f"⚠️  {vary} = {value}: {record.error}", fg=typer.colors.YELLOW)
        else:
            typer.echo(f"{vary} = {value}: n_est = {record.n_est}, bias = {record.bias:.3g}")
    typer.secho(
        f"✅ {len(records) - failed}/{len(records)} points completed", fg=typer.colors.GREEN
    )
