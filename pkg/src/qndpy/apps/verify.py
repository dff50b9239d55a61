from enum import Enum
from rich.console import Console
from rich.progress import Progress
from rich.table import Table
import typer
from ..shared.cli import run_options
from ..shared.errors import TruncationTooSmall, VerificationFailed
from ..shared.output import write_csv, write_json
from ..shared.reduce import (
    VerificationReport,
    failed_check,
    identity_sweep,
    sector_suite,
    verify_bogoliubov,
    verify_identities,
)

SECTOR_CSV_SCHEMA = "qndpy.sector_grid/v1"


class Suite(str, Enum):
    identities = "identities"
    bogoliubov = "bogoliubov"
    sectors = "sectors"
    all = "all"


def summary_table(reports: dict[str, VerificationReport]) -> Table:
    table = Table(title="Verification")
    table.add_column("Suite")
    table.add_column("Check")
    table.add_column("Defect", justify="right")
    table.add_column("Result")
    for suite, report in reports.items():
        for check in report.checks:
            table.add_row(
                suite,
                check.name,
                f"{check.defect:.3g}",
                "[green]pass[/green]" if check.passed else "[red]FAIL[/red]",
            )
    return table


def verify(
    ctx: typer.Context,
    suite: Suite = typer.Option(Suite.all, "--suite", "-s", help="Verification suite to run"),
    mech_dim: int = typer.Option(60, "--mech-dim", help="Mechanical truncation for sector oracles"),
    n_max: int = typer.Option(3, "--n-max", help="Largest photon number in the sector grid"),
    bogoliubov_dim: int = typer.Option(24, "--bogoliubov-dim", help="Mechanical dims for commutator checks"),
    trials: int = typer.Option(20, "--trials", help="Random interior states per commutator"),
    draws: int = typer.Option(1000, "--draws", help="Random admissible draws for the identity sweep (0 to skip)"),
):
    options = run_options(ctx)
    params = options.load().derive(options.appendix_a_sign)
    manifest = options.manifest(
        "verify", suite=suite.value, mech_dim=mech_dim, n_max=n_max, draws=draws
    )
    selected = [s for s in Suite if s != Suite.all] if suite == Suite.all else [suite]
    reports: dict[str, VerificationReport] = {}

    if Suite.identities in selected:
        reports["identities"] = verify_identities(params)
        if draws > 0:
            reports["identity_sweep"] = identity_sweep(draws, options.seed)

    if Suite.bogoliubov in selected:
        try:
            reports["bogoliubov"] = verify_bogoliubov(
                params, bogoliubov_dim, trials, options.seed
            )
        except TruncationTooSmall as e:
            reports["bogoliubov"] = VerificationReport("bogoliubov", [failed_check("truncation", e)])

    if Suite.sectors in selected:
        with Progress() as progress:
            task = progress.add_task("Diagonalizing sectors...", total=(n_max + 1) ** 2)
            report, sectors = sector_suite(
                params,
                n_max,
                mech_dim,
                options.jobs,
                on_done=lambda: progress.update(task, advance=1),
            )
        reports["sectors"] = report
        manifest.add_output(
            write_csv(
                options.output("sectors.csv"),
                [sector.to_row() for sector in sectors],
                columns=["n1", "n2", "ground_energy", "mech_dim"],
                schema=SECTOR_CSV_SCHEMA,
            )
        )

    path = manifest.add_output(
        write_json(
            options.output("verify.json"),
            {name: report.to_dict() for name, report in reports.items()},
        )
    )
    manifest.write(options.out_dir)

    Console().print(summary_table(reports))
    for report in reports.values():
        for finding in report.findings:
            if finding.get("kind") == "appendix_a_sign":
                typer.secho(
                    f"ℹ️  Outer self-phase: stated +g_s²/ω_s = {finding['stated_coefficient']:.10g}, "
                    f"oracle fit = {finding['oracle_coefficient']:.10g} "
                    f"({finding['message']})",
                    fg=typer.colors.CYAN,
                )
            elif finding.get("kind") == "conditioning":
                typer.secho(f"⚠️  {finding['message']}", fg=typer.colors.YELLOW)

    failures = [
        f"{suite_name}:{check.name}"
        for suite_name, report in reports.items()
        for check in report.failures()
    ]
    if failures:
        raise VerificationFailed(
            f"{len(failures)} check(s) failed ({', '.join(failures[:5])}); report in {path}"
        )
    typer.secho(f"✅ All checks passed; report written to {path}", fg=typer.colors.GREEN)
