from enum import Enum
from pathlib import Path
from typing import Optional
import typer
from .apps.derive import derive
from .apps.qnd import qnd, sweep
from .apps.verify import verify
from .shared.cli import Cli, RunOptions, setup_logging


class AppendixSign(str, Enum):
    paper = "paper"
    derived = "derived"


main_app = Cli(
    help="qndpy: QND photon-number measurement between two coupled optomechanical cavities",
    no_args_is_help=True,
)

main_app.command("derive", help="Derive the dimensionless model parameters")(derive)
main_app.command("verify", help="Check the effective Hamiltonians against exact oracles")(verify)
main_app.command("qnd", help="Simulate one QND measurement run")(qnd)
main_app.command("sweep", help="Repeat the QND run over a parameter grid")(sweep)


@main_app.callback()
def callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Configuration file with the device parameters"
    ),
    out_dir: Path = typer.Option(Path("out"), "--out-dir", "-o", help="Output directory"),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Worker threads for sector grids and sweeps"),
    seed: int = typer.Option(0, "--seed", help="Seed for random draws and shot noise"),
    appendix_a_sign: AppendixSign = typer.Option(
        AppendixSign.paper,
        "--appendix-a-sign",
        help="Sign of the outer-cavity self-phase term",
    ),
    allow_aliasing: bool = typer.Option(
        False, "--allow-aliasing", help="Run even when the phase leaves the unambiguous window"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    setup_logging(verbose)
    ctx.obj = RunOptions(
        config=config,
        out_dir=out_dir,
        jobs=jobs,
        seed=seed,
        appendix_a_sign=appendix_a_sign.value,
        allow_aliasing=allow_aliasing,
        verbose=verbose,
    )


if __name__ == "__main__":
    main_app()
