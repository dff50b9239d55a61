from dataclasses import dataclass, field
from functools import wraps
import logging
from pathlib import Path
from typing import Optional
from rich.logging import RichHandler
import typer
from .config import RunConfig, load_config
from .errors import ConfigError, QndpyError
from .output import RunManifest, resolve_output


def cmd_error_handler(message: str):
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                if isinstance(e, (typer.Exit, typer.BadParameter)):
                    raise
                typer.secho(f"❌ {message}: {str(e)}", fg=typer.colors.RED, err=True)
                logging.getLogger(func.__module__).debug(
                    "command failure", exc_info=True
                )
                code = e.exit_code if isinstance(e, QndpyError) else 1
                raise typer.Exit(code=code)

        return wrapper

    return decorator


class Cli(typer.Typer):
    """Typer application that wraps all commands with the exit-code error handler."""

    def command(self, *args, **kwargs):
        """Override the command decorator to wrap all commands with the error handler."""
        original_decorator = super().command(*args, **kwargs)

        def decorator(func):
            name = args[0] if args else func.__name__
            wrapped_func = cmd_error_handler(f"Command '{name}' failed")(func)
            return original_decorator(wrapped_func)

        return decorator


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=verbose)],
        force=True,
    )


@dataclass
class RunOptions:
    """Global command-line options shared by every command through `ctx.obj`."""

    config: Optional[Path] = None
    out_dir: Path = Path("out")
    jobs: int = 1
    seed: int = 0
    appendix_a_sign: str = "paper"
    allow_aliasing: bool = False
    verbose: bool = False
    _run_config: Optional[RunConfig] = field(default=None, repr=False)

    def load(self) -> RunConfig:
        if self.config is None:
            raise ConfigError("no configuration file given (use --config)")
        if self._run_config is None:
            self._run_config = load_config(self.config)
        return self._run_config

    def output(self, name: str) -> Path:
        return resolve_output(self.out_dir, name)

    def manifest(self, command: str, **options) -> RunManifest:
        run_config = self.load()
        return RunManifest(
            command=command,
            config_path=str(run_config.path) if run_config.path else None,
            config_sha256=run_config.sha256,
            seed=self.seed,
            options={
                "jobs": self.jobs,
                "appendix_a_sign": self.appendix_a_sign,
                "allow_aliasing": self.allow_aliasing,
                **options,
            },
        )


def run_options(ctx: typer.Context) -> RunOptions:
    return ctx.obj if isinstance(ctx.obj, RunOptions) else RunOptions()
