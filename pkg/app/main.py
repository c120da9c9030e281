import logging
import sys
from typing import Optional, Sequence

import click
import typer
from typer.main import get_command

from .dependencies import APP_ENV
from .internal.ellipgen import EllipGenError
from .internal.logging import configure_logging, get_logger
from .routers import estimation, experiments, generators, sampling
from .routers.options import CliConfig


PROG_NAME = "ellipgen"

logger = get_logger(__name__)

app = typer.Typer(
    name=PROG_NAME,
    help="Nonparametric estimation of meta-elliptical copula generators.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)


def include_router(router: typer.Typer) -> None:
    """Register the commands of a router at the top level of the app."""
    app.registered_commands.extend(router.registered_commands)


include_router(generators.router)
include_router(sampling.router)
include_router(estimation.router)
include_router(experiments.router)


def parse_args(argv: Sequence[str]) -> CliConfig:
    """
    Parse a command line without running the command.

    Raises:
        click.UsageError: On unknown commands or flags, missing required
            options and values rejected by the option callbacks.
    """
    group = get_command(app)
    ctx = click.Context(group, info_name=PROG_NAME)
    args = list(argv)
    if not args:
        raise click.UsageError("Missing command.", ctx)

    name, command, rest = group.resolve_command(ctx, args)
    with command.make_context(name, rest, parent=ctx) as sub_ctx:
        return CliConfig.from_params(name, sub_ctx.params)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command and return its exit code.

    Returns:
        0 on success, 1 on a computational failure, 2 on a usage error.
    """
    configure_logging(logging.DEBUG if APP_ENV == "dev" else logging.INFO)
    args = list(sys.argv[1:] if argv is None else argv)

    try:
        result = get_command(app).main(args=args, prog_name=PROG_NAME, standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return e.exit_code
    except click.Abort:
        logger.error("Aborted")
        return 1
    except EllipGenError as e:
        logger.error(f"{e.__class__.__name__}: {e.message}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 1

    return result if isinstance(result, int) else 0
