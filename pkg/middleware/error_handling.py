"""Exit-code mapping for the command line.

Commands raise library exceptions; this group turns them into a one-line
message on stderr and the documented exit status.
"""
from __future__ import annotations

import logging
import sys

import click
from pydantic import ValidationError

from utils.errors import ExitCode, ImpreciseLogitError

logger = logging.getLogger(__name__)


class ErrorHandlingGroup(click.Group):
    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(int(ExitCode.USAGE))
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(int(ExitCode.USAGE))
        except click.ClickException as e:
            e.show()
            sys.exit(int(e.exit_code))
        except ImpreciseLogitError as e:
            logger.debug("Command failed", exc_info=True)
            click.echo(f"Error: {e}", err=True)
            sys.exit(int(e.exit_code))
        except ValidationError as e:
            logger.debug("Invalid input document", exc_info=True)
            click.echo(f"Error: invalid input: {e}", err=True)
            sys.exit(int(ExitCode.DATA))
        except OSError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(int(ExitCode.DATA))
        sys.exit(rv if isinstance(rv, int) else int(ExitCode.OK))
