# File: pathcg/cli/__init__.py
import click

# Create the command group
cli_group = click.Group('pathcg', help="Path-space coarse-graining of Langevin and overdamped SDEs.")

# Import commands *after* the group is defined to avoid circular imports
from . import commands  # noqa: E402,F401
