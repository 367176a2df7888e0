"""CLI for cohn-localization."""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import click

from .core.document import DocumentError, dump_json
from .core.rings import DomainError
from .tools import ToolError, Workbench

# Exit codes: 0 success, 1 domain or tool error, 2 unreadable input.
EXIT_DOMAIN_ERROR = 1
EXIT_PARSE_ERROR = 2

_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)


def _io_options(fn: Callable) -> Callable:
    """--ring, --sigma, --in and --out, shared by every computing command."""
    fn = click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path),
                      help="Write the result here instead of stdout.")(fn)
    fn = click.option("--in", "in_paths", type=_FILE, multiple=True,
                      help="Input document (repeatable; stdin when omitted).")(fn)
    fn = click.option("--sigma", "sigma_path", type=_FILE, help="JSON description of sigma.")(fn)
    fn = click.option("--ring", "ring_path", type=_FILE, help="JSON ring descriptor.")(fn)
    return fn


def _read_inputs(in_paths: tuple[Path, ...]) -> list[str]:
    if in_paths:
        return [p.read_text(encoding="utf-8") for p in in_paths]
    stdin = click.get_text_stream("stdin")
    if stdin.isatty():
        return []
    text = stdin.read()
    return [text] if text.strip() else []


def _emit(data: Any, out_path: Optional[Path]) -> None:
    text = dump_json(data)
    if out_path is None:
        click.echo(text, nl=False)
    else:
        out_path.write_text(text, encoding="utf-8")


def _execute(
    command: str,
    ring_path: Optional[Path],
    sigma_path: Optional[Path],
    in_paths: tuple[Path, ...],
    out_path: Optional[Path],
    **options: Any,
) -> None:
    ring = ring_path.read_text(encoding="utf-8") if ring_path else None
    sigma = sigma_path.read_text(encoding="utf-8") if sigma_path else None
    try:
        result = Workbench().run(command, _read_inputs(in_paths), ring=ring, sigma=sigma, **options)
    except DocumentError as e:
        _emit({"kind": e.kind, "message": str(e)}, out_path)
        sys.exit(EXIT_PARSE_ERROR)
    except (DomainError, ToolError) as e:
        _emit({"kind": e.kind, "message": str(e)}, out_path)
        sys.exit(EXIT_DOMAIN_ERROR)
    _emit(result, out_path)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log computation details to stderr.")
def cli(verbose: bool):
    """Cohn localization workbench - exact computations on localized rings and complexes."""
    if verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
def commands():
    """List every command with a one-line summary."""
    click.echo(dump_json({"commands": Workbench.list_commands()}), nl=False)


@cli.command()
def serve():
    """Start the MCP server."""
    from .server import run

    run()


# =============================================================================
# localize
# =============================================================================


@cli.group()
def localize():
    """Cohn triples and Ore fractions."""


@localize.command("eval")
@_io_options
@click.option("--degree", type=int, help="Series truncation over a free algebra.")
def localize_eval(degree: Optional[int], **io):
    """Evaluate a triple as a fraction (central sigma) or a truncated series."""
    _execute("localize eval", degree=degree, **io)


@localize.command("add")
@_io_options
def localize_add(**io):
    """Add two triples or fractions."""
    _execute("localize add", **io)


@localize.command("mul")
@_io_options
def localize_mul(**io):
    """Multiply two triples or fractions."""
    _execute("localize mul", **io)


@localize.command("eq")
@_io_options
def localize_eq(**io):
    """Decide whether two triples or fractions are equal."""
    _execute("localize eq", **io)


@localize.command("invert")
@_io_options
def localize_invert(**io):
    """Invert a triple or fraction."""
    _execute("localize invert", **io)


@localize.command("validate")
@_io_options
def localize_validate(**io):
    """Decide whether sigma inverts a square matrix."""
    _execute("localize validate", **io)


# =============================================================================
# complex
# =============================================================================


@cli.group("complex")
def complex_group():
    """Chain complexes, cones, homology and Tor."""


@complex_group.command("validate")
@_io_options
def complex_validate(**io):
    """Report the first degree where shapes or d^2 = 0 fail."""
    _execute("complex validate", **io)


@complex_group.command("homology")
@_io_options
def complex_homology(**io):
    """Homology of a complex over Z, Z[1/m] or a field."""
    _execute("complex homology", **io)


@complex_group.command("cone")
@_io_options
def complex_cone(**io):
    """Mapping cone of a chain map."""
    _execute("complex cone", **io)


@complex_group.command("tor")
@_io_options
def complex_tor(**io):
    """Tor of two presented modules, or of a module and sigma^-1 R."""
    _execute("complex tor", **io)


@complex_group.command("localize")
@_io_options
def complex_localize(**io):
    """Localize a complex at sigma."""
    _execute("complex localize", **io)


@complex_group.command("flatness")
@_io_options
def complex_flatness(**io):
    """Tor(Z/n, sigma^-1 Z) instances for the configured moduli."""
    _execute("complex flatness", **io)


# =============================================================================
# lift
# =============================================================================


@cli.group()
def lift():
    """Lifting localized complexes back to the ground ring."""


@lift.command("clear")
@_io_options
def lift_clear(**io):
    """Lift by clearing denominators (central sigma)."""
    _execute("lift clear", **io)


@lift.command("verify")
@_io_options
def lift_verify(**io):
    """Check that the localization of C matches D."""
    _execute("lift verify", **io)


@lift.command("shorten")
@_io_options
@click.option("--x", "x", type=int, help="Rank of X when r is empty.")
@click.option("--y", "y", type=int, help="Rank of Y when r is empty.")
def lift_shorten(x: Optional[int], y: Optional[int], **io):
    """Shorten C using the matrices r and g (inputs: C, r, g)."""
    _execute("lift shorten", x=x, y=y, **io)


@lift.command("toda")
@_io_options
def lift_toda(**io):
    """Lifting obstruction of a four-term localized complex."""
    _execute("lift toda", **io)


# =============================================================================
# ltheory
# =============================================================================


@cli.group()
def ltheory():
    """Q-groups, torsion duals and linking forms."""


@ltheory.command("qgroup")
@_io_options
@click.option("--n", "n", type=int, default=0, show_default=True, help="Degree of the Q-group.")
@click.option("--eps", type=click.Choice(["1", "-1"]), default="1", show_default=True)
@click.option("--side", type=click.Choice(["symmetric", "quadratic"]), default="symmetric", show_default=True)
def ltheory_qgroup(n: int, eps: str, side: str, **io):
    """Q^n(C, eps) or Q_n(C, eps)."""
    _execute("ltheory qgroup", n=n, eps=int(eps), side=side, **io)


@ltheory.command("boundary")
@_io_options
def ltheory_boundary(**io):
    """Boundary linking form of a form that is nondegenerate over Q."""
    _execute("ltheory boundary", **io)


@ltheory.command("linking")
@_io_options
def ltheory_linking(**io):
    """Nonsingularity of a linking form, or f s^-1 g mod 1 (inputs: M, f, g)."""
    _execute("ltheory linking", **io)


@ltheory.command("dual")
@_io_options
def ltheory_dual(**io):
    """Torsion dual of a presented module."""
    _execute("ltheory dual", **io)


@ltheory.command("witt")
@_io_options
def ltheory_witt(**io):
    """Metabolic test for one linking form, Witt equivalence for two."""
    _execute("ltheory witt", **io)


@ltheory.command("extension")
@_io_options
def ltheory_extension(**io):
    """Extension of (M^)^k by N from matrices v_1..v_k (inputs: M, N, v...)."""
    _execute("ltheory extension", **io)


@ltheory.command("poincare")
@_io_options
def ltheory_poincare(**io):
    """Poincare test for a symmetric structure, after sigma when given."""
    _execute("ltheory poincare", **io)


@ltheory.command("symmetrize")
@_io_options
def ltheory_symmetrize(**io):
    """Symmetrize a quadratic structure."""
    _execute("ltheory symmetrize", **io)


@ltheory.command("hom")
@_io_options
def ltheory_hom(**io):
    """|Hom(M^, N)| next to |Tor_1(M, N)|."""
    _execute("ltheory hom", **io)


if __name__ == "__main__":
    cli()
