"""MCP server exposing the workbench commands as tools."""

from __future__ import annotations

import logging
from typing import Any, Optional

from mcp.server.fastmcp import FastMCP

from .core.document import DocumentError, dump_json
from .core.rings import DomainError
from .tools import ToolError, Workbench


logger = logging.getLogger(__name__)

mcp = FastMCP("cohn-localization", host="127.0.0.1", port=8766, stateless_http=True)

# Created on first tool call so that settings are read lazily.
_workbench: Optional[Workbench] = None


def get_workbench() -> Workbench:
    """Get or create the workbench instance."""
    global _workbench
    if _workbench is None:
        _workbench = Workbench()
    return _workbench


def _error(e: Exception) -> dict:
    return {"error": str(e), "kind": getattr(e, "kind", "internal")}


def _document(ring: dict, payload: dict, sigma: Optional[dict] = None) -> str:
    data: dict[str, Any] = {"version": "1", "ring": ring}
    if sigma is not None:
        data["sigma"] = sigma
    data["payload"] = payload
    return dump_json(data)


@mcp.tool()
async def run_command(
    command: str,
    documents: list[str],
    ring: Optional[dict] = None,
    sigma: Optional[dict] = None,
    options: Optional[dict] = None,
) -> dict:
    """Run any workbench command, exactly as the CLI would.

    Args:
        command: Command name such as "complex homology" or "ltheory witt".
            Use list_commands() to see all of them.
        documents: Input documents as JSON text, in the order the command expects.
        ring: Ring descriptor used when a document omits its header ring.
        sigma: Sigma description used when a document omits its header sigma.
        options: Command options, e.g. {"n": 0, "eps": -1, "side": "symmetric"}.

    Returns:
        The command's JSON result, or {"error": str, "kind": str}
    """
    try:
        return get_workbench().run(command, documents, ring=ring, sigma=sigma, **(options or {}))
    except (ToolError, DocumentError, DomainError) as e:
        return _error(e)
    except Exception as e:
        logger.exception("Unexpected failure in %s", command)
        return _error(e)


@mcp.tool()
async def list_commands() -> dict:
    """List the available commands.

    Returns:
        {"commands": [{"command": str, "summary": str}, ...]}
    """
    return {"commands": Workbench.list_commands()}


@mcp.tool()
async def evaluate_triple(ring: dict, sigma: dict, f: list[list[str]], s: list[list[str]], g: list[list[str]]) -> dict:
    """Evaluate the triple (f, s, g), i.e. f s^-1 g.

    Args:
        ring: Ring descriptor, e.g. {"kind": "Z"}.
        sigma: Sigma description, e.g. {"central": ["2"]}.
        f: 1 x n row of element strings.
        s: n x n matrix of element strings.
        g: n x 1 column of element strings.

    Returns:
        {"fraction": str} for a central sigma, a truncated series otherwise
    """
    try:
        text = _document(ring, {"triple": {"f": f, "s": s, "g": g}}, sigma)
        return get_workbench().run("localize eval", [text])
    except (ToolError, DocumentError, DomainError) as e:
        return _error(e)
    except Exception as e:
        return _error(e)


@mcp.tool()
async def homology(ring: dict, lo: int, diffs: list[list[list[str]]], ranks: Optional[list[int]] = None) -> dict:
    """Homology of the complex C_lo <- C_lo+1 <- ... given by its differentials.

    Args:
        ring: Ring descriptor, e.g. {"kind": "Z"}.
        lo: Lowest degree.
        diffs: diffs[i] is the matrix of d_{lo+i+1}.
        ranks: Ranks by degree; needed only when some differential is empty.

    Returns:
        {"H": [{"deg": int, "free": int, "torsion": [int, ...]}, ...]}
    """
    try:
        complex_data: dict[str, Any] = {"lo": lo, "diffs": diffs}
        if ranks is not None:
            complex_data["ranks"] = ranks
        return get_workbench().run("complex homology", [_document(ring, {"complex": complex_data})])
    except (ToolError, DocumentError, DomainError) as e:
        return _error(e)
    except Exception as e:
        return _error(e)


@mcp.tool()
async def boundary_linking_form(form: list[list[str]], eps: int = 1) -> dict:
    """Boundary linking form (coker S, S^-1 mod Z) of an integral eps-symmetric form S.

    Args:
        form: Square integer matrix S with det(S) != 0.
        eps: +1 or -1.

    Returns:
        {"module": [invariant factors], "pairing": [[str, ...], ...]}
    """
    try:
        text = _document({"kind": "Z"}, {"form": {"matrix": form, "eps": eps}})
        return get_workbench().run("ltheory boundary", [text])
    except (ToolError, DocumentError, DomainError) as e:
        return _error(e)
    except Exception as e:
        return _error(e)


def run():
    """Entry point for running the MCP server."""
    mcp.run(transport="streamable-http")


if __name__ == "__main__":
    run()
