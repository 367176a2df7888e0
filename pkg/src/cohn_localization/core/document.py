"""
JSON documents exchanged by the command line and the MCP server.

A document is ``{"version": "1", "ring": {...}, "sigma": {...}?, "payload": {kind: value}}``
with every scalar written as an element string, so nothing passes through
floating point. The payload kinds are listed in PAYLOAD_KINDS; docs/schema.md
has an example of each.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Union

from .complexes import ChainComplex, ChainMap, ModulePresentation, TripleComplex, require_valid, validate_chain_map
from .localize import CohnTriple, OreFraction, SigmaSet
from .ltheory import (
    EpsilonUnit,
    LinkingForm,
    QuadraticStructure,
    SymmetricStructure,
    TorsionModulePresentation,
    blocks_to_vector,
    vector_to_blocks,
)
from .matrix import Matrix
from .rings import DomainError, ElementSyntaxError, RingDescriptor, RingKind


logger = logging.getLogger(__name__)

FORMAT_VERSION = "1"

PAYLOAD_KINDS = (
    "matrix",
    "triple",
    "fraction",
    "complex",
    "chain_map",
    "form",
    "structure",
    "linking_form",
    "module",
    "torsion_module",
)


class DocumentError(Exception):
    """Base class for documents that cannot be read."""

    kind = "document"


class DocumentSyntaxError(DocumentError):
    """Raised when the text is not JSON or not shaped like a document."""

    kind = "syntax"

    def __init__(self, reason: str, line: int = 0, column: int = 0):
        self.reason = reason
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(f"{where}{reason}")


class DocumentSemanticError(DocumentError):
    """Raised when a well-formed document violates a mathematical invariant."""

    kind = "semantic"

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class Form:
    """A square matrix read as an eps-symmetric form on R^k."""

    matrix: Matrix
    eps: int = 1


Payload = Union[
    Matrix,
    CohnTriple,
    OreFraction,
    ChainComplex,
    TripleComplex,
    ChainMap,
    Form,
    SymmetricStructure,
    QuadraticStructure,
    LinkingForm,
    ModulePresentation,
    TorsionModulePresentation,
]


@dataclass(frozen=True)
class Document:
    ring: RingDescriptor
    kind: str
    payload: Payload
    sigma: Optional[SigmaSet] = None
    version: str = FORMAT_VERSION

    def to_dict(self) -> dict:
        data: dict[str, Any] = {"version": self.version, "ring": self.ring.to_dict()}
        if self.sigma is not None:
            data["sigma"] = self.sigma.to_dict()
        value = encode_payload(self.kind, self.payload)
        if isinstance(self.payload, ChainComplex) and self.payload.ring != self.ring:
            value["localized"] = True
        data["payload"] = {self.kind: value}
        return data


# =============================================================================
# Encoding
# =============================================================================


def _complex_dict(c: Union[ChainComplex, TripleComplex]) -> dict:
    return c.to_dict()


def structure_to_dict(structure: Union[SymmetricStructure, QuadraticStructure]) -> dict:
    symmetric = isinstance(structure, SymmetricStructure)
    parts = structure.phis if symmetric else structure.psis
    components = []
    for s, vector in enumerate(parts):
        degree = structure.n + s if symmetric else structure.n - s
        blocks = vector_to_blocks(structure.complex, degree, vector)
        components.append([
            {"p": p, "q": q, "matrix": m.to_strings()} for (p, q), m in sorted(blocks.items())
        ])
    return {
        "complex": _complex_dict(structure.complex),
        "n": structure.n,
        "eps": str(structure.eps),
        "side": "symmetric" if symmetric else "quadratic",
        "components": components,
    }


def encode_payload(kind: str, payload: Payload) -> Any:
    if kind == "matrix":
        return payload.to_strings()
    if kind == "triple":
        return payload.to_dict()
    if kind == "fraction":
        return str(payload)
    if kind == "complex":
        return _complex_dict(payload)
    if kind == "chain_map":
        return payload.to_dict()
    if kind == "form":
        return {"matrix": payload.matrix.to_strings(), "eps": payload.eps}
    if kind == "structure":
        return structure_to_dict(payload)
    if kind == "linking_form":
        return {"s": payload.module.s.to_strings(), "pairing": payload.pairing.to_strings(), "eps": payload.eps}
    if kind == "module":
        return payload.to_dict()
    if kind == "torsion_module":
        return {"s": payload.s.to_strings()}
    raise ValueError(f"Unknown payload kind: {kind}")


def print_document(doc: Document) -> str:
    return dump_json(doc.to_dict())


def dump_json(data: Any) -> str:
    """Deterministic JSON text (two-space indent, trailing newline)."""
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


# =============================================================================
# Decoding
# =============================================================================


def load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentSyntaxError(e.msg, e.lineno, e.colno) from e


def _require(data: Any, key: str, where: str) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise DocumentSyntaxError(f"missing '{key}' in {where}")
    return data[key]


def _matrix(ring: RingDescriptor, data: Any, rows: Optional[int] = None, cols: Optional[int] = None) -> Matrix:
    if not isinstance(data, list) or any(not isinstance(row, list) for row in data):
        raise DocumentSyntaxError("a matrix must be a list of rows")
    if rows is not None and len(data) != rows:
        raise DocumentSemanticError(f"shape-mismatch: expected {rows} rows, got {len(data)}")
    width = cols if cols is not None else (len(data[0]) if data else 0)
    for row in data:
        if len(row) != width:
            raise DocumentSemanticError(f"shape-mismatch: expected rows of length {width}, got {len(row)}")
        for entry in row:
            if not isinstance(entry, (str, int)) or isinstance(entry, bool):
                raise DocumentSyntaxError(f"matrix entries must be element strings, got {entry!r}")
    return Matrix.from_rows(ring, [[str(e) for e in row] for row in data], cols=width)


def _triple(sigma: SigmaSet, data: Any) -> CohnTriple:
    ring = sigma.ring
    s = _matrix(ring, _require(data, "s", "triple"))
    n = s.rows
    f = _matrix(ring, _require(data, "f", "triple"), rows=1, cols=n)
    g = _matrix(ring, _require(data, "g", "triple"), rows=n, cols=1)
    return CohnTriple(sigma, f, s, g)


def _fraction(ring: RingDescriptor, sigma: SigmaSet, data: Any) -> OreFraction:
    if not isinstance(data, (str, int)):
        raise DocumentSyntaxError("a fraction must be a string such as \"1/2\"")
    if ring.kind is not RingKind.PRIME_FIELD:
        try:
            value: Union[Fraction, Any] = Fraction(str(data))
        except (ValueError, ZeroDivisionError) as e:
            raise DocumentSyntaxError(f"invalid fraction {data!r}") from e
    else:
        value = ring.scalar(str(data))
    return OreFraction.from_value(sigma, value)


def _complex(ring: RingDescriptor, sigma: Optional[SigmaSet], data: Any, strict: bool) -> Union[ChainComplex, TripleComplex]:
    lo = _require(data, "lo", "complex")
    diffs = data.get("diffs", [])
    if not isinstance(lo, int) or not isinstance(diffs, list):
        raise DocumentSyntaxError("complex needs an integer 'lo' and a list 'diffs'")
    if "ranks" in data:
        ranks = [int(r) for r in data["ranks"]]
    elif diffs:
        ranks = [len(diffs[0])] + [len(d[0]) if d else 0 for d in diffs]
    else:
        raise DocumentSyntaxError("complex without differentials needs 'ranks'")
    if len(diffs) != max(len(ranks) - 1, 0):
        raise DocumentSemanticError(f"shape-mismatch: {len(ranks)} ranks need {max(len(ranks) - 1, 0)} differentials")

    if _is_triple_grid(diffs):
        if sigma is None:
            raise DocumentSemanticError("sigma-missing: a triple complex needs a sigma")
        grids = []
        for i, d in enumerate(diffs):
            if len(d) != ranks[i] or any(len(row) != ranks[i + 1] for row in d):
                raise DocumentSemanticError(f"shape-mismatch at degree {lo + i + 1}")
            grids.append(tuple(tuple(_triple(sigma, t) for t in row) for row in d))
        triples = TripleComplex(sigma, lo, tuple(ranks), tuple(grids))
        if strict:
            failure = triples.d_squared_failure()
            if failure is not None:
                raise DocumentSemanticError(f"d2-nonzero at degree {failure}")
        return triples

    if data.get("localized"):
        if sigma is None or not sigma.is_central:
            raise DocumentSemanticError("sigma-missing: a localized complex needs a central sigma")
        ring = sigma.localized_ring()
    matrices = tuple(_matrix(ring, d, rows=ranks[i], cols=ranks[i + 1]) for i, d in enumerate(diffs))
    c = ChainComplex(ring, lo, tuple(ranks), matrices)
    return require_valid(c) if strict else c


def _is_triple_grid(diffs: list) -> bool:
    for d in diffs:
        for row in d or []:
            for entry in row or []:
                return isinstance(entry, dict)
    return False


def _plain_complex(ring: RingDescriptor, data: Any, strict: bool) -> ChainComplex:
    c = _complex(ring, None, data, strict)
    if not isinstance(c, ChainComplex):
        raise DocumentSemanticError("expected a complex with ring entries")
    return c


def _chain_map(ring: RingDescriptor, data: Any, strict: bool) -> ChainMap:
    source = _plain_complex(ring, _require(data, "source", "chain_map"), strict)
    target = _plain_complex(ring, _require(data, "target", "chain_map"), strict)
    lo = int(data.get("lo", source.lo))
    components = tuple(
        _matrix(ring, m, rows=target.rank(lo + i), cols=source.rank(lo + i))
        for i, m in enumerate(data.get("components", []))
    )
    f = ChainMap(source, target, lo, components)
    return validate_chain_map(f) if strict else f


def _structure(ring: RingDescriptor, data: Any, strict: bool) -> Union[SymmetricStructure, QuadraticStructure]:
    c = _plain_complex(ring, _require(data, "complex", "structure"), strict)
    n = int(_require(data, "n", "structure"))
    eps = EpsilonUnit(ring.scalar(str(data.get("eps", "1"))))
    side = data.get("side", "symmetric")
    if side not in ("symmetric", "quadratic"):
        raise DocumentSyntaxError(f"unknown structure side {side!r}")
    vectors = []
    for s, blocks in enumerate(data.get("components", [])):
        degree = n + s if side == "symmetric" else n - s
        parsed = {}
        for block in blocks:
            p, q = int(_require(block, "p", "block")), int(_require(block, "q", "block"))
            parsed[(p, q)] = _matrix(ring, _require(block, "matrix", "block"), rows=c.rank(p), cols=c.rank(q))
        vectors.append(blocks_to_vector(c, degree, parsed))
    if side == "symmetric":
        structure: Union[SymmetricStructure, QuadraticStructure] = SymmetricStructure(c, n, eps, tuple(vectors))
    else:
        structure = QuadraticStructure(c, n, eps, tuple(vectors))
    if strict and not structure.is_cycle():
        raise DocumentSemanticError(f"{side} structure is not a cycle")
    return structure


def _linking_form(ring: RingDescriptor, data: Any) -> LinkingForm:
    s = _matrix(ring, _require(data, "s", "linking_form"))
    pairing = _matrix(RingDescriptor.rationals(), _require(data, "pairing", "linking_form"), rows=s.rows, cols=s.rows)
    return LinkingForm(TorsionModulePresentation(s), pairing, int(data.get("eps", 1)))


def decode_payload(
    kind: str,
    value: Any,
    ring: RingDescriptor,
    sigma: Optional[SigmaSet],
    strict: bool = True,
) -> Payload:
    if kind in ("triple", "fraction") and sigma is None:
        raise DocumentSemanticError(f"sigma-missing: a {kind} needs a sigma")
    if kind == "matrix":
        return _matrix(ring, value)
    if kind == "triple":
        t = _triple(sigma, value)
        return t.check() if strict else t
    if kind == "fraction":
        return _fraction(ring, sigma, value)
    if kind == "complex":
        return _complex(ring, sigma, value, strict)
    if kind == "chain_map":
        return _chain_map(ring, value, strict)
    if kind == "form":
        return Form(_matrix(ring, _require(value, "matrix", "form")), int(value.get("eps", 1)))
    if kind == "structure":
        return _structure(ring, value, strict)
    if kind == "linking_form":
        return _linking_form(ring, value)
    if kind == "module":
        relations = _matrix(ring, _require(value, "relations", "module"), rows=int(value.get("generators", 0)))
        return ModulePresentation(ring, relations.rows, relations)
    if kind == "torsion_module":
        return TorsionModulePresentation(_matrix(ring, _require(value, "s", "torsion_module")))
    raise DocumentSyntaxError(f"unknown payload kind {kind!r}; expected one of {', '.join(PAYLOAD_KINDS)}")


def parse_ring(data: Any) -> RingDescriptor:
    if isinstance(data, str):
        data = load_json(data)
    try:
        return RingDescriptor.from_dict(data)
    except DomainError as e:
        raise DocumentSemanticError(str(e)) from e
    except (TypeError, ValueError, AttributeError) as e:
        raise DocumentSyntaxError(f"invalid ring description: {e}") from e


def parse_sigma(data: Any, ring: RingDescriptor) -> SigmaSet:
    if isinstance(data, str):
        data = load_json(data)
    if not isinstance(data, dict):
        raise DocumentSyntaxError("sigma must be an object")
    try:
        return SigmaSet.from_dict(ring, data)
    except ElementSyntaxError as e:
        raise DocumentSyntaxError(str(e)) from e
    except DomainError as e:
        raise DocumentSemanticError(str(e)) from e
    except (TypeError, ValueError) as e:
        raise DocumentSyntaxError(f"invalid sigma description: {e}") from e


def parse_document(
    text: str,
    ring: Optional[RingDescriptor] = None,
    sigma: Union[SigmaSet, dict, None] = None,
    strict: bool = True,
) -> Document:
    """
    Parse and validate a document.

    ring and sigma, when given, stand in for (and must agree with) the
    header fields; sigma may also be its raw JSON description, read over
    the document ring. With strict=False complexes are returned even when
    d^2 != 0, so that they can be reported on.

    Raises:
        DocumentSyntaxError: For malformed JSON, carrying line and column.
        DocumentSemanticError: Naming the violated invariant.
    """
    data = load_json(text)
    if not isinstance(data, dict):
        raise DocumentSyntaxError("a document must be a JSON object", 1, 1)
    version = str(data.get("version", FORMAT_VERSION))
    if version != FORMAT_VERSION:
        raise DocumentSemanticError(f"unsupported-version: {version}")

    if "ring" in data:
        header_ring = parse_ring(data["ring"])
        if ring is not None and ring != header_ring:
            raise DocumentSemanticError(f"ring-mismatch: document over {header_ring}, expected {ring}")
        ring = header_ring
    if ring is None:
        raise DocumentSyntaxError("missing 'ring' in document")
    if isinstance(sigma, dict):
        sigma = parse_sigma(sigma, ring)
    if "sigma" in data:
        header_sigma = parse_sigma(data["sigma"], ring)
        if sigma is not None and sigma != header_sigma:
            raise DocumentSemanticError(f"sigma-mismatch: document has {header_sigma}, expected {sigma}")
        sigma = header_sigma
    if sigma is not None and sigma.ring != ring:
        raise DocumentSemanticError(f"ring-mismatch: sigma over {sigma.ring}, document over {ring}")

    payload = _require(data, "payload", "document")
    if not isinstance(payload, dict) or len(payload) != 1:
        raise DocumentSyntaxError("payload must be an object with exactly one kind")
    (kind, value), = payload.items()
    try:
        decoded = decode_payload(kind, value, ring, sigma, strict)
    except DocumentError:
        raise
    except ElementSyntaxError as e:
        raise DocumentSyntaxError(str(e)) from e
    except DomainError as e:
        raise DocumentSemanticError(str(e)) from e
    except (TypeError, ValueError, KeyError, AttributeError) as e:
        raise DocumentSyntaxError(f"malformed {kind}: {e}") from e
    logger.debug("Parsed %s document over %s", kind, ring)
    return Document(ring, kind, decoded, sigma, version)
