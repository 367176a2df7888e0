"""Command implementations shared by the CLI and the MCP server."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

from .core.complexes import (
    ChainComplex,
    ModulePresentation,
    TripleComplex,
    cone,
    flatness_instances,
    homology,
    localize_complex,
    tor,
    validate_complex,
)
from .core.document import Document, Form, load_json, parse_document, parse_ring, parse_sigma, structure_to_dict
from .core.lifting import lift_by_clearing, shorten_left, toda_obstruction, verify_lift
from .core.localize import (
    CohnTriple,
    OreFraction,
    SigmaSet,
    ore_invert,
    ore_op,
    series_expand,
    sigma_validate,
    triple_eq,
    triple_eval_ore,
    triple_invert,
    triple_op,
    triple_to_linrep,
)
from .core.ltheory import (
    EpsilonUnit,
    QuadraticStructure,
    SymmetricStructure,
    boundary_linking_form,
    double_dual_check,
    extension_iv,
    hom_order,
    is_poincare,
    linking_nonsingular,
    linking_pairing,
    normalize_form,
    q_group,
    symmetrize,
    torsion_dual,
    witt_equivalent,
    witt_metabolic_test,
)
from .core.matrix import Matrix
from .core.rings import RingDescriptor
from .core.settings import Settings


logger = logging.getLogger(__name__)


class ToolError(Exception):
    """Error from command execution: unknown command or unsuitable inputs."""

    kind = "tool"


@dataclass
class Inputs:
    """Parsed input documents plus the ring and sigma in force."""

    documents: list[Document] = field(default_factory=list)
    ring: Optional[RingDescriptor] = None
    sigma: Optional[SigmaSet] = None

    def take(self, *kinds: Union[str, tuple[str, ...]]) -> list[Any]:
        """Payloads of exactly len(kinds) documents, checking each kind."""
        if len(self.documents) != len(kinds):
            raise ToolError(f"expected {len(kinds)} input document(s), got {len(self.documents)}")
        payloads = []
        for i, (doc, allowed) in enumerate(zip(self.documents, kinds)):
            allowed = (allowed,) if isinstance(allowed, str) else allowed
            if doc.kind not in allowed:
                raise ToolError(f"input {i + 1} must be a {' or '.join(allowed)} document, got {doc.kind}")
            payloads.append(doc.payload)
        return payloads

    def require_sigma(self) -> SigmaSet:
        if self.sigma is None:
            raise ToolError("this command needs a sigma (document header or --sigma)")
        return self.sigma

    def require_ring(self) -> RingDescriptor:
        if self.ring is None:
            raise ToolError("this command needs a ring (document header or --ring)")
        return self.ring


@dataclass(frozen=True)
class CommandSpec:
    handler: str
    summary: str
    strict: bool = True


COMMANDS: dict[str, CommandSpec] = {
    "localize eval": CommandSpec("localize_eval", "Evaluate a triple as a fraction or truncated series"),
    "localize add": CommandSpec("localize_add", "Sum of two triples or fractions"),
    "localize mul": CommandSpec("localize_mul", "Product of two triples or fractions"),
    "localize eq": CommandSpec("localize_eq", "Decide equality of two triples or fractions"),
    "localize invert": CommandSpec("localize_invert", "Inverse of a triple or fraction"),
    "localize validate": CommandSpec("localize_validate", "Decide whether sigma inverts a matrix"),
    "complex validate": CommandSpec("complex_validate", "Check shapes and d^2 = 0", strict=False),
    "complex homology": CommandSpec("complex_homology", "Homology groups by degree"),
    "complex cone": CommandSpec("complex_cone", "Mapping cone of a chain map"),
    "complex tor": CommandSpec("complex_tor", "Tor of two modules, or of a module and sigma^-1 R"),
    "complex localize": CommandSpec("complex_localize", "Localize a complex at sigma"),
    "complex flatness": CommandSpec("complex_flatness", "Tor instances probing flatness of sigma^-1 Z"),
    "lift clear": CommandSpec("lift_clear", "Lift a localized complex by clearing denominators"),
    "lift verify": CommandSpec("lift_verify", "Check that sigma^-1 C matches D"),
    "lift shorten": CommandSpec("lift_shorten", "Shorten a complex from explicit data"),
    "lift toda": CommandSpec("lift_toda", "Obstruction for a four-term localized complex"),
    "ltheory qgroup": CommandSpec("ltheory_qgroup", "Symmetric or quadratic Q-group"),
    "ltheory boundary": CommandSpec("ltheory_boundary", "Boundary linking form of a nondegenerate form"),
    "ltheory linking": CommandSpec("ltheory_linking", "Nonsingularity of a linking form, or a pairing value"),
    "ltheory dual": CommandSpec("ltheory_dual", "Torsion dual of a presented module"),
    "ltheory witt": CommandSpec("ltheory_witt", "Metabolic test, or Witt equivalence of two forms"),
    "ltheory extension": CommandSpec("ltheory_extension", "Extension 0 -> N -> L -> (M^)^k -> 0"),
    "ltheory poincare": CommandSpec("ltheory_poincare", "Poincare test for a symmetric structure"),
    "ltheory symmetrize": CommandSpec("ltheory_symmetrize", "Symmetrization of a quadratic structure"),
    "ltheory hom": CommandSpec("ltheory_hom", "Compare |Hom(M^, N)| with |Tor_1(M, N)|"),
}


def _group_dict(index_name: str, groups) -> list[dict]:
    return [{index_name: i, **g.to_dict()} for i, g in enumerate(groups)]


class Workbench:
    """
    Runs commands on parsed documents.

    Each handler takes Inputs plus its own keyword options and returns a
    JSON-ready dict; the command layers only translate errors.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings.load()

    # -- dispatch -----------------------------------------------------------

    def parse(
        self,
        texts: Sequence[str],
        ring: Union[RingDescriptor, dict, str, None] = None,
        sigma: Union[dict, str, None] = None,
        strict: bool = True,
    ) -> Inputs:
        if ring is not None and not isinstance(ring, RingDescriptor):
            ring = parse_ring(ring)
        sigma_data = load_json(sigma) if isinstance(sigma, str) else sigma
        documents = [parse_document(text, ring, sigma_data, strict) for text in texts]
        inputs = Inputs(documents)
        inputs.ring = documents[0].ring if documents else ring
        if documents:
            inputs.sigma = next((d.sigma for d in documents if d.sigma is not None), None)
        elif sigma_data is not None and inputs.ring is not None:
            inputs.sigma = parse_sigma(sigma_data, inputs.ring)
        return inputs

    def run(
        self,
        command: str,
        texts: Sequence[str] = (),
        ring: Union[RingDescriptor, dict, str, None] = None,
        sigma: Union[dict, str, None] = None,
        **options: Any,
    ) -> dict:
        """
        Parse the inputs and run one command.

        Raises:
            ToolError: If the command is unknown or the inputs do not fit it.
            DocumentError: If an input cannot be parsed.
            DomainError: If the computation itself fails.
        """
        spec = COMMANDS.get(" ".join(command.split()))
        if spec is None:
            raise ToolError(f"Unknown command '{command}'. Known: {', '.join(sorted(COMMANDS))}")
        inputs = self.parse(texts, ring, sigma, strict=spec.strict)
        handler: Callable[..., dict] = getattr(self, spec.handler)
        options = {k: v for k, v in options.items() if v is not None}
        logger.debug("Running %s on %d document(s) with %s", command, len(inputs.documents), options)
        try:
            return handler(inputs, **options)
        except TypeError as e:
            raise ToolError(f"invalid options for '{command}': {e}") from e

    @staticmethod
    def list_commands() -> list[dict]:
        return [{"command": name, "summary": spec.summary} for name, spec in COMMANDS.items()]

    # -- localize -----------------------------------------------------------

    def _triple_result(self, t: CohnTriple) -> dict:
        data: dict[str, Any] = {"triple": t.to_dict()}
        if t.sigma.is_central:
            data["fraction"] = str(triple_eval_ore(t))
        return data

    def localize_eval(self, inputs: Inputs, degree: Optional[int] = None) -> dict:
        (value,) = inputs.take(("triple", "fraction"))
        if isinstance(value, OreFraction):
            return {"fraction": str(value)}
        if value.sigma.is_central:
            return {"fraction": str(triple_eval_ore(value))}
        degree = self.settings.series_degree if degree is None else degree
        value.check()
        return {
            "series": str(series_expand(value, degree)),
            "degree": degree,
            "linrep": triple_to_linrep(value).to_dict(),
        }

    def _binary(self, inputs: Inputs, op: str) -> dict:
        a, b = inputs.take(("triple", "fraction"), ("triple", "fraction"))
        if isinstance(a, OreFraction) and isinstance(b, OreFraction):
            return {"fraction": str(ore_op(op, a, b))}
        if isinstance(a, CohnTriple) and isinstance(b, CohnTriple):
            return self._triple_result(triple_op(op, a, b))
        raise ToolError("both inputs must be triples or both fractions")

    def localize_add(self, inputs: Inputs) -> dict:
        return self._binary(inputs, "add")

    def localize_mul(self, inputs: Inputs) -> dict:
        return self._binary(inputs, "mul")

    def localize_eq(self, inputs: Inputs) -> dict:
        a, b = inputs.take(("triple", "fraction"), ("triple", "fraction"))
        if isinstance(a, OreFraction) and isinstance(b, OreFraction):
            return {"equal": ore_op("eq", a, b)}
        if isinstance(a, CohnTriple) and isinstance(b, CohnTriple):
            return {"equal": triple_eq(a, b)}
        raise ToolError("both inputs must be triples or both fractions")

    def localize_invert(self, inputs: Inputs) -> dict:
        (value,) = inputs.take(("triple", "fraction"))
        if isinstance(value, OreFraction):
            return {"fraction": str(ore_invert(value))}
        return self._triple_result(triple_invert(value))

    def localize_validate(self, inputs: Inputs) -> dict:
        (m,) = inputs.take("matrix")
        return sigma_validate(inputs.require_sigma(), m).to_dict()

    # -- complexes ----------------------------------------------------------

    def complex_validate(self, inputs: Inputs) -> dict:
        (c,) = inputs.take("complex")
        if isinstance(c, TripleComplex):
            failure = c.d_squared_failure()
            if failure is None:
                return {"ok": True}
            return {"ok": False, "degree": failure, "reason": "d2-nonzero"}
        return validate_complex(c).to_dict()

    def complex_homology(self, inputs: Inputs) -> dict:
        (c,) = inputs.take("complex")
        if isinstance(c, TripleComplex):
            raise ToolError("homology needs a complex with ring entries")
        return homology(c).to_dict()

    def complex_cone(self, inputs: Inputs) -> dict:
        (f,) = inputs.take("chain_map")
        return {"complex": cone(f).to_dict()}

    def complex_tor(self, inputs: Inputs) -> dict:
        docs = inputs.documents
        max_i = self.settings.max_tor_degree
        if len(docs) == 2:
            m, n = inputs.take("module", "module")
            return {"tor": _group_dict("i", tor(m, n, max_i=max_i))}
        (m,) = inputs.take("module")
        return {"tor": _group_dict("i", tor(m, inputs.require_sigma(), max_i=max_i))}

    def complex_localize(self, inputs: Inputs) -> dict:
        (c,) = inputs.take("complex")
        sigma = inputs.require_sigma()
        localized = localize_complex(c, sigma)
        return Document(inputs.require_ring(), "complex", localized, sigma).to_dict()

    def complex_flatness(self, inputs: Inputs) -> dict:
        inputs.take()
        return flatness_instances(inputs.require_sigma(), self.settings.flatness_moduli).to_dict()

    # -- lifting ------------------------------------------------------------

    def lift_clear(self, inputs: Inputs) -> dict:
        (d,) = inputs.take("complex")
        return lift_by_clearing(d, inputs.require_sigma()).to_dict()

    def lift_verify(self, inputs: Inputs) -> dict:
        c, d = inputs.take("complex", "complex")
        return {"verified": verify_lift(c, d, inputs.require_sigma())}

    def lift_shorten(self, inputs: Inputs, x: Optional[int] = None, y: Optional[int] = None) -> dict:
        c, r, g = inputs.take("complex", "matrix", "matrix")
        x = r.cols if x is None else x
        y = r.rows if y is None else y
        if r.is_zero() and r.shape != (y, x):
            r = Matrix.zeros(r.ring, y, x)
        if g.is_zero() and g.shape != (y, c.rank(0)):
            g = Matrix.zeros(g.ring, y, c.rank(0))
        return shorten_left(c, x, y, r, g, inputs.require_sigma()).to_dict()

    def lift_toda(self, inputs: Inputs) -> dict:
        (d,) = inputs.take("complex")
        return toda_obstruction(d, inputs.require_sigma()).to_dict()

    # -- L-theory -----------------------------------------------------------

    def ltheory_qgroup(self, inputs: Inputs, n: int = 0, eps: int = 1, side: str = "symmetric") -> dict:
        (c,) = inputs.take("complex")
        if not isinstance(c, ChainComplex):
            raise ToolError("Q-groups need a complex with ring entries")
        group = q_group(c, EpsilonUnit.of(c.ring, eps), n, side)
        return {"side": side, "n": n, "eps": eps, "group": group.to_dict(), "description": str(group)}

    def ltheory_boundary(self, inputs: Inputs) -> dict:
        (form,) = inputs.take("form")
        boundary = boundary_linking_form(form.matrix, form.eps)
        data = boundary.to_dict()
        return {"module": data["module"], "pairing": data["pairing"]}

    def ltheory_linking(self, inputs: Inputs) -> dict:
        if len(inputs.documents) == 3:
            m, f, g = inputs.take("torsion_module", "matrix", "matrix")
            return {"value": str(linking_pairing(m, f, g))}
        (form,) = inputs.take("linking_form")
        normal = normalize_form(form).to_dict()
        return {"nonsingular": linking_nonsingular(form), "module": normal["module"], "pairing": normal["pairing"]}

    def ltheory_dual(self, inputs: Inputs) -> dict:
        (m,) = inputs.take("torsion_module")
        dual = torsion_dual(m)
        return {"dual": dual.s.to_strings(), "module": dual.invariant_factors, "double_dual": double_dual_check(m)}

    def ltheory_witt(self, inputs: Inputs) -> dict:
        bound = self.settings.witt_bound
        if len(inputs.documents) == 2:
            a, b = inputs.take("linking_form", "linking_form")
            return {"witt_equivalent": witt_equivalent(a, b, bound)}
        (form,) = inputs.take("linking_form")
        return {"metabolic": witt_metabolic_test(form, bound)}

    def ltheory_extension(self, inputs: Inputs) -> dict:
        if len(inputs.documents) < 2:
            raise ToolError("extension needs modules M and N followed by matrices v_1..v_k")
        kinds = ["torsion_module", "torsion_module"] + ["matrix"] * (len(inputs.documents) - 2)
        m, n, *vs = inputs.take(*kinds)
        return extension_iv(m, n, vs).to_dict()

    def _symmetric(self, payload: Union[Form, SymmetricStructure, QuadraticStructure]) -> SymmetricStructure:
        if isinstance(payload, Form):
            return SymmetricStructure.from_form(payload.matrix, EpsilonUnit.of(payload.matrix.ring, payload.eps))
        if isinstance(payload, QuadraticStructure):
            raise ToolError("expected a symmetric structure; use 'ltheory symmetrize' first")
        return payload

    def ltheory_poincare(self, inputs: Inputs) -> dict:
        (payload,) = inputs.take(("structure", "form"))
        return {"poincare": is_poincare(self._symmetric(payload), inputs.sigma)}

    def ltheory_symmetrize(self, inputs: Inputs) -> dict:
        (payload,) = inputs.take(("structure", "form"))
        if isinstance(payload, Form):
            payload = QuadraticStructure.from_form(payload.matrix, EpsilonUnit.of(payload.matrix.ring, payload.eps))
        if not isinstance(payload, QuadraticStructure):
            raise ToolError("expected a quadratic structure")
        return {"structure": structure_to_dict(symmetrize(payload))}

    def ltheory_hom(self, inputs: Inputs) -> dict:
        m, n = inputs.take("torsion_module", "torsion_module")
        z = m.s.ring
        tor1 = tor(ModulePresentation(z, m.size, m.s), ModulePresentation(z, n.size, n.s), max_i=1)[1]
        return {"hom_order": hom_order(m, n), "tor1_order": tor1.order}

