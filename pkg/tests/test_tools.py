"""Tests for Workbench command dispatch (tools.py)."""

from __future__ import annotations

import pytest

from cohn_localization.core.document import DocumentSemanticError
from cohn_localization.core.ltheory import WittBoundExceededError
from cohn_localization.core.rings import DomainError
from cohn_localization.core.settings import Settings
from cohn_localization.tools import COMMANDS, ToolError, Workbench

SIGMA_TWO = {"central": ["2"]}
SIGMA_NONZERO = {"central": "nonzero"}
POINT = {"lo": 0, "ranks": [1], "diffs": []}


# =============================================================================
# Dispatch
# =============================================================================


class TestDispatch:
    """Command lookup, input counting and option checking."""

    def test_unknown_command(self, workbench: Workbench):
        with pytest.raises(ToolError, match="Unknown command"):
            workbench.run("complex frobnicate")

    def test_command_name_whitespace_is_normalized(self, workbench: Workbench, make_doc):
        result = workbench.run("  complex   homology ", [make_doc("complex", {"lo": 0, "diffs": [[["2"]]]})])
        assert result["H"][0]["torsion"] == [2]

    def test_wrong_document_kind(self, workbench: Workbench, make_doc):
        with pytest.raises(ToolError, match="must be a complex"):
            workbench.run("complex homology", [make_doc("matrix", [["1"]])])

    def test_wrong_document_count(self, workbench: Workbench, make_doc):
        with pytest.raises(ToolError, match="expected 1 input"):
            workbench.run("complex homology", [])

    def test_unexpected_option(self, workbench: Workbench, make_doc):
        with pytest.raises(ToolError, match="invalid options"):
            workbench.run("complex homology", [make_doc("complex", {"lo": 0, "diffs": [[["2"]]]})], n=3)

    def test_parse_errors_propagate(self, workbench: Workbench, make_doc):
        with pytest.raises(DocumentSemanticError):
            workbench.run("complex homology", [make_doc("complex", {"lo": 0, "diffs": [[["1"]], [["1"]]]})])

    def test_list_commands_covers_table(self):
        names = [entry["command"] for entry in Workbench.list_commands()]
        assert names == list(COMMANDS)
        assert "ltheory witt" in names

    def test_every_handler_exists(self):
        for spec in COMMANDS.values():
            assert callable(getattr(Workbench, spec.handler))


# =============================================================================
# localize
# =============================================================================


class TestLocalizeCommands:

    def test_eval_triple(self, workbench: Workbench, make_doc):
        text = make_doc("triple", {"f": [["1"]], "s": [["2"]], "g": [["1"]]}, sigma=SIGMA_TWO)
        assert workbench.run("localize eval", [text]) == {"fraction": "1/2"}

    def test_eval_series_over_free_algebra(self, workbench: Workbench, make_doc):
        ring = {"kind": "free", "base": {"kind": "Q"}, "vars": 1}
        text = make_doc("triple", {"f": [["1"]], "s": [["1 - x1"]], "g": [["1"]]}, ring=ring,
                        sigma={"augmentation": True})
        result = workbench.run("localize eval", [text], degree=2)
        assert result["series"] == "1 + x1 + x1*x1"
        assert result["degree"] == 2

    def test_add_fractions(self, workbench: Workbench, make_doc):
        a = make_doc("fraction", "1/2", sigma=SIGMA_TWO)
        b = make_doc("fraction", "1/4", sigma=SIGMA_TWO)
        assert workbench.run("localize add", [a, b]) == {"fraction": "3/4"}

    def test_eq_fractions(self, workbench: Workbench, make_doc):
        a = make_doc("fraction", "2/4", sigma=SIGMA_TWO)
        b = make_doc("fraction", "1/2", sigma=SIGMA_TWO)
        assert workbench.run("localize eq", [a, b]) == {"equal": True}

    def test_invert_fraction(self, workbench: Workbench, make_doc):
        assert workbench.run("localize invert", [make_doc("fraction", "2", sigma=SIGMA_TWO)]) == {"fraction": "1/2"}

    def test_invert_outside_sigma(self, workbench: Workbench, make_doc):
        with pytest.raises(DomainError):
            workbench.run("localize invert", [make_doc("fraction", "3", sigma=SIGMA_TWO)])

    def test_validate(self, workbench: Workbench, make_doc):
        assert workbench.run("localize validate", [make_doc("matrix", [["2"]], sigma=SIGMA_TWO)])["accepted"]
        result = workbench.run("localize validate", [make_doc("matrix", [["3"]], sigma=SIGMA_TWO)])
        assert result["accepted"] is False

    def test_validate_needs_sigma(self, workbench: Workbench, make_doc):
        with pytest.raises(ToolError, match="needs a sigma"):
            workbench.run("localize validate", [make_doc("matrix", [["2"]])])


# =============================================================================
# complex
# =============================================================================


class TestComplexCommands:

    def test_validate_reports_instead_of_failing(self, workbench: Workbench, make_doc):
        result = workbench.run("complex validate", [make_doc("complex", {"lo": 0, "diffs": [[["1"]], [["1"]]]})])
        assert result == {"ok": False, "degree": 1, "reason": "d2-nonzero", "message": "d2-nonzero at degree 1"}

    def test_homology(self, workbench: Workbench, make_doc):
        result = workbench.run("complex homology", [make_doc("complex", {"lo": 0, "diffs": [[["2"]]]})])
        assert result == {"H": [
            {"deg": 0, "free": 0, "torsion": [2]},
            {"deg": 1, "free": 0, "torsion": []},
        ]}

    def test_cone(self, workbench: Workbench, make_doc):
        text = make_doc("chain_map", {"source": POINT, "target": POINT, "components": [[["1"]]]})
        assert workbench.run("complex cone", [text]) == {"complex": {"lo": 0, "ranks": [1, 1], "diffs": [[["1"]]]}}

    def test_tor_of_two_modules(self, workbench: Workbench, make_doc):
        m = make_doc("module", {"generators": 1, "relations": [["4"]]})
        n = make_doc("module", {"generators": 1, "relations": [["6"]]})
        assert workbench.run("complex tor", [m, n]) == {"tor": [
            {"i": 0, "free": 0, "torsion": [2]},
            {"i": 1, "free": 0, "torsion": [2]},
            {"i": 2, "free": 0, "torsion": []},
        ]}

    def test_tor_with_localization(self, workbench: Workbench, make_doc):
        m = make_doc("module", {"generators": 1, "relations": [["3"]]}, sigma=SIGMA_TWO)
        result = workbench.run("complex tor", [m])
        assert result["tor"][0]["torsion"] == [3]
        assert result["tor"][1] == {"i": 1, "free": 0, "torsion": []}

    def test_localize(self, workbench: Workbench, make_doc):
        text = make_doc("complex", {"lo": 0, "diffs": [[["2"]]]}, sigma=SIGMA_TWO)
        result = workbench.run("complex localize", [text])
        assert result["payload"]["complex"]["localized"] is True
        assert result["ring"] == {"kind": "Z"}

    def test_flatness(self):
        workbench = Workbench(Settings(flatness_moduli=[2, 3]))
        result = workbench.run("complex flatness", ring={"kind": "Z"}, sigma=SIGMA_NONZERO)
        assert result["ring"] == "Q"
        assert result["flat"] and result["stably_flat"]
        assert [entry["n"] for entry in result["instances"]] == [2, 3]


# =============================================================================
# lift
# =============================================================================


class TestLiftCommands:

    def test_clear(self, workbench: Workbench, make_doc):
        text = make_doc("complex", {"lo": 0, "diffs": [[["1/2"]]], "localized": True}, sigma=SIGMA_NONZERO)
        result = workbench.run("lift clear", [text])
        assert result["status"] == "verified"
        assert result["denominators"] == ["2"]
        assert result["lifted"]["diffs"] == [[["1"]]]

    def test_verify(self, workbench: Workbench, make_doc):
        c = make_doc("complex", {"lo": 0, "diffs": [[["1"]]]}, sigma=SIGMA_NONZERO)
        d = make_doc("complex", {"lo": 0, "diffs": [[["1/2"]]], "localized": True}, sigma=SIGMA_NONZERO)
        assert workbench.run("lift verify", [c, d]) == {"verified": True}

    def test_shorten(self, workbench: Workbench, make_doc):
        c = make_doc("complex", {"lo": -1, "diffs": [[["3"]]]}, sigma=SIGMA_TWO)
        r = make_doc("matrix", [["1"]])
        g = make_doc("matrix", [["0"]])
        result = workbench.run("lift shorten", [c, r, g])
        assert result["status"] == "verified"
        assert result["lifted"]["ranks"] == [2, 2]

    def test_toda(self, workbench: Workbench, make_doc):
        text = make_doc("complex", {"lo": 0, "localized": True, "diffs": [[["0"]], [["0"]], [["0"]]]}, sigma=SIGMA_TWO)
        result = workbench.run("lift toda", [text])
        assert result["class_status"] == "zero-with-reason"
        assert result["theta"] == "0"


# =============================================================================
# ltheory
# =============================================================================


class TestLTheoryCommands:

    def test_qgroup(self, workbench: Workbench, make_doc):
        result = workbench.run("ltheory qgroup", [make_doc("complex", POINT)], n=0, eps=-1, side="quadratic")
        assert result["group"] == {"free": 0, "torsion": [2]}
        assert result["description"] == "Z/2"

    def test_boundary(self, workbench: Workbench, make_doc):
        result = workbench.run("ltheory boundary", [make_doc("form", {"matrix": [["2"]]})])
        assert result == {"module": [2], "pairing": [["1/2"]]}

    def test_linking_form(self, workbench: Workbench, make_doc):
        text = make_doc("linking_form", {"s": [["2"]], "pairing": [["1/2"]]})
        assert workbench.run("ltheory linking", [text])["nonsingular"] is True

    def test_linking_value(self, workbench: Workbench, make_doc):
        docs = [
            make_doc("torsion_module", {"s": [["3"]]}),
            make_doc("matrix", [["1"]]),
            make_doc("matrix", [["2"]]),
        ]
        assert workbench.run("ltheory linking", docs) == {"value": "2/3"}

    def test_dual(self, workbench: Workbench, make_doc):
        result = workbench.run("ltheory dual", [make_doc("torsion_module", {"s": [["2", "0"], ["1", "2"]]})])
        assert result == {"dual": [["2", "1"], ["0", "2"]], "module": [4], "double_dual": True}

    def test_witt_bound_comes_from_settings(self, make_doc):
        workbench = Workbench(Settings(witt_bound=2))
        text = make_doc("linking_form", {"s": [["2", "0"], ["0", "2"]], "pairing": [["0", "1/2"], ["1/2", "0"]]})
        with pytest.raises(WittBoundExceededError):
            workbench.run("ltheory witt", [text])

    def test_witt_equivalence(self, workbench: Workbench, make_doc):
        text = make_doc("linking_form", {"s": [["3"]], "pairing": [["1/3"]]})
        assert workbench.run("ltheory witt", [text, text]) == {"witt_equivalent": True}

    def test_extension(self, workbench: Workbench, make_doc):
        two = make_doc("torsion_module", {"s": [["2"]]})
        result = workbench.run("ltheory extension", [two, two, make_doc("matrix", [["1"]])])
        assert result["module"] == [4]
        assert result["verified"] is True

    def test_extension_needs_modules(self, workbench: Workbench, make_doc):
        with pytest.raises(ToolError):
            workbench.run("ltheory extension", [make_doc("torsion_module", {"s": [["2"]]})])

    def test_poincare_with_and_without_sigma(self, workbench: Workbench, make_doc):
        assert workbench.run("ltheory poincare", [make_doc("form", {"matrix": [["2"]]})]) == {"poincare": False}
        text = make_doc("form", {"matrix": [["2"]]}, sigma=SIGMA_NONZERO)
        assert workbench.run("ltheory poincare", [text]) == {"poincare": True}

    def test_symmetrize(self, workbench: Workbench, make_doc):
        result = workbench.run("ltheory symmetrize", [make_doc("form", {"matrix": [["1"]]})])
        assert result["structure"]["components"] == [[{"p": 0, "q": 0, "matrix": [["2"]]}]]

    def test_hom(self, workbench: Workbench, make_doc):
        m = make_doc("torsion_module", {"s": [["4"]]})
        n = make_doc("torsion_module", {"s": [["6"]]})
        assert workbench.run("ltheory hom", [m, n]) == {"hom_order": 2, "tor1_order": 2}
