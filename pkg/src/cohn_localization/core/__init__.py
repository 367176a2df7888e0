"""Core modules for cohn-localization."""

from .rings import DomainError, RingDescriptor, RingKind, Scalar, parse_element
from .matrix import Matrix, smith_normal_form
from .localize import CohnTriple, OreFraction, SigmaSet
from .complexes import ChainComplex, ChainMap, ModulePresentation, homology, tor
from .lifting import lift_by_clearing, shorten_left, toda_obstruction
from .ltheory import LinkingForm, TorsionModulePresentation, boundary_linking_form, q_group
from .document import Document, DocumentError, parse_document, print_document
from .settings import Settings

__all__ = [
    "DomainError",
    "RingDescriptor",
    "RingKind",
    "Scalar",
    "parse_element",
    "Matrix",
    "smith_normal_form",
    "CohnTriple",
    "OreFraction",
    "SigmaSet",
    "ChainComplex",
    "ChainMap",
    "ModulePresentation",
    "homology",
    "tor",
    "lift_by_clearing",
    "shorten_left",
    "toda_obstruction",
    "LinkingForm",
    "TorsionModulePresentation",
    "boundary_linking_form",
    "q_group",
    "Document",
    "DocumentError",
    "parse_document",
    "print_document",
    "Settings",
]
