"""Symbolic derivation of BBGKY hierarchy equations with a dense-matrix checker."""
from .cluster import cluster_expand, expand_commutator, set_partitions
from .deriver import DerivationMemo, SystemSpec, build_master_equation, derive
from .dsl import parse_spec, render_spec
from .errors import (
    BBGKYError, DomainError, SpecificationError, SpecParseError, StructuralError, UsageError,
)
from .ir import (
    Comm, Correlation, Density, Equation, Family, InteractionOp, Mixed, PairedIndex,
    Product, SignedTerm, Single, TrComm, ONE, ZERO, canonicalize, collect, g, rho,
    take_derivative, terms_equal, V,
)
from .render import display, to_latex
from .trace import trace_commutator, trace_matrix

__version__ = "0.1.0"

__all__ = [
    "BBGKYError", "Comm", "Correlation", "Density", "DerivationMemo", "DomainError",
    "Equation", "Family", "InteractionOp", "Mixed", "ONE", "PairedIndex", "Product",
    "SignedTerm", "Single", "SpecParseError", "SpecificationError", "StructuralError",
    "SystemSpec", "TrComm", "UsageError", "V", "ZERO", "build_master_equation",
    "canonicalize", "cluster_expand", "collect", "derive", "display", "expand_commutator",
    "g", "parse_spec", "render_spec", "rho", "set_partitions", "take_derivative",
    "terms_equal", "to_latex", "trace_commutator", "trace_matrix",
]
