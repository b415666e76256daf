"""Stokes-Brinkman transmission problems on a periodic channel with an embedded porous slab,
their boundary-layer expansion in sqrt(eps), and verification studies."""

__version__ = "0.1.0"

from .core import (
    ModeField,
    PhysicalParams,
    ProblemData,
    SlabGeometry,
    SolutionPair,
    VolumeField,
    build_channel_grids,
    evaluate_field,
    make_geometry,
)
from .errors import (
    BwkbError,
    CompatibilityError,
    ConfigurationError,
    DomainError,
    InputError,
    RecursionInvariantError,
    SingularSystemError,
    SolverError,
)
from .solvers import (
    ElementaryProblemSpec,
    FullProblemSpec,
    build_dtn,
    dtn_apply,
    solve_elementary,
    solve_elementary_dtn,
    solve_full,
    solve_mixed_stokes,
)
from .wkb import ExpansionBundle, build_expansion, evaluate_expansion

__all__ = [
    "ModeField", "PhysicalParams", "ProblemData", "SlabGeometry", "SolutionPair", "VolumeField",
    "build_channel_grids", "evaluate_field", "make_geometry",
    "BwkbError", "CompatibilityError", "ConfigurationError", "DomainError", "InputError",
    "RecursionInvariantError", "SingularSystemError", "SolverError",
    "ElementaryProblemSpec", "FullProblemSpec", "build_dtn", "dtn_apply", "solve_elementary",
    "solve_elementary_dtn", "solve_full", "solve_mixed_stokes",
    "ExpansionBundle", "build_expansion", "evaluate_expansion",
]
