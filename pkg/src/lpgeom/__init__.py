"""Numerical toolkit for L^p projection and centroid bodies and continuous
Steiner symmetrization in the plane and in space."""

from __future__ import annotations

__version__ = "0.1.0"

from .bodies import Ball, Body, Ellipsoid, Lens, NormBody, PolarBody, Polytope, SupportSampled, frame, unit
from .bodyfile import BodyFileError, body_from_dict, body_to_dict, read_body, write_body
from .fixtures import Fixture, builtin_fixtures, load_fixtures
from .graph import GraphBody, graph_decompose, section_length, tabulated_graph
from .lp_transforms import (
    DiscreteLpMeasure,
    LpParams,
    TransformedBody,
    best_dilation,
    compose_gamma_pi_polar,
    constants,
    dilation_defect,
    ellipsoid_defect,
    gamma_body,
    gamma_p_support,
    lp_surface_measure,
    omega,
    pi_body,
    pi_p_support,
    pi_polar_body,
)
from .quadrature import PlanarRule, SphereRule, planar_rule, sphere_rule
from .reports import VerificationReport
from .steiner import reflect, steiner_compose_check, steiner_t, steiner_volume
from .verifier import (
    CheckSettings,
    PreconditionError,
    check_convexity,
    check_inclusion,
    check_section_monotone,
    check_variation,
    fixed_point_probe,
    run_suite,
)

__all__ = [
    "__version__",
    "Ball",
    "Body",
    "Ellipsoid",
    "Lens",
    "NormBody",
    "PolarBody",
    "Polytope",
    "SupportSampled",
    "frame",
    "unit",
    "BodyFileError",
    "body_from_dict",
    "body_to_dict",
    "read_body",
    "write_body",
    "Fixture",
    "builtin_fixtures",
    "load_fixtures",
    "GraphBody",
    "graph_decompose",
    "section_length",
    "tabulated_graph",
    "DiscreteLpMeasure",
    "LpParams",
    "TransformedBody",
    "best_dilation",
    "compose_gamma_pi_polar",
    "constants",
    "dilation_defect",
    "ellipsoid_defect",
    "gamma_body",
    "gamma_p_support",
    "lp_surface_measure",
    "omega",
    "pi_body",
    "pi_p_support",
    "pi_polar_body",
    "PlanarRule",
    "SphereRule",
    "planar_rule",
    "sphere_rule",
    "VerificationReport",
    "reflect",
    "steiner_compose_check",
    "steiner_t",
    "steiner_volume",
    "CheckSettings",
    "PreconditionError",
    "check_convexity",
    "check_inclusion",
    "check_section_monotone",
    "check_variation",
    "fixed_point_probe",
    "run_suite",
]
