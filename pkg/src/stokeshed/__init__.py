"""Stokes geometry and nested contour evaluation for polynomial potentials."""

from .potential import (
    CoverPath,
    CoverPoint,
    Polynomial,
    action,
    continue_branch,
    cover_path,
    cover_point,
    eval_potential,
    find_turning_points,
)
from .stokesgraph import StokesGraph, build_stokes_graph, check_assumptions, trace_curve

__all__ = [
    "CoverPath",
    "CoverPoint",
    "Polynomial",
    "StokesGraph",
    "action",
    "build_stokes_graph",
    "check_assumptions",
    "continue_branch",
    "cover_path",
    "cover_point",
    "eval_potential",
    "find_turning_points",
    "trace_curve",
]
