"""Simplex-ball oracles and linearly convergent Frank-Wolfe solvers."""

from . import oracles, polytopes, problems, simplex_ball, solvers
from .oracles import slmo, slmo_p, slmo_p_prepare, slmo_p_solve, slmo_prepare, slmo_solve
from .polytopes import DagFlowNetwork, FlowPolytope, Hypercube, L1Ball, Simplex
from .simplex_ball import SimplexBall
from .solvers import (
    StepRule,
    Stop,
    WarmStart,
    solve_afw,
    solve_fw,
    solve_pfw,
    solve_rsfw,
    solve_rsfw_p,
    solve_sfw,
    solve_sfw_p,
)

__version__ = "0.1.0"
