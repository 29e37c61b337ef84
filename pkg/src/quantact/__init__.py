"""quantact: symbolic and numerical workbench for quantizing group actions.

The package provides an exact expression engine (``expr``), truncated symbol
spaces and amplitude expansions (``symbols``), group actions by diffeomorphisms
(``actions``), the associated operator calculus and noncommutative product
(``opcalc``), the cochain differential graded algebra with Maurer-Cartan
solvers (``dga``), FFT-grid numerical checks (``numfio``) and a config-driven
command line interface (``cli``).
"""

from .expr import Expr, VarBinding, parse, is_zero, GaussRat, ExprError, ParseError
from .symbols import (AmplitudeSeries, FormalSymbol, PolyXi, dump_symbol,
                      load_symbol, multi_indices, taylor_from_amplitude)
from .actions import (ActionSpec, BUILTIN_ACTIONS, Diffeo, FiniteGroup,
                      ParamGroup, action_from_config, check_action,
                      cyclic_rotations, galilean_boosts, heisenberg,
                      integer_quarter_turns, sign_flip, translations,
                      trivial_action)
from .opcalc import FormalFunction, apply, compose, standard_star, star, to_operator
from .dga import (Cochain, CoefficientBasis, PhaseCochain, character_phase,
                  cochain_zero_report, cohomology_dims, d, delta_phase,
                  exp_system, gauge_report, mc_residual, phase_zero_report,
                  representation_report, solve_order, star_graded,
                  trivial_system, twisted_d)
from .numfio import (NumericAmplitude, WaveGrid, asymptotic_consistency,
                     fio_apply, gaussian, grid_pullback, kn_apply,
                     phase_system_apply, representation_residual,
                     spectral_tail_fraction, standard_product_residual,
                     symbol_amplitude, symbol_from_polynomial,
                     unitarity_residual)

__all__ = [
    "Expr", "VarBinding", "parse", "is_zero", "GaussRat", "ExprError",
    "ParseError",
    "AmplitudeSeries", "FormalSymbol", "PolyXi", "dump_symbol", "load_symbol",
    "multi_indices", "taylor_from_amplitude",
    "ActionSpec", "BUILTIN_ACTIONS", "Diffeo", "FiniteGroup", "ParamGroup",
    "action_from_config", "check_action", "cyclic_rotations",
    "galilean_boosts", "heisenberg", "integer_quarter_turns", "sign_flip",
    "translations", "trivial_action",
    "FormalFunction", "apply", "compose", "standard_star", "star",
    "to_operator",
    "Cochain", "CoefficientBasis", "PhaseCochain", "character_phase",
    "cochain_zero_report", "cohomology_dims", "d", "delta_phase",
    "exp_system", "gauge_report", "mc_residual", "phase_zero_report",
    "representation_report", "solve_order", "star_graded", "trivial_system",
    "twisted_d",
    "NumericAmplitude", "WaveGrid", "asymptotic_consistency", "fio_apply",
    "gaussian", "grid_pullback", "kn_apply", "phase_system_apply",
    "representation_residual", "spectral_tail_fraction",
    "standard_product_residual", "symbol_amplitude", "symbol_from_polynomial",
    "unitarity_residual",
]
