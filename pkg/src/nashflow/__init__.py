"""Best-response dynamics and Nash equilibrium tools for continuous-action strategic games."""
from .basin import BasinMap, InitialGrid, cluster_limit_points, sweep
from .bestresponse import (ArgmaxConfig, BestResponseSpec, ClosedForm, NumericArgmax,
                           best_response, br_map, closed_form_br, numeric_argmax_br)
from .dynamics import (Converged, Cycle, Diverged, MaxStepsExceeded, StopCriteria, Trajectory,
                       UpdateRule, simulate, step)
from .equilibrium import (EquilibriumCertificate, certify, certify_converged_point,
                          enumerate_grid, epsilon_nash_residual, fixed_point_residual)
from .expr import evaluate, free_variables, parse, tokenize
from .game import (DerivedLet, PlayerSpec, StrategicGame, bindings, check_game, payoff,
                   validate_game)
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
