"""Regret laboratory for online piecewise-linear games.

Games are triples ``(loss, Z, F)``; players, adversaries and exact minimax
tools operate on them, and the harness turns Monte Carlo sweeps into growth
fits.
"""

from .core import (
    BallZ,
    BoxZ,
    FiniteZ,
    Game,
    GameError,
    HullZ,
    LabeledZ,
    RegretTrace,
    eval_loss,
    make_game,
)
from .geometry import (
    Box,
    Ellipsoid,
    Interval,
    L2Ball,
    LpBall,
    Simplex,
    VertexPolytope,
    contains,
    equivalence_classes,
    l2_ball,
    linmin,
    lp_ball,
    modulus_of_convexity,
    vertices,
)
from .lp import LinearProgram, LpOutcome, solve_lp
from .losses import (
    Absolute,
    CanonicalLoss,
    CanonicalPwl,
    Congestion,
    Hinge,
    Linear,
    MulticlassHinge,
    Security,
    TwoStage,
    pwl_eval,
    to_canonical,
    two_stage_eval,
)
from .players import FTL, OGD, ConstantPlayer, ExpWeights
from .adversaries import (
    CtAdversary,
    EqualizerAdversary,
    EqualizerConfig,
    FixedAdversary,
    IidAdversary,
    critical_alpha,
    ct_step,
    equalizer_step,
    iid_step,
    equalizing_certificate,
    make_ct_adversary,
)
from .hindsight import best_in_hindsight
from .minimax import exact_value, finite_game, finite_witness, is_trivial
from .harness import fit_growth, holder_check, monte_carlo, run_game, sweep
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BallZ",
    "BoxZ",
    "FiniteZ",
    "Game",
    "GameError",
    "HullZ",
    "LabeledZ",
    "RegretTrace",
    "eval_loss",
    "make_game",
    "Box",
    "Ellipsoid",
    "Interval",
    "L2Ball",
    "LpBall",
    "Simplex",
    "VertexPolytope",
    "contains",
    "equivalence_classes",
    "l2_ball",
    "linmin",
    "lp_ball",
    "modulus_of_convexity",
    "vertices",
    "Absolute",
    "CanonicalLoss",
    "CanonicalPwl",
    "Congestion",
    "Hinge",
    "Linear",
    "MulticlassHinge",
    "Security",
    "TwoStage",
    "pwl_eval",
    "to_canonical",
    "two_stage_eval",
    "CtAdversary",
    "EqualizerAdversary",
    "EqualizerConfig",
    "FixedAdversary",
    "IidAdversary",
    "critical_alpha",
    "ct_step",
    "equalizer_step",
    "iid_step",
    "equalizing_certificate",
    "make_ct_adversary",
    "LinearProgram",
    "LpOutcome",
    "solve_lp",
    "FTL",
    "OGD",
    "ConstantPlayer",
    "ExpWeights",
    "best_in_hindsight",
    "exact_value",
    "finite_game",
    "finite_witness",
    "is_trivial",
    "fit_growth",
    "holder_check",
    "monte_carlo",
    "run_game",
    "sweep",
    "BACKEND",
]
