"""Act-then-measure reinforcement learning under costly state observation."""

from .agents import (
    AtmAgent,
    AtmConfig,
    Decision,
    GaussianQTable,
    QTable,
    decide,
    dyna_sweep,
    kalman_update,
    measuring_value,
    q_belief,
    replicated_update,
    select_control,
)
from .belief import TransitionModel, VisitCounter, collapse, predict
from .core import EnvSpec, EpisodeFinished, StepOutcome, TabularAcnoEnv, random_mdp
from .harness import (
    EpisodeRecord,
    ExperimentConfig,
    aggregate,
    cost_sweep,
    final_summary,
    run_experiment,
)

__version__ = "0.1.0"
