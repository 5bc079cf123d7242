"""UAV network-slicing simulator, heuristic baselines and multi-agent learner."""

from ._uavslice import (
    ACTION_WIDTH,
    NUM_DEMAND_AREAS,
    OBS_WIDTH,
    ActionError,
    ArtifactError,
    Config,
    ConfigError,
    DomainError,
    Environment,
    baseline,
    baseline_actions,
    channel,
    evaluate,
    export_figures,
    fairness_index,
    train,
)

__all__ = [
    "ACTION_WIDTH",
    "NUM_DEMAND_AREAS",
    "OBS_WIDTH",
    "ActionError",
    "ArtifactError",
    "Config",
    "ConfigError",
    "DomainError",
    "Environment",
    "baseline",
    "baseline_actions",
    "channel",
    "evaluate",
    "export_figures",
    "fairness_index",
    "train",
]
