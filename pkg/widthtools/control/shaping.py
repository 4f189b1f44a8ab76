# Standard imports
from typing import Callable

# Local imports
from widthtools.configuration.configuration import EpisodeConfig
from widthtools.env.simulator import StepOutcome

RewardShaper = Callable[[StepOutcome], float]


def shape_reward(raw: float, death: bool, cfg: EpisodeConfig) -> float:
    """Risk-averse shaping: negative rewards scaled by alpha, deaths cost death_penalty.

    Identity for planners that are not risk averse. Shaped values steer action selection
    only; scores are always reported raw.
    """
    if not cfg.planner.risk_averse:
        return raw
    shaped = raw * cfg.alpha if raw < 0 else raw
    if death:
        shaped += cfg.death_penalty
    return shaped


def make_shaper(cfg: EpisodeConfig) -> RewardShaper:
    if not cfg.planner.risk_averse:
        return lambda outcome: outcome.reward
    return lambda outcome: shape_reward(outcome.reward, outcome.death, cfg)
