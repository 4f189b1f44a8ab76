# Standard imports
from dataclasses import dataclass
from typing import Callable

# Local imports
from widthtools.env.caching import CachingSimulator
from widthtools.env.simulator import Step, StepOutcome
from widthtools.features.bprost import ScreenState
from widthtools.features.screen import Screen
from widthtools.planners.tree import TreeNode
from widthtools.protocols.encoder import FeatureEncoder


@dataclass
class SearchContext:
    """Everything a planner needs to generate nodes for one episode"""
    csim: CachingSimulator
    encoder: FeatureEncoder
    shape: Callable[[StepOutcome], float] = lambda outcome: outcome.reward
    extension: bool = True
    reward_breaks_extension: bool = True

    @property
    def action_count(self) -> int:
        return self.csim.sim.action_count


@dataclass(frozen=True)
class Fill:
    step: Step
    outcome: StepOutcome
    screen: Screen
    state: ScreenState


def fill_with_extension(ctx: SearchContext, parent: TreeNode, action: int) -> Fill:
    """Simulate action from parent, applying it a second time if nothing changed.

    A transition counts as a change when the basic feature set differs from the parent's,
    the episode ends, or (with reward_breaks_extension) the reward is non-zero. B-PROT is
    left out since it compares against the previous screen. An unchanged transition is
    extended once more by the same action for another frameskip frames.
    """
    prefix = parent.path
    step = Step(action, 1)
    outcome, screen, _ = ctx.csim.cached_apply(prefix + (step,))
    state = ctx.encoder.encode(screen, parent.state)

    unchanged = state.basic == parent.state.basic and not outcome.terminal
    if ctx.reward_breaks_extension and outcome.reward != 0:
        unchanged = False
    if ctx.extension and unchanged:
        step = Step(action, 2)
        outcome, screen, _ = ctx.csim.cached_apply(prefix + (step,))
        state = ctx.encoder.encode(screen, parent.state)
    return Fill(step, outcome, screen, state)


def fill_node(ctx: SearchContext, node: TreeNode) -> bool:
    """Materialise node's state; returns False when it was already valid at no cost.

    A node kept from an earlier decision keeps its encoding while the encoder version is
    unchanged. Otherwise it is refilled; if that changes its step, its subtree is dropped
    because the cached paths below no longer match.
    """
    if node.state is not None and node.encoded_version == ctx.encoder.version:
        node.filled = True
        return False

    fill = fill_with_extension(ctx, node.parent, node.action)
    if node.step is not None and node.step != fill.step:
        node.children = None
    node.step = fill.step
    node.outcome = fill.outcome
    node.screen = fill.screen
    node.state = fill.state
    node.reward = ctx.shape(fill.outcome)
    node.path_reward = node.parent.path_reward + node.reward
    node.terminal = fill.outcome.terminal
    node.encoded_version = ctx.encoder.version
    node.filled = True
    return True
