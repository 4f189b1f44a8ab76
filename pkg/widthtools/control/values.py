# Third party imports
import numpy as np
from loguru import logger

# Local imports
from widthtools.planners.tree import TreeNode


def backup_values(root: TreeNode, gamma: float) -> dict[int, float]:
    """Discounted values of the root's generated children.

    value(n) = reward(n) + gamma * max over n's generated children, computed bottom-up
    without recursion so deep rollout trees are fine.
    """
    values: dict[int, float] = {}
    stack = [(root, False)]
    while stack:
        node, children_done = stack.pop()
        children = list(node.generated_children())
        if not children_done and children:
            stack.append((node, True))
            stack.extend((child, False) for child in children)
            continue
        best = max((values[id(child)] for child in children), default=None)
        values[id(node)] = node.reward + (gamma * best if best is not None else 0.0)
    return {child.action: values[id(child)] for child in root.generated_children()}


def select_action(child_values: dict[int, float], rng: np.random.Generator, action_count: int) -> int:
    """Action with the highest value; exact ties are broken uniformly at random"""
    if not child_values:
        action = int(rng.integers(action_count))
        logger.warning(f"select_action: no generated children, picking random action {action}")
        return action
    best = max(child_values.values())
    candidates = sorted(action for action, value in child_values.items() if value == best)
    return candidates[int(rng.integers(len(candidates)))]
