# Standard imports
import math
from collections import deque
from typing import Callable, Optional, Sequence

# Third party imports
import numpy as np
from loguru import logger

# Local imports
from widthtools.control.extension import SearchContext, fill_node
from widthtools.features.novelty import FeatureSet, PartitionedTable, lift_conjunctions, partition_mark_and_test
from widthtools.performance.budget import Budget
from widthtools.planners.tree import SearchStats, TreeNode, iter_nodes
from widthtools.utilities.exceptions import BudgetExhaustedError, ConfigurationError

PartitionKey = Callable[[TreeNode], int]


def logscore(r: float) -> int:
    """Integer approximation of log2 of an accumulated reward; 0 for non-positive rewards"""
    if r <= 0:
        return 0
    if r < 1:
        return math.floor(math.log2(r))
    return 1 + math.floor(math.log2(r))


def goal_count_key(goals: FeatureSet) -> PartitionKey:
    def key(node: TreeNode) -> int:
        return len(node.features.intersection(goals))
    return key


def logscore_key(node: TreeNode) -> int:
    return logscore(node.path_reward)


def single_key(node: TreeNode) -> int:
    return 0


def _width_search(
        ctx: SearchContext,
        root: TreeNode,
        budget: Budget,
        key: PartitionKey,
        width: int = 1,
        action_order: Optional[Sequence[int]] = None,
) -> SearchStats:
    """Breadth-first search that prunes every generated node without a new (partitioned) feature.

    Pruned nodes stay in the tree so their rewards take part in the backup, but are never
    expanded. Nodes retained from the previous decision are neither tested nor used to
    mark features.
    """
    order = list(action_order) if action_order is not None else list(range(ctx.action_count))
    if sorted(order) != list(range(ctx.action_count)):
        raise ConfigurationError(f"action order {order} is not a permutation of {ctx.action_count} actions")

    stats = SearchStats()
    tables = PartitionedTable(lift_conjunctions(root.features, width).capacity)
    partition_mark_and_test(tables, key(root), lift_conjunctions(root.features, width))

    budget.start(ctx.csim)
    queue = deque([root])
    try:
        while queue:
            if budget.exhausted():
                stats.truncated = True
                break
            node = queue.popleft()
            if node.terminal:
                continue
            stats.expanded += 1
            node.expand(ctx.action_count)
            for action in order:
                child = node.children[action]
                if child is None:
                    child = TreeNode(action=action, parent=node, depth=node.depth + 1)
                    node.children[action] = child
                if not child.filled:
                    fill_node(ctx, child)
                    stats.generated += 1
                if child.retained:
                    if not child.terminal:
                        queue.append(child)
                    continue
                novel, _ = partition_mark_and_test(tables, key(child), lift_conjunctions(child.features, width))
                child.pruned = not novel
                if novel and not child.terminal:
                    queue.append(child)
    except BudgetExhaustedError as e:
        logger.trace(f"_width_search: {e}")
        stats.truncated = True
    finally:
        stats.simulator_calls = ctx.csim.decision_calls
        budget.stop()

    # drop slots that were allocated but never generated before the budget ran out
    for node in iter_nodes(root):
        if node.children is not None:
            node.children = [c if c is not None and c.filled else None for c in node.children]
    stats.max_depth = max(node.depth for node in iter_nodes(root)) - root.depth
    stats.partition_keys = tables.keys
    return stats


def iw_search(ctx: SearchContext, root: TreeNode, k: int, budget: Budget,
              action_order: Optional[Sequence[int]] = None) -> SearchStats:
    """IW(k): breadth-first search with novelty pruning over conjunctions of k features"""
    return _width_search(ctx, root, budget, single_key, k, action_order)


def iwg_search(ctx: SearchContext, root: TreeNode, goals: FeatureSet, budget: Budget,
               action_order: Optional[Sequence[int]] = None) -> SearchStats:
    """IW_G(1): one novelty table per number of goals achieved"""
    if not len(goals):
        raise ConfigurationError("iwg_search needs at least one goal feature")
    return _width_search(ctx, root, budget, goal_count_key(goals), 1, action_order)


def iws_search(ctx: SearchContext, root: TreeNode, budget: Budget,
               action_order: Optional[Sequence[int]] = None) -> SearchStats:
    """IW_S(1): one novelty table per logscore of the reward accumulated along the path"""
    return _width_search(ctx, root, budget, logscore_key, 1, action_order)


class WidthPlanner:
    """Breadth-first IW planner; with caching the executed subtree is kept as cached branches"""

    def __init__(self, key: PartitionKey = single_key, width: int = 1, caching: bool = False):
        self.key = key
        self.width = width
        self.caching = caching

    def plan(self, ctx: SearchContext, root: TreeNode, budget: Budget, rng: np.random.Generator) -> SearchStats:
        return _width_search(ctx, root, budget, self.key, self.width)

    def next_root(self, executed: Optional[TreeNode], root: TreeNode) -> TreeNode:
        if not self.caching or executed is None:
            return root
        return retain_subtree(executed, root)


def retain_subtree(executed: TreeNode, root: TreeNode) -> TreeNode:
    """Re-root the executed child's subtree under the freshly encoded root"""
    root.children = executed.children
    root.step = None
    base_depth = executed.depth
    base_reward = executed.path_reward
    for child in root.children or ():
        if child is not None:
            child.parent = root
    for node in iter_nodes(root, filled_only=False):
        if node is root:
            continue
        node.depth -= base_depth
        node.path_reward -= base_reward
        node.retained = True
        node.pruned = False
        node.visited = False
        node.solved = False
        node.filled = False
    return root
