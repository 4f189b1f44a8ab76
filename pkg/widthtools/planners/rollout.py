# Standard imports
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

# Third party imports
import numpy as np
from loguru import logger

# Local imports
from widthtools.control.extension import SearchContext, fill_node
from widthtools.features.novelty import (
    DepthTable,
    NoveltyKind,
    PartitionedDepthTable,
    classify_novelty,
    lift_conjunctions,
    update_depths,
)
from widthtools.performance.budget import Budget
from widthtools.planners.iw import logscore, retain_subtree
from widthtools.planners.tree import SearchStats, TreeNode, iter_nodes
from widthtools.utilities.exceptions import BudgetExhaustedError, InternalInvariantError


class RolloutCase(Enum):
    IMPROVED = 1  # continue: some feature reached at a smaller depth than recorded
    PRUNED = 2    # stop: first visit without improvement; the node is solved
    STALE = 3     # stop: revisit where no feature sits at its recorded depth; solved
    ON_TRACK = 4  # continue: revisit where some feature sits exactly at its recorded depth
    TERMINAL = 0  # stop: terminal node, solved


@dataclass
class RolloutRecord:
    """Trace of one rollout: the case taken at each step, improved features and newly solved nodes"""
    cases: list[RolloutCase] = field(default_factory=list)
    improved: list[int] = field(default_factory=list)
    newly_solved: int = 0

    @property
    def length(self) -> int:
        return len(self.cases)

    @property
    def progressed(self) -> bool:
        return bool(self.improved) or self.newly_solved > 0

    def __str__(self) -> str:
        cases = ' '.join(str(case.value) for case in self.cases)
        return f"cases=[{cases}] improved={len(self.improved)} solved={self.newly_solved}"


@dataclass
class RolloutTree:
    root: TreeNode
    depth_table: Union[DepthTable, PartitionedDepthTable]
    rollout_count: int = 0
    node_count: int = 1
    records: list[RolloutRecord] = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)


def solve_and_propagate(n: TreeNode) -> int:
    """Label n solved, then every ancestor whose children are all solved; returns how many were newly labelled"""
    newly = 0
    if not n.solved:
        n.solved = True
        newly += 1
    parent = n.parent
    while parent is not None and not parent.solved and parent.children is not None \
            and all(child is not None and child.solved for child in parent.children):
        parent.solved = True
        newly += 1
        parent = parent.parent
    return newly


class RolloutSearch:
    """Rollout IW(k) over one lookahead tree.

    Each rollout walks down from the root choosing uniformly among unsolved children and
    filling nodes on first visit, then stops or continues according to how the node's
    features compare with the depth table.
    """

    def __init__(
            self,
            ctx: SearchContext,
            tree: RolloutTree,
            rng: np.random.Generator,
            width: int = 1,
            trace: bool = False,
    ):
        self.ctx = ctx
        self.tree = tree
        self.rng = rng
        self.width = width
        self.trace = trace

    def table_for(self, node: TreeNode) -> DepthTable:
        table = self.tree.depth_table
        if isinstance(table, PartitionedDepthTable):
            return table.table(logscore(node.path_reward))
        return table

    def features_of(self, node: TreeNode):
        return lift_conjunctions(node.features, self.width)

    def initialise(self) -> None:
        root = self.tree.root
        root.visited = True
        update_depths(self.table_for(root), self.features_of(root), root.depth)

    def rollout(self) -> RolloutRecord:
        record = RolloutRecord()
        node = self.tree.root
        while True:
            node.expand(self.ctx.action_count, create=True)
            unsolved = [child for child in node.children if not child.solved]
            if not unsolved:
                raise InternalInvariantError(f"expanded unsolved node at depth {node.depth} has no unsolved child")
            child = unsolved[int(self.rng.integers(len(unsolved)))]
            if not child.filled:
                fill_node(self.ctx, child)
                self.tree.node_count += 1

            if child.terminal:
                child.visited = True
                record.cases.append(RolloutCase.TERMINAL)
                record.newly_solved += solve_and_propagate(child)
                return record

            features = self.features_of(child)
            table = self.table_for(child)
            if not len(features):
                kind = NoveltyKind.STALE
            else:
                kind = classify_novelty(features, child.depth, table).kind

            if kind is NoveltyKind.NOVEL:
                child.visited = True
                improved = update_depths(table, features, child.depth)
                record.improved.extend(improved)
                record.cases.append(RolloutCase.IMPROVED)
                node = child
            elif not child.visited:
                child.visited = True
                record.cases.append(RolloutCase.PRUNED)
                record.newly_solved += solve_and_propagate(child)
                return record
            elif kind is NoveltyKind.STALE:
                record.cases.append(RolloutCase.STALE)
                record.newly_solved += solve_and_propagate(child)
                return record
            else:
                record.cases.append(RolloutCase.ON_TRACK)
                node = child

    def run(self, budget: Budget) -> SearchStats:
        tree = self.tree
        stats = tree.stats
        budget.start(self.ctx.csim)
        try:
            self.initialise()
            if tree.root.terminal:
                tree.root.solved = True
            while not tree.root.solved:
                if budget.exhausted():
                    stats.truncated = True
                    break
                record = self.rollout()
                tree.rollout_count += 1
                if self.trace:
                    tree.records.append(record)
                    logger.trace(f"rollout {tree.rollout_count}: {record}")
        except BudgetExhaustedError as e:
            logger.trace(f"RolloutSearch.run: {e}")
            stats.truncated = True
        finally:
            stats.simulator_calls = self.ctx.csim.decision_calls
            budget.stop()

        stats.rollouts = tree.rollout_count
        stats.generated = tree.node_count - 1
        stats.solved = tree.root.solved
        stats.max_depth = max(node.depth for node in iter_nodes(tree.root)) - tree.root.depth
        if isinstance(tree.depth_table, PartitionedDepthTable):
            stats.partition_keys = tree.depth_table.keys
        return stats


def new_tree(root: TreeNode, capacity: int, partitioned: bool = False) -> RolloutTree:
    table = PartitionedDepthTable(capacity) if partitioned else DepthTable(capacity)
    return RolloutTree(root, table)


def generate_lookahead_tree(
        ctx: SearchContext,
        root: TreeNode,
        budget: Budget,
        rng: np.random.Generator,
        width: int = 1,
        partitioned: bool = False,
        trace: bool = False,
) -> RolloutTree:
    """Run rollouts from root until it is solved or the budget runs out"""
    capacity = lift_conjunctions(root.features, width).capacity
    tree = new_tree(root, capacity, partitioned)
    RolloutSearch(ctx, tree, rng, width, trace).run(budget)
    return tree


def reuse_subtree(tree: RolloutTree, executed: int, root: TreeNode) -> RolloutTree:
    """Tree for the next decision after executed was carried out from tree.root.

    root is the freshly encoded state after execution. The executed child's subtree,
    when it was generated, moves under root with every visited and solved flag cleared
    and depths rebased; a fresh depth table is always created.
    """
    child = tree.root.child(executed)
    capacity = tree.depth_table.capacity
    partitioned = isinstance(tree.depth_table, PartitionedDepthTable)
    if child is None or not child.filled:
        return new_tree(root, capacity, partitioned)
    return new_tree(retain_subtree(child, root), capacity, partitioned)


class RolloutPlanner:
    """Rollout IW(k); partitioned depth tables give the subscoring variant"""

    def __init__(self, width: int = 1, partitioned: bool = False, caching: bool = False, trace: bool = False):
        self.width = width
        self.partitioned = partitioned
        self.caching = caching
        self.trace = trace
        self.tree: Optional[RolloutTree] = None

    def plan(self, ctx: SearchContext, root: TreeNode, budget: Budget, rng: np.random.Generator) -> SearchStats:
        if self.tree is None or self.tree.root is not root:
            capacity = lift_conjunctions(root.features, self.width).capacity
            self.tree = new_tree(root, capacity, self.partitioned)
        RolloutSearch(ctx, self.tree, rng, self.width, self.trace).run(budget)
        return self.tree.stats

    def next_root(self, executed: Optional[TreeNode], root: TreeNode) -> TreeNode:
        if not self.caching or executed is None or self.tree is None:
            self.tree = None
            return root
        self.tree = reuse_subtree(self.tree, executed.action, root)
        return self.tree.root
