# Standard imports
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable

# Third party imports
from loguru import logger

# Local imports
from widthtools.configuration.constants import INFINITE_DEPTH
from widthtools.control.extension import SearchContext, fill_with_extension
from widthtools.planners.tree import TreeNode


@dataclass
class OracleResult:
    """Exhaustive reachability from the root up to a depth cap"""
    optimal_depth: dict[int, int] = field(default_factory=dict)
    layers: list[list[TreeNode]] = field(default_factory=list)
    width1: set[int] = field(default_factory=set)
    capped: bool = False

    def depth_of(self, feature: int) -> int:
        return self.optimal_depth.get(feature, INFINITE_DEPTH)

    @property
    def states(self) -> int:
        return sum(len(layer) for layer in self.layers)


def _identity(ctx: SearchContext, node: TreeNode) -> Hashable:
    # successors depend on the simulator state and, through B-PROT and the extension rule, on the features
    return ctx.csim.records[node.path].handle, node.features


def plain_bfs_oracle(ctx: SearchContext, root: TreeNode, budget_depth: int) -> OracleResult:
    """Breadth-first enumeration of every distinct state up to budget_depth, no pruning.

    Returns the minimum depth at which each feature holds and the set of features whose
    optimal depth is reached through a width-1 chain: f at depth d is certified when some
    certified feature g at depth d-1 has every depth-(d-1) node holding g lead in one step
    to a node holding f.
    """
    result = OracleResult()
    for feature in root.features:
        result.optimal_depth[feature] = 0
        result.width1.add(feature)
    seen = {_identity(ctx, root)}
    layer = [root]
    result.layers.append(layer)

    for depth in range(1, budget_depth + 1):
        next_layer = []
        for node in layer:
            if node.terminal:
                continue
            node.expand(ctx.action_count)
            for action in range(ctx.action_count):
                fill = fill_with_extension(ctx, node, action)
                child = TreeNode(
                    action=action, parent=node, depth=depth, step=fill.step, state=fill.state,
                    screen=fill.screen, outcome=fill.outcome, terminal=fill.outcome.terminal, filled=True,
                )
                node.children[action] = child
                identity = _identity(ctx, child)
                if identity in seen:
                    continue
                seen.add(identity)
                next_layer.append(child)
        if not next_layer:
            break
        for child in next_layer:
            for feature in child.features:
                result.optimal_depth.setdefault(feature, depth)
        _certify_layer(result, layer, next_layer, depth)
        result.layers.append(next_layer)
        layer = next_layer
    else:
        result.capped = any(not node.terminal for node in layer)

    logger.debug(
        f"plain_bfs_oracle: {result.states} states, {len(result.optimal_depth)} features reached, "
        f"{len(result.width1)} width-1 certified, capped={result.capped}"
    )
    return result


def _certify_layer(result: OracleResult, layer: list[TreeNode], next_layer: list[TreeNode], depth: int) -> None:
    # only features first reached at this depth can be certified here
    fresh = {f for f, d in result.optimal_depth.items() if d == depth}
    if not fresh:
        return
    holders = defaultdict(list)
    for node in layer:
        for feature in node.features:
            if feature in result.width1 and result.optimal_depth[feature] == depth - 1:
                holders[feature].append(node)
    for feature in fresh:
        for parents in holders.values():
            # every optimal node for the certified feature must reach the new one in one step
            if all(_some_child_has(node, feature) for node in parents):
                result.width1.add(feature)
                break


def _some_child_has(node: TreeNode, feature: int) -> bool:
    return any(child is not None and feature in child.features for child in node.children or ())
