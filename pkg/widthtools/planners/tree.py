# Standard imports
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, TextIO

# Local imports
from widthtools.env.simulator import Step, StepOutcome
from widthtools.features.bprost import ScreenState
from widthtools.features.novelty import FeatureSet
from widthtools.features.screen import Screen


@dataclass(eq=False)
class TreeNode:
    """Lookahead node shared by the breadth-first and rollout planners.

    children is None until the node is expanded; an expanded node holds one slot per
    action id. A slot is None (breadth-first, not generated) or a node, which may still
    be unfilled (rollout, created by expansion but never simulated).
    """
    action: Optional[int] = None
    parent: Optional['TreeNode'] = None
    depth: int = 0
    step: Optional[Step] = None
    state: Optional[ScreenState] = None
    screen: Optional[Screen] = None
    outcome: StepOutcome = field(default_factory=StepOutcome)
    reward: float = 0.0       # shaped reward of the edge into this node
    path_reward: float = 0.0  # shaped reward accumulated from the root
    terminal: bool = False
    filled: bool = False
    encoded_version: int = -1
    pruned: bool = False
    retained: bool = False    # carried over from the previous decision
    visited: bool = False
    solved: bool = False
    children: Optional[list[Optional['TreeNode']]] = None

    @classmethod
    def root(cls, state: ScreenState, screen: Optional[Screen] = None, version: int = 0) -> 'TreeNode':
        return cls(state=state, screen=screen, filled=True, encoded_version=version, visited=True)

    @property
    def features(self) -> FeatureSet:
        return self.state.features

    @property
    def raw_reward(self) -> float:
        return self.outcome.reward

    @property
    def path(self) -> tuple[Step, ...]:
        steps = []
        node = self
        while node.parent is not None:
            steps.append(node.step)
            node = node.parent
        return tuple(reversed(steps))

    def expand(self, action_count: int, create: bool = False) -> None:
        """Create the child slots; with create=True every slot gets an unfilled node"""
        if self.children is not None:
            return
        if create:
            self.children = [TreeNode(action=a, parent=self, depth=self.depth + 1) for a in range(action_count)]
        else:
            self.children = [None] * action_count

    def generated_children(self) -> Iterator['TreeNode']:
        for child in self.children or ():
            if child is not None and child.filled:
                yield child

    def child(self, action: int) -> Optional['TreeNode']:
        if self.children is None:
            return None
        return self.children[action]


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0
    rollouts: int = 0
    simulator_calls: int = 0
    max_depth: int = 0
    truncated: bool = False
    solved: bool = False
    partition_keys: list[int] = field(default_factory=list)

    @property
    def nodes(self) -> int:
        return self.generated


def iter_nodes(root: TreeNode, filled_only: bool = True) -> Iterator[TreeNode]:
    """Breadth-first over the tree"""
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if filled_only and not node.filled:
            continue
        yield node
        for child in node.children or ():
            if child is not None:
                queue.append(child)


def max_depth(root: TreeNode) -> int:
    return max(node.depth for node in iter_nodes(root)) - root.depth


def count_nodes(root: TreeNode) -> int:
    return sum(1 for _ in iter_nodes(root))


def dump_tree(root: TreeNode, out: TextIO) -> int:
    """Write one line per filled node: path, depth, raw reward, pruned flag (tab separated)"""
    lines = 0
    for node in iter_nodes(root):
        path = ','.join(str(step) for step in node.path) or '-'
        out.write(f"{path}\t{node.depth}\t{node.raw_reward:g}\t{int(node.pruned)}\n")
        lines += 1
    return lines
