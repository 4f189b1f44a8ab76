"""Shared builders for the planner tests"""
from typing import Hashable, Optional, Sequence

import numpy as np

from widthtools.control.extension import SearchContext
from widthtools.env.caching import CachingSimulator
from widthtools.env.simulator import PixelSimulator
from widthtools.features.bprost import BackgroundMap, BProstEncoder, FamilySelection, FeatureLayout, TilingConfig
from widthtools.features.screen import Screen
from widthtools.planners.tree import TreeNode, iter_nodes


class ScriptedRng:
    """Stands in for a numpy Generator; integers(n) returns the next scripted pick"""

    def __init__(self, picks: Sequence[int]):
        self.picks = list(picks)

    def integers(self, n: int) -> int:
        if not self.picks:
            raise AssertionError("scripted picks exhausted")
        pick = self.picks.pop(0)
        if not 0 <= pick < n:
            raise AssertionError(f"scripted pick {pick} outside [0, {n})")
        return pick


class GraphWorld(PixelSimulator):
    """Explicit state graph. Pixel i of the 1 x n_atoms screen is lit iff atom i holds."""

    def __init__(
            self,
            transitions: dict[int, Sequence[int]],
            atoms: dict[int, Sequence[int]],
            n_atoms: int,
            start: int = 0,
            terminals: Sequence[int] = (),
            rewards: Optional[dict[int, float]] = None,
    ):
        super().__init__(len(next(iter(transitions.values()))))
        self.transitions = transitions
        self.atoms = atoms
        self.n_atoms = n_atoms
        self.start = start
        self.terminals = set(terminals)
        self.rewards = rewards or {}
        self.state = start

    @property
    def terminal(self) -> bool:
        return self.state in self.terminals

    def reset(self) -> Screen:
        self.state = self.start
        return self.screen()

    def screen(self) -> Screen:
        pixels = np.zeros((1, self.n_atoms), dtype=np.uint8)
        pixels[0, list(self.atoms[self.state])] = 1
        return Screen(pixels, 2)

    def save(self) -> Hashable:
        return self.state

    def restore(self, handle: Hashable) -> None:
        self.state = handle

    def _step_frame(self, action: int) -> tuple[float, bool]:
        self.state = self.transitions[self.state][action]
        return self.rewards.get(self.state, 0.0), False

    def background(self) -> BackgroundMap:
        """All-dark background: only lit atoms become features"""
        return BackgroundMap(np.zeros((1, self.n_atoms), dtype=np.uint8))


def make_context(
        env: PixelSimulator,
        families: FamilySelection = FamilySelection.BASIC,
        background: Optional[BackgroundMap] = None,
        frameskip: int = 1,
        extension: bool = True,
        reward_breaks_extension: bool = True,
        shape=None,
) -> SearchContext:
    screen = env.reset()
    layout = FeatureLayout(TilingConfig.per_pixel(screen.width, screen.height), screen.palette_size)
    encoder = BProstEncoder(layout, background, families)
    ctx = SearchContext(CachingSimulator(env, frameskip), encoder,
                        extension=extension, reward_breaks_extension=reward_breaks_extension)
    if shape is not None:
        ctx.shape = shape
    return ctx


def make_root(ctx: SearchContext) -> TreeNode:
    screen = ctx.csim.root.screen
    return TreeNode.root(ctx.encoder.encode(screen), screen, ctx.encoder.version)


def atom_feature(atom: int) -> int:
    """Basic feature id of a lit atom under per-pixel tiling and a 2-colour palette"""
    return atom * 2 + 1


def min_depths(root: TreeNode) -> dict[int, int]:
    """Shallowest filled node holding each feature"""
    depths = {}
    for node in iter_nodes(root):
        for feature in node.features:
            depths[feature] = min(depths.get(feature, node.depth), node.depth)
    return depths
