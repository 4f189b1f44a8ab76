# Standard imports
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Hashable, Mapping, Optional, Union

# Third party imports
import numpy as np
import toml
from loguru import logger

# Local imports
from widthtools.env.simulator import PixelSimulator
from widthtools.features.screen import Screen
from widthtools.utilities.exceptions import ConfigurationError, SimulatorUsageError

FLOOR = 0
AGENT = 1
ITEM = 2
MARKER = 3  # collected-item markers in the HUD and hazard cells
TOY_PALETTE = 4


class Dynamics(Enum):
    WALK = 'walk'        # the agent moves one cell per frame
    STATIC = 'static'    # nothing ever moves
    LATCHED = 'latched'  # the agent moves only once an action has been held for latch_frames frames


class ActionSet(Enum):
    HORIZONTAL = ('horizontal', ((-1, 0), (1, 0)))
    GRID = ('grid', ((0, -1), (0, 1), (-1, 0), (1, 0)))
    NOOP = ('noop', ((0, 0),))

    def __init__(self, label: str, moves: tuple):
        self.label = label
        self.moves = moves

    @classmethod
    def from_label(cls, label: str) -> 'ActionSet':
        for action_set in cls:
            if action_set.label == label:
                return action_set
        raise ConfigurationError(f"unknown action set {label!r}")


@dataclass(frozen=True)
class Item:
    x: int
    y: int
    reward: float = 1.0
    terminal: bool = False  # collecting this item ends the episode


@dataclass(frozen=True)
class GridWorldSpec:
    """Declarative description of a toy pixel environment.

    The playfield is width x height cells, one pixel each. With hud=True an extra row at
    the bottom shows one marker per item (column i turns MARKER once item i is collected)
    and the remaining lives in AGENT colour counted from the right edge.
    """
    name: str
    width: int
    height: int = 1
    dynamics: Dynamics = Dynamics.WALK
    actions: ActionSet = ActionSet.HORIZONTAL
    start: tuple[int, int] = (0, 0)
    items: tuple[Item, ...] = ()
    hazards: tuple[tuple[int, int], ...] = ()
    lives: int = 1
    hud: bool = False
    latch_frames: int = 1
    end_when_cleared: bool = True

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigurationError(f"{self.name}: grid must be at least 1x1, got {self.width}x{self.height}")
        cells = [self.start] + [(item.x, item.y) for item in self.items] + list(self.hazards)
        for x, y in cells:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ConfigurationError(f"{self.name}: cell ({x}, {y}) outside the {self.width}x{self.height} grid")
        if self.lives < 1:
            raise ConfigurationError(f"{self.name}: lives must be at least 1")
        if self.latch_frames < 1:
            raise ConfigurationError(f"{self.name}: latch_frames must be at least 1")
        if self.hud and len(self.items) + self.lives > self.width:
            raise ConfigurationError(f"{self.name}: HUD needs {len(self.items) + self.lives} columns, grid has {self.width}")

    @property
    def screen_height(self) -> int:
        return self.height + (1 if self.hud else 0)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> 'GridWorldSpec':
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigurationError(f"unknown toy environment keys: {sorted(unknown)}")
        values = dict(mapping)
        if 'dynamics' in values:
            values['dynamics'] = Dynamics(values['dynamics'])
        if 'actions' in values:
            values['actions'] = ActionSet.from_label(values['actions'])
        if 'start' in values:
            values['start'] = tuple(values['start'])
        if 'items' in values:
            values['items'] = tuple(
                Item(**item) if isinstance(item, Mapping) else Item(*item) for item in values['items']
            )
        if 'hazards' in values:
            values['hazards'] = tuple(tuple(cell) for cell in values['hazards'])
        try:
            return cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(str(e)) from e


@dataclass(frozen=True)
class GridState:
    x: int
    y: int
    collected: tuple[bool, ...]
    lives: int
    held_action: int = -1
    held_frames: int = 0
    done: bool = False


class GridWorld(PixelSimulator):
    """Deterministic single-agent grid world rendered one pixel per cell"""

    def __init__(self, spec: GridWorldSpec):
        super().__init__(len(spec.actions.moves))
        self.spec = spec
        self._items_at = {(item.x, item.y): i for i, item in enumerate(spec.items)}
        self._hazards = set(spec.hazards)
        self._base = np.full((spec.screen_height, spec.width), FLOOR, dtype=np.uint8)
        for x, y in spec.hazards:
            self._base[y, x] = MARKER
        self.state = self._initial_state()

    def _initial_state(self) -> GridState:
        x, y = self.spec.start
        return GridState(x, y, (False,) * len(self.spec.items), self.spec.lives)

    @property
    def terminal(self) -> bool:
        return self.state.done

    def reset(self) -> Screen:
        self.state = self._initial_state()
        return self.screen()

    def save(self) -> Hashable:
        return self.state

    def restore(self, handle: Hashable) -> None:
        if not isinstance(handle, GridState):
            raise SimulatorUsageError(f"{self.spec.name}: foreign state handle {handle!r}")
        self.state = handle

    def screen(self) -> Screen:
        spec = self.spec
        state = self.state
        pixels = self._base.copy()
        for i, item in enumerate(spec.items):
            if not state.collected[i]:
                pixels[item.y, item.x] = ITEM
        pixels[state.y, state.x] = AGENT
        if spec.hud:
            hud = spec.height
            for i, collected in enumerate(state.collected):
                if collected:
                    pixels[hud, i] = MARKER
            for life in range(state.lives):
                pixels[hud, spec.width - 1 - life] = AGENT
        return Screen(pixels, TOY_PALETTE)

    def goal_pixels(self) -> list[tuple[int, int, int]]:
        """(x, y, colour) of the HUD markers; each one is an atomic goal"""
        if not self.spec.hud:
            return []
        return [(i, self.spec.height, MARKER) for i in range(len(self.spec.items))]

    def _step_frame(self, action: int) -> tuple[float, bool]:
        spec = self.spec
        state = self.state
        # only latched dynamics keep a hold counter, so other states stay comparable
        held_action, held_frames = -1, 0
        if spec.dynamics is Dynamics.LATCHED:
            held_action = action
            held_frames = min(state.held_frames + 1, spec.latch_frames) if state.held_action == action else 1

        dx, dy = spec.actions.moves[action]
        match spec.dynamics:
            case Dynamics.STATIC:
                moves = False
            case Dynamics.LATCHED:
                moves = held_frames >= spec.latch_frames
            case _:
                moves = True
        x, y = state.x, state.y
        if moves:
            x = min(max(x + dx, 0), spec.width - 1)
            y = min(max(y + dy, 0), spec.height - 1)

        reward = 0.0
        done = False
        collected = state.collected
        item_index = self._items_at.get((x, y))
        if item_index is not None and not collected[item_index]:
            item = spec.items[item_index]
            collected = collected[:item_index] + (True,) + collected[item_index + 1:]
            reward += item.reward
            done = item.terminal

        death = False
        lives = state.lives
        if (x, y) in self._hazards:
            death = True
            lives -= 1
            x, y = spec.start
            held_action, held_frames = -1, 0
            done = done or lives == 0

        if spec.end_when_cleared and spec.items and all(collected):
            done = True

        self.state = GridState(x, y, collected, lives, held_action, held_frames, done)
        return reward, death


# FACTORIES

def pixel_chain(length: int) -> GridWorld:
    """Corridor of length + 1 cells; the single reward sits `length` steps right of the start"""
    return GridWorld(GridWorldSpec(
        name=f'pixel-chain-{length}',
        width=length + 1,
        items=(Item(length, 0, 1.0, terminal=True),),
    ))


def collector_grid(
        width: int,
        height: int,
        items: tuple[tuple[int, int], ...] = ((0, 0),),
        start: Optional[tuple[int, int]] = None,
        hud: bool = True,
) -> GridWorld:
    start = start if start is not None else (width // 2, height // 2)
    return GridWorld(GridWorldSpec(
        name=f'collector-grid-{width}x{height}',
        width=width,
        height=height,
        actions=ActionSet.GRID,
        start=start,
        items=tuple(Item(x, y, 1.0) for x, y in items),
        hud=hud and bool(items),
    ))


def hazard_corridor(length: int = 8) -> GridWorld:
    """A coin on a lethal cell two steps left of the start and a safe coin at the far right"""
    if length < 5:
        raise ConfigurationError(f"hazard corridor needs length >= 5, got {length}")
    return GridWorld(GridWorldSpec(
        name=f'hazard-corridor-{length}',
        width=length,
        start=(2, 0),
        items=(Item(0, 0, 1.0), Item(length - 1, 0, 1.0, terminal=True)),
        hazards=((0, 0),),
        lives=2,
        hud=True,
    ))


def two_goal_corridor() -> GridWorld:
    """Items at both ends of a 7-cell corridor; collecting both needs walking back past seen cells"""
    return GridWorld(GridWorldSpec(
        name='two-goal-corridor',
        width=7,
        start=(1, 0),
        items=(Item(0, 0, 1.0), Item(6, 0, 1.0)),
        hud=True,
    ))


def static_screen(width: int = 4, height: int = 4, actions: str = 'grid') -> GridWorld:
    return GridWorld(GridWorldSpec(
        name='static-screen',
        width=width,
        height=height,
        dynamics=Dynamics.STATIC,
        actions=ActionSet.from_label(actions),
    ))


def latched_chain(length: int = 5, latch: int = 2) -> GridWorld:
    return GridWorld(GridWorldSpec(
        name=f'latched-chain-{length}',
        width=length + 1,
        dynamics=Dynamics.LATCHED,
        latch_frames=latch,
        items=(Item(length, 0, 1.0, terminal=True),),
    ))


TOY_ENVS = {
    'pixel-chain': pixel_chain,
    'collector-grid': collector_grid,
    'hazard-corridor': hazard_corridor,
    'two-goal-corridor': two_goal_corridor,
    'static-screen': static_screen,
    'latched-chain': latched_chain,
}


def make_toy_env(name: str, **params) -> GridWorld:
    factory = TOY_ENVS.get(name)
    if factory is None:
        raise ConfigurationError(f"unknown environment {name!r}; expected one of {sorted(TOY_ENVS)}")
    if 'items' in params:
        params['items'] = tuple(tuple(item) for item in params['items'])
    try:
        return factory(**params)
    except TypeError as e:
        raise ConfigurationError(f"bad parameters for {name}: {e}") from e


def load_toy_env(source: Union[Mapping[str, Any], str, Path]) -> GridWorld:
    """Build a GridWorld from a spec mapping or a TOML file holding one"""
    if isinstance(source, Mapping):
        mapping = source
    else:
        path = Path(source)
        if not path.exists():
            raise FileNotFoundError(f"Toy environment file not found at {path}")
        mapping = toml.load(path)
    spec = GridWorldSpec.from_mapping(mapping)
    logger.debug(f"load_toy_env: {spec.name} {spec.width}x{spec.height} ({spec.dynamics.value}, {spec.actions.label})")
    return GridWorld(spec)
