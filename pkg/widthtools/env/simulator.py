# Standard imports
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Hashable

# Local imports
from widthtools.features.screen import Screen
from widthtools.utilities.exceptions import SimulatorUsageError


@dataclass(frozen=True)
class StepOutcome:
    """Result of applying an action: raw reward, terminal and death flags, frames used"""
    reward: float = 0.0
    terminal: bool = False
    death: bool = False
    frames: int = 0

    def then(self, later: 'StepOutcome') -> 'StepOutcome':
        """Aggregate two consecutive applications"""
        return StepOutcome(
            reward=self.reward + later.reward,
            terminal=later.terminal,
            death=self.death or later.death,
            frames=self.frames + later.frames,
        )


@dataclass(frozen=True, order=True)
class Step:
    """One lookahead edge: action applied `applications` times in a row, each for frameskip frames"""
    action: int
    applications: int = 1

    def __post_init__(self):
        if self.applications < 1:
            raise ValueError(f"Step applications must be at least 1, got {self.applications}")

    def __str__(self) -> str:
        return f"{self.action}" if self.applications == 1 else f"{self.action}x{self.applications}"


class PixelSimulator(ABC):
    """Base for deterministic pixel simulators stepped frame by frame"""

    def __init__(self, action_count: int):
        self.action_count = action_count
        self.calls = 0

    @property
    @abstractmethod
    def terminal(self) -> bool:
        ...

    @abstractmethod
    def reset(self) -> Screen:
        ...

    @abstractmethod
    def screen(self) -> Screen:
        ...

    @abstractmethod
    def save(self) -> Hashable:
        ...

    @abstractmethod
    def restore(self, handle: Hashable) -> None:
        ...

    @abstractmethod
    def _step_frame(self, action: int) -> tuple[float, bool]:
        """Advance one frame; returns (reward, death)"""
        ...

    def apply(self, action: int, frames: int) -> StepOutcome:
        if self.terminal:
            raise SimulatorUsageError("apply called on a terminal state")
        if not 0 <= action < self.action_count:
            raise SimulatorUsageError(f"action {action} outside [0, {self.action_count})")
        if frames < 1:
            raise SimulatorUsageError(f"frames must be at least 1, got {frames}")

        self.calls += 1
        reward = 0.0
        death = False
        consumed = 0
        for _ in range(frames):
            frame_reward, frame_death = self._step_frame(action)
            reward += frame_reward
            death = death or frame_death
            consumed += 1
            if self.terminal:
                break
        return StepOutcome(reward, self.terminal, death, consumed)
