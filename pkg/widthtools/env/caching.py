# Standard imports
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Union

# Third party imports
from loguru import logger

# Local imports
from widthtools.env.simulator import Step, StepOutcome
from widthtools.features.screen import Screen
from widthtools.protocols.simulator import Simulator
from widthtools.utilities.exceptions import BudgetExhaustedError

Path = tuple[Step, ...]


@dataclass(frozen=True)
class CachedRecord:
    handle: Hashable
    screen: Screen
    outcome: StepOutcome


def as_path(steps: Iterable[Union[Step, int]]) -> Path:
    return tuple(step if isinstance(step, Step) else Step(int(step)) for step in steps)


class CachingSimulator:
    """Simulator front end that remembers every state reached from the current root.

    Records are keyed by the step path from the decision root. A query replays only the
    part of its path beyond the longest cached prefix, so the planner never sees whether
    a transition came from the cache or from the inner simulator.
    """

    def __init__(self, sim: Simulator, frameskip: int):
        self.sim = sim
        self.frameskip = frameskip
        self.records: dict[Path, CachedRecord] = {}
        self.hits = 0
        self.misses = 0
        self.inner_calls = 0     # over the simulator's lifetime
        self.decision_calls = 0  # since the root was last set or advanced
        self._limit: Optional[int] = None
        self.set_root()

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, path) -> bool:
        return as_path(path) in self.records

    @property
    def root(self) -> CachedRecord:
        return self.records[()]

    def set_root(self) -> None:
        """Forget everything and treat the inner simulator's current state as the root"""
        self.records = {(): CachedRecord(self.sim.save(), self.sim.screen(), StepOutcome())}
        self._reset_counters()

    def _reset_counters(self) -> None:
        self.hits = 0
        self.misses = 0
        self.decision_calls = 0

    def limit_calls(self, limit: Optional[int]) -> None:
        """Cap inner calls for the current decision; None removes the cap"""
        self._limit = limit

    def _inner_apply(self, action: int) -> StepOutcome:
        if self._limit is not None and self.decision_calls + 1 > self._limit:
            raise BudgetExhaustedError(self.decision_calls, self._limit)
        self.decision_calls += 1
        self.inner_calls += 1
        return self.sim.apply(action, self.frameskip)

    def _start_for(self, path: Path) -> tuple[int, CachedRecord, int]:
        """Longest usable cached start: (steps covered, record, applications already done in the next step)"""
        for covered in range(len(path), -1, -1):
            record = self.records.get(path[:covered])
            if record is None:
                continue
            if covered < len(path):
                step = path[covered]
                # a shorter application of the same action is a head start on this step
                for done in range(step.applications - 1, 0, -1):
                    partial = self.records.get(path[:covered] + (Step(step.action, done),))
                    if partial is not None:
                        return covered, partial, done
            return covered, record, 0
        raise KeyError('root record missing')

    def cached_apply(self, path: Iterable[Union[Step, int]]) -> tuple[StepOutcome, Screen, bool]:
        """Outcome and screen at the end of path; replayed is True on a pure cache hit"""
        path = as_path(path)
        record = self.records.get(path)
        if record is not None:
            self.hits += 1
            return record.outcome, record.screen, True

        self.misses += 1
        covered, record, done = self._start_for(path)
        self.sim.restore(record.handle)
        outcome = record.outcome if done else None
        for index in range(covered, len(path)):
            step = path[index]
            for application in range(done, step.applications):
                if application > 0 and outcome.terminal:
                    break
                single = self._inner_apply(step.action)
                outcome = single if application == 0 else outcome.then(single)
            done = 0
            self.records[path[:index + 1]] = CachedRecord(self.sim.save(), self.sim.screen(), outcome)
        final = self.records[path]
        return final.outcome, final.screen, False

    def advance_root(self, step: Union[Step, int], keep: bool = True) -> tuple[StepOutcome, Screen]:
        """Make the state after step the new root and leave the inner simulator there.

        With keep=True records below step are re-rooted and everything else dropped;
        with keep=False only the new root survives.
        """
        step = step if isinstance(step, Step) else Step(int(step))
        outcome, screen, _ = self.cached_apply((step,))
        if keep:
            self.records = {path[1:]: record for path, record in self.records.items() if path[:1] == (step,)}
        else:
            self.records = {(): self.records[(step,)]}
        self.sim.restore(self.records[()].handle)
        logger.trace(f"CachingSimulator.advance_root: {step} -> {len(self.records)} records kept")
        self._reset_counters()
        return outcome, screen
