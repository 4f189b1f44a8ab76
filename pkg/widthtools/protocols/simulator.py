from typing import Hashable, Protocol, TYPE_CHECKING

if TYPE_CHECKING:
    from widthtools.env.simulator import StepOutcome
    from widthtools.features.screen import Screen


class Simulator(Protocol):
    """Deterministic environment driven one decision at a time.

    Identical (handle, action sequence) pairs must give identical outcomes and screens,
    and restore(save()) must round-trip exactly.
    """

    action_count: int
    calls: int

    @property
    def terminal(self) -> bool:
        ...

    def reset(self) -> 'Screen':
        """Return to the initial state and return its screen"""
        ...

    def apply(self, action: int, frames: int) -> 'StepOutcome':
        """Repeat action for up to frames frames; counts as one simulator call.

        Raises:
            SimulatorUsageError: if the simulator is terminal or the action is illegal
        """
        ...

    def screen(self) -> 'Screen':
        ...

    def save(self) -> Hashable:
        """Opaque handle of the current state"""
        ...

    def restore(self, handle: Hashable) -> None:
        ...
