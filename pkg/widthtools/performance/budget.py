# Standard imports
from typing import Optional

# Local imports
from widthtools.env.caching import CachingSimulator
from widthtools.performance.timer import Timer
from widthtools.utilities.exceptions import ConfigurationError


class Budget:
    """Per-decision planning budget in wall-clock seconds or inner simulator calls.

    Call budgets are exact: the caching simulator refuses the call that would exceed
    them. Time budgets are checked between expansions and rollouts only.
    """

    def __init__(self, seconds: Optional[float] = None, calls: Optional[int] = None):
        if (seconds is None) == (calls is None):
            raise ConfigurationError("a budget needs exactly one of seconds or calls")
        if seconds is not None and seconds <= 0:
            raise ConfigurationError(f"budget seconds must be positive, got {seconds}")
        if calls is not None and calls <= 0:
            raise ConfigurationError(f"budget calls must be positive, got {calls}")
        self.seconds = seconds
        self.calls = calls
        self._timer = Timer()
        self._csim: Optional[CachingSimulator] = None
        self._frozen: Optional[float] = None

    @classmethod
    def unlimited(cls) -> 'Budget':
        return cls(calls=1 << 62)

    def __repr__(self) -> str:
        return f"Budget(seconds={self.seconds})" if self.calls is None else f"Budget(calls={self.calls})"

    def start(self, csim: CachingSimulator) -> None:
        self._csim = csim
        self._frozen = None
        self._timer.reset()
        csim.limit_calls(self.calls)

    def exhausted(self) -> bool:
        if self._csim is None:
            return False
        if self.calls is not None:
            return self._csim.decision_calls >= self.calls
        return self._timer.elapsed() >= self.seconds

    def elapsed(self) -> float:
        """Planning seconds so far; fixed once stop() has been called"""
        if self._frozen is not None:
            return self._frozen
        return self._timer.elapsed() if self._timer.running else 0.0

    def stop(self) -> None:
        self._frozen = self.elapsed()
        if self._csim is not None:
            self._csim.limit_calls(None)
