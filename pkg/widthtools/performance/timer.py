import time


def unit_formatter(func):
    """Lets elapsed() report milliseconds with _format="ms"; seconds otherwise"""

    def wrapper(*args, **kwargs):
        seconds = func(*args, **kwargs)
        return seconds * 1000 if kwargs.get("_format") == "ms" else seconds

    return wrapper


class Timer:
    """Monotonic stopwatch used for time budgets and measured calls"""

    def __init__(self) -> None:
        self.__started_at = None

    @property
    def running(self) -> bool:
        return self.__started_at is not None

    def start(self) -> None:
        if self.running:
            raise TimerError("Timer is already running. Use .reset() to restart it")
        self.__started_at = time.perf_counter()

    def reset(self) -> None:
        self.__started_at = time.perf_counter()

    @unit_formatter
    def elapsed(self, *args, **kwargs) -> float:
        if not self.running:
            raise TimerError("Timer is not running yet. Use .start() to start it")
        return time.perf_counter() - self.__started_at


class TimerError(Exception):
    pass
