from enum import Enum


class Metric(Enum):
    DURATION = ('duration', 'ms')
    COUNT = ('count', 'count')
    # read from the measured function's result
    SIMULATOR_CALLS = ('simulator_calls', 'calls')
    NODES = ('nodes', 'count')
    ROLLOUTS = ('rollouts', 'count')
    TREE_DEPTH = ('max_depth', 'depth')

    def __init__(self, type_name: str, unit: str):
        self.type_name = type_name
        self.unit = unit

    @property
    def from_result(self) -> bool:
        return self not in (Metric.DURATION, Metric.COUNT)
