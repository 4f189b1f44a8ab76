from typing import Optional, Protocol, TYPE_CHECKING

if TYPE_CHECKING:
    from widthtools.features.bprost import ScreenState
    from widthtools.features.screen import Screen


class FeatureEncoder(Protocol):
    """Turns screens into feature sets over a fixed feature space"""

    capacity: int

    @property
    def version(self) -> int:
        """Bumped whenever earlier encodings stop being valid"""
        ...

    def encode(self, screen: 'Screen', previous: Optional['ScreenState'] = None) -> 'ScreenState':
        ...
