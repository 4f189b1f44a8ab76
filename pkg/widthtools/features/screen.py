# Standard imports
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

# Third party imports
import numpy as np

# Local imports
from widthtools.configuration.constants import SCREEN_FILE_MAGIC, SCREEN_FORMAT_VERSION
from widthtools.utilities.exceptions import ScreenFormatError

# magic, version, width, height, palette
_HEADER = struct.Struct('>4sBHHH')


@dataclass(frozen=True, eq=False)
class Screen:
    """A row-major grid of colour ids. pixels has shape (height, width)."""
    pixels: np.ndarray
    palette_size: int

    def __post_init__(self):
        pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if pixels.ndim != 2:
            raise ValueError(f"Screen pixels must be two-dimensional, got shape {pixels.shape}")
        if pixels.size and int(pixels.max()) >= self.palette_size:
            raise ValueError(f"Colour {int(pixels.max())} outside palette of size {self.palette_size}")
        pixels.flags.writeable = False
        object.__setattr__(self, 'pixels', pixels)

    @classmethod
    def blank(cls, width: int, height: int, palette_size: int, colour: int = 0) -> 'Screen':
        return cls(np.full((height, width), colour, dtype=np.uint8), palette_size)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.width, self.height

    def __eq__(self, other) -> bool:
        if not isinstance(other, Screen):
            return NotImplemented
        return self.palette_size == other.palette_size and np.array_equal(self.pixels, other.pixels)

    def __hash__(self) -> int:
        return hash((self.palette_size, self.pixels.shape, self.pixels.tobytes()))


def encode_screens(screens: list[Screen]) -> bytes:
    chunks = []
    for screen in screens:
        chunks.append(_HEADER.pack(SCREEN_FILE_MAGIC, SCREEN_FORMAT_VERSION,
                                   screen.width, screen.height, screen.palette_size))
        chunks.append(screen.pixels.tobytes())
    return b''.join(chunks)


def decode_screens(data: bytes) -> list[Screen]:
    """Decode back-to-back screen records.

    Each record is the 4-byte magic b"WTSC", a format version byte, big-endian u16
    width, height and palette size, then width*height colour bytes in row-major order.
    """
    screens = []
    offset = 0
    while offset < len(data):
        if len(data) - offset < _HEADER.size:
            raise ScreenFormatError(f"truncated header at byte {offset}")
        magic, version, width, height, palette = _HEADER.unpack_from(data, offset)
        if magic != SCREEN_FILE_MAGIC:
            raise ScreenFormatError(f"bad magic {magic!r} at byte {offset}")
        if version != SCREEN_FORMAT_VERSION:
            raise ScreenFormatError(f"unsupported version {version}")
        if palette == 0 or palette > 256:
            raise ScreenFormatError(f"palette size {palette} not in 1..256")
        offset += _HEADER.size
        count = width * height
        if len(data) - offset < count:
            raise ScreenFormatError(f"expected {count} pixel bytes, found {len(data) - offset}")
        pixels = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset).reshape(height, width)
        if count and int(pixels.max()) >= palette:
            raise ScreenFormatError(f"colour {int(pixels.max())} outside palette of size {palette}")
        screens.append(Screen(pixels.copy(), palette))
        offset += count
    return screens


def write_screens(path: Union[str, Path], screens: list[Screen]) -> None:
    Path(path).write_bytes(encode_screens(screens))


def read_screens(path: Union[str, Path]) -> list[Screen]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Screen fixture not found at {path}")
    screens = decode_screens(path.read_bytes())
    if not screens:
        raise ScreenFormatError("file holds no screens")
    return screens
