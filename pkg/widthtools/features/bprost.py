# Standard imports
from dataclasses import dataclass
from enum import Enum
from typing import Optional

# Third party imports
import numpy as np
from loguru import logger

# Local imports
from widthtools.configuration.constants import (
    ATARI_TILE_COLS,
    ATARI_TILE_HEIGHT,
    ATARI_TILE_ROWS,
    ATARI_TILE_WIDTH,
    DEFAULT_CALIBRATION_ACTIONS,
    PAIR_CHUNK,
)
from widthtools.features.novelty import ID_DTYPE, FeatureSet
from widthtools.features.screen import Screen
from widthtools.protocols.simulator import Simulator
from widthtools.utilities.exceptions import CapacityViolationError, DimensionMismatchError


@dataclass(frozen=True)
class TilingConfig:
    """Split of a screen into tile_cols x tile_rows disjoint tiles of tile_w x tile_h pixels"""
    tile_cols: int
    tile_rows: int
    tile_w: int
    tile_h: int

    def __post_init__(self):
        for name in ('tile_cols', 'tile_rows', 'tile_w', 'tile_h'):
            if getattr(self, name) < 1:
                raise ValueError(f"TilingConfig.{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def atari(cls) -> 'TilingConfig':
        return cls(ATARI_TILE_COLS, ATARI_TILE_ROWS, ATARI_TILE_WIDTH, ATARI_TILE_HEIGHT)

    @classmethod
    def per_pixel(cls, width: int, height: int) -> 'TilingConfig':
        return cls(width, height, 1, 1)

    @property
    def screen_shape(self) -> tuple[int, int]:
        return self.tile_cols * self.tile_w, self.tile_rows * self.tile_h

    def check(self, screen: Screen) -> None:
        if screen.shape != self.screen_shape:
            raise DimensionMismatchError(self.screen_shape, screen.shape)


@dataclass(frozen=True)
class LayoutSizes:
    basic: int
    bpros: int
    bprot: int
    total: int


def layout_sizes(cfg: TilingConfig, palette: int) -> LayoutSizes:
    offsets = (2 * cfg.tile_rows - 1) * (2 * cfg.tile_cols - 1)
    basic = cfg.tile_cols * cfg.tile_rows * palette
    bpros = (offsets * palette * palette - palette) // 2 + palette
    bprot = offsets * palette * palette
    return LayoutSizes(basic, bpros, bprot, basic + bpros + bprot)


class FeatureFamily(Enum):
    BASIC = 'basic'
    BPROS = 'bpros'
    BPROT = 'bprot'


class FamilySelection(Enum):
    """Prefixes of the index layout an encoder may produce"""
    BASIC = ('basic',)
    BASIC_BPROS = ('basic', 'bpros')
    BPROST = ('basic', 'bpros', 'bprot')

    @classmethod
    def from_name(cls, name: str) -> 'FamilySelection':
        names = {'basic': cls.BASIC, 'bpros': cls.BASIC_BPROS, 'bprost': cls.BPROST}
        if name not in names:
            raise ValueError(f"Unknown feature families {name!r}; expected one of {sorted(names)}")
        return names[name]


class FeatureLayout:
    """Bijective index layout of the Basic, B-PROS and B-PROT families.

    Tiles are addressed as (column, row). Offsets are (drow, dcol) of the second
    tile relative to the first, with drow in [-(rows-1), rows-1] (V values) and dcol
    in [-(cols-1), cols-1] (H values). Offset id o = (drow + rows - 1) * H + (dcol + cols - 1),
    and negating an offset maps o to V*H - 1 - o.

    Global ranges: [0, basic) Basic, then B-PROS, then B-PROT.
      basic:  (row * cols + col) * p + c
      B-PROS: canonical pairs only. c < c' takes pair_rank(c, c') * V*H + o; equal colours
              keep the offsets with non-negative leading component and follow all c < c' pairs.
      B-PROT: (o * p + c) * p + c', c taken on the earlier screen, c' on the later one.
    """

    def __init__(self, tiling: TilingConfig, palette: int):
        self.tiling = tiling
        self.palette = int(palette)
        self.sizes = layout_sizes(tiling, self.palette)
        self.rows = tiling.tile_rows
        self.cols = tiling.tile_cols
        self.v = 2 * self.rows - 1
        self.h = 2 * self.cols - 1
        self.offsets = self.v * self.h
        self.centre = (self.rows - 1) * self.h + self.cols - 1
        self.half = (self.offsets + 1) // 2
        self.pair_block = self.palette * (self.palette - 1) // 2 * self.offsets
        self.bpros_start = self.sizes.basic
        self.bprot_start = self.sizes.basic + self.sizes.bpros

    # OFFSETS

    def offset_id(self, drow, dcol):
        return (drow + self.rows - 1) * self.h + (dcol + self.cols - 1)

    def decode_offset(self, o: int) -> tuple[int, int]:
        return o // self.h - (self.rows - 1), o % self.h - (self.cols - 1)

    def negate(self, o):
        return self.offsets - 1 - o

    def pair_rank(self, c, c2):
        return c * self.palette - c * (c + 1) // 2 + (c2 - c - 1)

    # BASIC

    def encode_basic(self, col: int, row: int, colour: int) -> int:
        if not (0 <= col < self.cols and 0 <= row < self.rows and 0 <= colour < self.palette):
            raise CapacityViolationError((col, row, colour), self.sizes.basic)
        return (row * self.cols + col) * self.palette + colour

    def decode_basic(self, index: int) -> tuple[int, int, int]:
        tile, colour = divmod(index, self.palette)
        row, col = divmod(tile, self.cols)
        return col, row, colour

    def split_basic(self, members: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised decode_basic: (cols, rows, colours)"""
        tiles, colours = np.divmod(members, self.palette)
        rows, cols = np.divmod(tiles, self.cols)
        return cols, rows, colours

    # B-PROS

    def canonical_bpros(self, o, c, c2):
        """Vectorised B-PROS index for offset ids o between colours c and c2"""
        o = np.asarray(o, dtype=ID_DTYPE)
        c = np.asarray(c, dtype=ID_DTYPE)
        c2 = np.asarray(c2, dtype=ID_DTYPE)
        flip = c > c2
        o = np.where(flip, self.negate(o), o)
        low = np.where(flip, c2, c)
        high = np.where(flip, c, c2)
        same = low == high
        o = np.where(same & (o < self.centre), self.negate(o), o)
        local = np.where(
            same,
            self.pair_block + low * self.half + (o - self.centre),
            self.pair_rank(low, high) * self.offsets + o,
        )
        return self.bpros_start + local

    def encode_bpros(self, drow: int, dcol: int, colour: int, other: int) -> int:
        self._check_offset(drow, dcol)
        return int(self.canonical_bpros(self.offset_id(drow, dcol), colour, other))

    def decode_bpros(self, index: int) -> tuple[int, int, int, int]:
        local = index - self.bpros_start
        if local >= self.pair_block:
            colour, rest = divmod(local - self.pair_block, self.half)
            drow, dcol = self.decode_offset(rest + self.centre)
            return drow, dcol, colour, colour
        rank, o = divmod(local, self.offsets)
        colour = 0
        while rank >= self.palette - 1 - colour:
            rank -= self.palette - 1 - colour
            colour += 1
        drow, dcol = self.decode_offset(o)
        return drow, dcol, colour, colour + 1 + rank

    # B-PROT

    def encode_bprot(self, drow: int, dcol: int, colour: int, other: int) -> int:
        self._check_offset(drow, dcol)
        return self.bprot_start + (self.offset_id(drow, dcol) * self.palette + colour) * self.palette + other

    def decode_bprot(self, index: int) -> tuple[int, int, int, int]:
        rest, other = divmod(index - self.bprot_start, self.palette)
        o, colour = divmod(rest, self.palette)
        drow, dcol = self.decode_offset(o)
        return drow, dcol, colour, other

    def family_of(self, index: int) -> FeatureFamily:
        if not 0 <= index < self.sizes.total:
            raise CapacityViolationError(index, self.sizes.total)
        if index < self.bpros_start:
            return FeatureFamily.BASIC
        if index < self.bprot_start:
            return FeatureFamily.BPROS
        return FeatureFamily.BPROT

    def describe(self, index: int) -> str:
        match self.family_of(index):
            case FeatureFamily.BASIC:
                col, row, colour = self.decode_basic(index)
                return f"basic(tile=({col},{row}), colour={colour})"
            case FeatureFamily.BPROS:
                drow, dcol, colour, other = self.decode_bpros(index)
                return f"bpros(offset=({drow},{dcol}), colours=({colour},{other}))"
            case FeatureFamily.BPROT:
                drow, dcol, colour, other = self.decode_bprot(index)
                return f"bprot(offset=({drow},{dcol}), colours=({colour},{other}))"

    def _check_offset(self, drow: int, dcol: int) -> None:
        if abs(drow) >= self.rows or abs(dcol) >= self.cols:
            raise CapacityViolationError((drow, dcol), self.offsets)


class BackgroundMap:
    """Per-pixel background record. A pixel leaves the background the first time it
    shows a colour other than its stored one and never returns."""

    def __init__(self, stored_color: np.ndarray):
        self.stored_color = np.array(stored_color, dtype=np.uint8)
        self.stored_color.flags.writeable = False
        self.is_background = np.ones(self.stored_color.shape, dtype=bool)
        self.version = 0

    @classmethod
    def from_screen(cls, screen: Screen) -> 'BackgroundMap':
        return cls(screen.pixels)

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.stored_color.shape[1]), int(self.stored_color.shape[0])

    @property
    def background_count(self) -> int:
        return int(np.count_nonzero(self.is_background))

    def masked(self, screen: Screen) -> np.ndarray:
        """Pixels skipped during extraction: background pixels still showing their stored colour"""
        if screen.shape != self.shape:
            raise DimensionMismatchError(self.shape, screen.shape)
        return self.is_background & (screen.pixels == self.stored_color)


def background_update(bg: BackgroundMap, screen: Screen) -> int:
    if screen.shape != bg.shape:
        raise DimensionMismatchError(bg.shape, screen.shape)
    flipped = bg.is_background & (screen.pixels != bg.stored_color)
    changed = int(np.count_nonzero(flipped))
    if changed:
        bg.is_background[flipped] = False
        bg.version += 1
    return changed


def calibrate_background(
        sim: Simulator,
        n_actions: int = DEFAULT_CALIBRATION_ACTIONS,
        rng_seed: Optional[int] = None,
        frames: int = 1,
) -> BackgroundMap:
    """Build a background map from random play, leaving the simulator where it started.

    The first screen provides the stored colours. A terminal state during calibration
    restarts play from the starting state.
    """
    start = sim.save()
    bg = BackgroundMap.from_screen(sim.screen())
    rng = np.random.default_rng(rng_seed)
    for _ in range(n_actions):
        outcome = sim.apply(int(rng.integers(sim.action_count)), frames)
        background_update(bg, sim.screen())
        if outcome.terminal:
            sim.restore(start)
    sim.restore(start)
    logger.debug(
        f"calibrate_background: {n_actions} actions, "
        f"{bg.background_count} of {bg.stored_color.size} pixels background"
    )
    return bg


@dataclass(frozen=True)
class ScreenState:
    """Features of one screen given the previous decision point's screen"""
    features: FeatureSet
    basic: FeatureSet


class BProstEncoder:
    """Maps screens to B-PROST feature sets under a fixed layout and background map"""

    def __init__(
            self,
            layout: FeatureLayout,
            background: Optional[BackgroundMap] = None,
            families: FamilySelection = FamilySelection.BPROST,
    ):
        self.layout = layout
        self.background = background
        self.families = families
        width, height = layout.tiling.screen_shape
        if background is not None and background.shape != (width, height):
            raise DimensionMismatchError((width, height), background.shape)
        rows = np.arange(height) // layout.tiling.tile_h
        cols = np.arange(width) // layout.tiling.tile_w
        self._pixel_base = ((rows[:, None] * layout.cols + cols[None, :]) * layout.palette).astype(ID_DTYPE)
        sizes = layout.sizes
        self.capacity = {
            FamilySelection.BASIC: sizes.basic,
            FamilySelection.BASIC_BPROS: sizes.basic + sizes.bpros,
            FamilySelection.BPROST: sizes.total,
        }[families]

    @property
    def version(self) -> int:
        """Changes whenever the background map changes, invalidating earlier encodings"""
        return 0 if self.background is None else self.background.version

    def basic(self, screen: Screen) -> FeatureSet:
        self.layout.tiling.check(screen)
        if screen.palette_size > self.layout.palette:
            raise CapacityViolationError(screen.palette_size - 1, self.layout.palette)
        ids = self._pixel_base + screen.pixels
        if self.background is not None:
            ids = ids[~self.background.masked(screen)]
        return FeatureSet(np.unique(ids), self.capacity)

    def bpros(self, basic: FeatureSet) -> np.ndarray:
        members = basic.members
        if not members.size:
            return members
        cols, rows, colours = self.layout.split_basic(members)
        n = members.size
        found = np.empty(0, dtype=ID_DTYPE)
        # rows of the upper pair triangle, a block at a time
        step = max(1, PAIR_CHUNK // n)
        for start in range(0, n, step):
            block = np.arange(start, min(start + step, n))
            i, j = np.nonzero(np.arange(start, n)[None, :] >= block[:, None])
            first, second = block[i], start + j
            offsets = self.layout.offset_id(rows[second] - rows[first], cols[second] - cols[first])
            found = np.union1d(found, self.layout.canonical_bpros(offsets, colours[first], colours[second]))
        return found.astype(ID_DTYPE, copy=False)

    def bprot(self, previous: FeatureSet, current: FeatureSet) -> np.ndarray:
        if not previous.members.size or not current.members.size:
            return np.empty(0, dtype=ID_DTYPE)
        layout = self.layout
        p_cols, p_rows, p_colours = layout.split_basic(previous.members)
        c_cols, c_rows, c_colours = layout.split_basic(current.members)
        found = np.empty(0, dtype=ID_DTYPE)
        step = max(1, PAIR_CHUNK // current.members.size)
        for start in range(0, previous.members.size, step):
            block = slice(start, start + step)
            offsets = layout.offset_id(c_rows[None, :] - p_rows[block, None], c_cols[None, :] - p_cols[block, None])
            ids = layout.bprot_start + (offsets * layout.palette + p_colours[block, None]) * layout.palette + c_colours[None, :]
            found = np.union1d(found, ids.ravel())
        return found.astype(ID_DTYPE, copy=False)

    def encode(self, screen: Screen, previous: Optional[ScreenState] = None) -> ScreenState:
        """Encode screen; previous is the state at the preceding decision point (None at episode start)"""
        basic = self.basic(screen)
        parts = [basic.members]
        if self.families is not FamilySelection.BASIC:
            parts.append(self.bpros(basic))
        if self.families is FamilySelection.BPROST and previous is not None:
            parts.append(self.bprot(previous.basic, basic))
        # families occupy disjoint ascending ranges, so concatenation stays sorted
        return ScreenState(FeatureSet(np.concatenate(parts), self.capacity), basic)


def extract_basic(screen: Screen, bg: Optional[BackgroundMap], cfg: TilingConfig) -> FeatureSet:
    layout = FeatureLayout(cfg, screen.palette_size)
    return BProstEncoder(layout, bg, FamilySelection.BPROST).basic(screen)


def extract_bpros(basic: FeatureSet, cfg: TilingConfig, palette: int) -> FeatureSet:
    layout = FeatureLayout(cfg, palette)
    encoder = BProstEncoder(layout, None, FamilySelection.BPROST)
    return FeatureSet(encoder.bpros(basic), layout.sizes.total)


def extract_bprot(prev_basic: FeatureSet, cur_basic: FeatureSet, cfg: TilingConfig, palette: int) -> FeatureSet:
    layout = FeatureLayout(cfg, palette)
    encoder = BProstEncoder(layout, None, FamilySelection.BPROST)
    return FeatureSet(encoder.bprot(prev_basic, cur_basic), layout.sizes.total)


def extract_bprost(prev: Optional[Screen], cur: Screen, bg: Optional[BackgroundMap], cfg: TilingConfig) -> ScreenState:
    encoder = BProstEncoder(FeatureLayout(cfg, cur.palette_size), bg, FamilySelection.BPROST)
    previous = ScreenState(FeatureSet.empty(encoder.capacity), encoder.basic(prev)) if prev is not None else None
    return encoder.encode(cur, previous)
