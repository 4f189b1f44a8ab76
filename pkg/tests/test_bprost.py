import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np

from widthtools.configuration.constants import ATARI_PALETTE_SIZE
from widthtools.env.toy import pixel_chain
from widthtools.features.bprost import (
    BackgroundMap,
    BProstEncoder,
    FamilySelection,
    FeatureFamily,
    FeatureLayout,
    ScreenState,
    TilingConfig,
    background_update,
    calibrate_background,
    extract_basic,
    extract_bpros,
    extract_bprot,
    extract_bprost,
    layout_sizes,
)
from widthtools.features.novelty import FeatureSet
from widthtools.features.screen import Screen, decode_screens, encode_screens, read_screens, write_screens
from widthtools.utilities.exceptions import DimensionMismatchError, ScreenFormatError


def screen(rows, palette=3):
    return Screen(np.array(rows, dtype=np.uint8), palette)


class TestLayoutSizes(unittest.TestCase):

    def test_atari_counts(self):
        sizes = layout_sizes(TilingConfig.atari(), 128)
        self.assertEqual(sizes.basic, 28_672)
        self.assertEqual(sizes.bpros, 6_856_768)
        self.assertEqual(sizes.bprot, 13_713_408)
        self.assertEqual(sizes.total, 20_598_848)
        self.assertEqual(TilingConfig.atari().screen_shape, (160, 210))

    def test_small_counts(self):
        sizes = layout_sizes(TilingConfig(2, 2, 1, 1), 2)
        self.assertEqual((sizes.basic, sizes.bpros, sizes.bprot, sizes.total), (8, 19, 36, 63))

    def test_bad_tiling(self):
        with self.assertRaises(ValueError):
            TilingConfig(0, 2, 1, 1)


class TestFeatureLayout(unittest.TestCase):

    def setUp(self):
        self.layout = FeatureLayout(TilingConfig(3, 2, 1, 1), 3)

    def offsets(self):
        for drow in range(-1, 2):
            for dcol in range(-2, 3):
                yield drow, dcol

    def test_bpros_is_symmetric(self):
        for drow, dcol in self.offsets():
            for c in range(3):
                for c2 in range(3):
                    with self.subTest(offset=(drow, dcol), colours=(c, c2)):
                        self.assertEqual(self.layout.encode_bpros(drow, dcol, c, c2),
                                         self.layout.encode_bpros(-drow, -dcol, c2, c))

    def test_bpros_fills_its_range(self):
        layout = self.layout
        ids = {layout.encode_bpros(drow, dcol, c, c2)
               for drow, dcol in self.offsets() for c in range(3) for c2 in range(3)}
        self.assertEqual(ids, set(range(layout.bpros_start, layout.bprot_start)))
        for index in ids:
            drow, dcol, c, c2 = layout.decode_bpros(index)
            self.assertEqual(layout.encode_bpros(drow, dcol, c, c2), index)

    def test_bprot_is_ordered(self):
        layout = self.layout
        ids = {layout.encode_bprot(drow, dcol, c, c2)
               for drow, dcol in self.offsets() for c in range(3) for c2 in range(3)}
        self.assertEqual(ids, set(range(layout.bprot_start, layout.sizes.total)))
        self.assertNotEqual(layout.encode_bprot(1, 0, 0, 1), layout.encode_bprot(-1, 0, 1, 0))

    def test_atari_layout_round_trips(self):
        layout = FeatureLayout(TilingConfig.atari(), ATARI_PALETTE_SIZE)
        rng = np.random.default_rng(8)
        for _ in range(2_000):
            col, row = int(rng.integers(layout.cols)), int(rng.integers(layout.rows))
            drow = int(rng.integers(-layout.rows + 1, layout.rows))
            dcol = int(rng.integers(-layout.cols + 1, layout.cols))
            c, c2 = (int(x) for x in rng.integers(ATARI_PALETTE_SIZE, size=2))
            with self.subTest(tile=(col, row), offset=(drow, dcol), colours=(c, c2)):
                basic = layout.encode_basic(col, row, c)
                self.assertIs(layout.family_of(basic), FeatureFamily.BASIC)
                self.assertEqual(layout.decode_basic(basic), (col, row, c))

                bpros = layout.encode_bpros(drow, dcol, c, c2)
                self.assertIs(layout.family_of(bpros), FeatureFamily.BPROS)
                self.assertIn(layout.decode_bpros(bpros), {(drow, dcol, c, c2), (-drow, -dcol, c2, c)})
                self.assertEqual(layout.encode_bpros(*layout.decode_bpros(bpros)), bpros)

                bprot = layout.encode_bprot(drow, dcol, c, c2)
                self.assertIs(layout.family_of(bprot), FeatureFamily.BPROT)
                self.assertEqual(layout.decode_bprot(bprot), (drow, dcol, c, c2))

    def test_families(self):
        layout = self.layout
        self.assertIs(layout.family_of(layout.encode_basic(2, 1, 0)), FeatureFamily.BASIC)
        self.assertIs(layout.family_of(layout.encode_bpros(0, 1, 0, 2)), FeatureFamily.BPROS)
        self.assertIs(layout.family_of(layout.encode_bprot(0, 1, 0, 2)), FeatureFamily.BPROT)
        self.assertEqual(layout.describe(layout.encode_basic(2, 1, 0)), "basic(tile=(2,1), colour=0)")
        self.assertEqual(layout.decode_basic(layout.encode_basic(2, 1, 2)), (2, 1, 2))


class TestEncoder(unittest.TestCase):

    def test_tile_colour_presence(self):
        layout = FeatureLayout(TilingConfig(2, 1, 2, 2), 3)
        encoder = BProstEncoder(layout, families=FamilySelection.BASIC)
        basic = encoder.basic(screen([[0, 1, 2, 2], [0, 0, 2, 2]]))
        expected = [layout.encode_basic(0, 0, 0), layout.encode_basic(0, 0, 1), layout.encode_basic(1, 0, 2)]
        self.assertEqual(list(basic), sorted(expected))

    def test_bpros_pairs(self):
        layout = FeatureLayout(TilingConfig(3, 2, 1, 1), 3)
        encoder = BProstEncoder(layout)
        basic = FeatureSet.from_iterable([layout.encode_basic(0, 0, 1), layout.encode_basic(2, 1, 2)],
                                         layout.sizes.total)
        expected = {layout.encode_bpros(1, 2, 1, 2), layout.encode_bpros(0, 0, 1, 1), layout.encode_bpros(0, 0, 2, 2)}
        self.assertEqual(set(encoder.bpros(basic).tolist()), expected)

    def test_bprot_pairs(self):
        layout = FeatureLayout(TilingConfig(3, 2, 1, 1), 3)
        encoder = BProstEncoder(layout)
        previous = FeatureSet.from_iterable([layout.encode_basic(0, 0, 1)], layout.sizes.total)
        current = FeatureSet.from_iterable([layout.encode_basic(1, 0, 1)], layout.sizes.total)
        self.assertEqual(encoder.bprot(previous, current).tolist(), [layout.encode_bprot(0, 1, 1, 1)])
        self.assertEqual(encoder.bprot(FeatureSet.empty(layout.sizes.total), current).size, 0)

    def test_family_selection(self):
        layout = FeatureLayout(TilingConfig(2, 2, 1, 1), 2)
        first = screen([[0, 1], [0, 0]], 2)
        second = screen([[0, 0], [1, 0]], 2)
        for families in FamilySelection:
            with self.subTest(families=families):
                encoder = BProstEncoder(layout, families=families)
                state = encoder.encode(second, encoder.encode(first))
                members = state.features.members
                self.assertTrue(np.all(np.diff(members) > 0))
                self.assertLess(int(members[-1]), encoder.capacity)
                self.assertEqual(families is FamilySelection.BPROST, bool(np.any(members >= layout.bprot_start)))
                self.assertEqual(state.basic, encoder.basic(second))

    def test_extract_bprost_matches_encoder(self):
        tiling = TilingConfig(2, 2, 1, 1)
        first = screen([[0, 1], [0, 0]], 2)
        second = screen([[0, 0], [1, 0]], 2)
        encoder = BProstEncoder(FeatureLayout(tiling, 2))
        self.assertEqual(extract_bprost(first, second, None, tiling).features,
                         encoder.encode(second, encoder.encode(first)).features)

    def test_dimension_checks(self):
        encoder = BProstEncoder(FeatureLayout(TilingConfig(2, 2, 1, 1), 3))
        with self.assertRaises(DimensionMismatchError):
            encoder.basic(screen([[0, 1, 2]]))
        with self.assertRaises(DimensionMismatchError):
            BProstEncoder(FeatureLayout(TilingConfig(2, 2, 1, 1), 3), BackgroundMap(np.zeros((1, 3))))


def tile_scan(pixels, tiling, mask=None):
    """(col, row, colour) for every colour shown by an unmasked pixel of each tile"""
    found = set()
    for y, x in np.ndindex(pixels.shape):
        if mask is None or not mask[y, x]:
            found.add((x // tiling.tile_w, y // tiling.tile_h, int(pixels[y, x])))
    return found


class TestExtractors(unittest.TestCase):

    def setUp(self):
        self.tiling = TilingConfig(3, 2, 2, 2)
        self.layout = FeatureLayout(self.tiling, 4)
        self.rng = np.random.default_rng(11)

    def random_screen(self):
        return Screen(self.rng.integers(0, 4, size=(4, 6)).astype(np.uint8), 4)

    def test_basic_matches_tile_scan(self):
        background = BackgroundMap(self.rng.integers(0, 4, size=(4, 6)))
        for trial in range(10):
            cur = self.random_screen()
            for bg in (None, background):
                with self.subTest(trial=trial, masked=bg is not None):
                    mask = bg.masked(cur) if bg is not None else None
                    expected = {self.layout.encode_basic(*f) for f in tile_scan(cur.pixels, self.tiling, mask)}
                    self.assertEqual(set(extract_basic(cur, bg, self.tiling).members.tolist()), expected)

    def test_bpros_matches_pairwise_enumeration(self):
        for trial in range(10):
            with self.subTest(trial=trial):
                basic = extract_basic(self.random_screen(), None, self.tiling)
                found = [self.layout.decode_basic(int(f)) for f in basic.members]
                expected = {
                    self.layout.encode_bpros(row2 - row, col2 - col, colour, colour2)
                    for col, row, colour in found for col2, row2, colour2 in found
                }
                self.assertEqual(set(extract_bpros(basic, self.tiling, 4).members.tolist()), expected)

    def test_bprot_matches_cross_product(self):
        for trial in range(10):
            with self.subTest(trial=trial):
                prev = extract_basic(self.random_screen(), None, self.tiling)
                cur = extract_basic(self.random_screen(), None, self.tiling)
                expected = {
                    self.layout.encode_bprot(row2 - row, col2 - col, colour, colour2)
                    for col, row, colour in map(self.layout.decode_basic, prev.members.tolist())
                    for col2, row2, colour2 in map(self.layout.decode_basic, cur.members.tolist())
                }
                self.assertEqual(set(extract_bprot(prev, cur, self.tiling, 4).members.tolist()), expected)

    def test_pairs_built_in_small_blocks(self):
        screens = [self.random_screen() for _ in range(6)]
        basics = [extract_basic(screen, None, self.tiling) for screen in screens]
        whole = [(extract_bpros(b, self.tiling, 4), extract_bprot(a, b, self.tiling, 4))
                 for a, b in zip(basics, basics[1:])]
        for chunk in (1, 5, 13):
            with self.subTest(chunk=chunk), mock.patch('widthtools.features.bprost.PAIR_CHUNK', chunk):
                blocked = [(extract_bpros(b, self.tiling, 4), extract_bprot(a, b, self.tiling, 4))
                           for a, b in zip(basics, basics[1:])]
                self.assertEqual(blocked, whole)

    def test_single_sprite_on_background(self):
        tiling = TilingConfig(4, 4, 1, 1)
        blank = Screen.blank(4, 4, 8)
        pixels = blank.pixels.copy()
        pixels[0, 0] = 5
        sprite = Screen(pixels, 8)
        bg = BackgroundMap.from_screen(blank)
        self.assertEqual(len(extract_bprost(None, blank, bg, tiling).features), 0)
        state = extract_bprost(sprite, sprite, bg, tiling)
        layout = FeatureLayout(tiling, 8)
        self.assertEqual(state.features.members.tolist(), [
            layout.encode_basic(0, 0, 5), layout.encode_bpros(0, 0, 5, 5), layout.encode_bprot(0, 0, 5, 5),
        ])
        self.assertEqual(len(extract_bprost(None, sprite, bg, tiling).features), 2)


class TestBackground(unittest.TestCase):

    def test_masking_follows_flips(self):
        start = screen([[0, 0, 1]])
        bg = BackgroundMap.from_screen(start)
        encoder = BProstEncoder(FeatureLayout(TilingConfig(3, 1, 1, 1), 3), bg, FamilySelection.BASIC)
        self.assertEqual(len(encoder.basic(start)), 0)

        self.assertEqual(background_update(bg, screen([[2, 0, 1]])), 1)
        self.assertEqual(bg.version, 1)
        self.assertEqual(encoder.version, 1)
        self.assertEqual(background_update(bg, screen([[2, 0, 1]])), 0)
        self.assertEqual(bg.version, 1)

        # a pixel that left the background stays visible even when it shows its old colour
        self.assertEqual(list(encoder.basic(start)), [encoder.layout.encode_basic(0, 0, 0)])
        self.assertEqual(bg.background_count, 2)

    def test_calibration_restores_the_simulator(self):
        env = pixel_chain(6)
        env.reset()
        before = env.save()
        bg = calibrate_background(env, 40, rng_seed=[7, 0])
        self.assertEqual(env.save(), before)
        self.assertLess(bg.background_count, bg.stored_color.size)
        again = calibrate_background(env, 40, rng_seed=[7, 0])
        self.assertTrue(np.array_equal(bg.is_background, again.is_background))


class TestScreenFiles(unittest.TestCase):

    def test_write_and_read(self):
        screens = [screen([[0, 1], [2, 0]]), Screen.blank(3, 1, 5, colour=4)]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'pair.screens'
            write_screens(path, screens)
            self.assertEqual(read_screens(path), screens)

    def test_malformed_input(self):
        good = encode_screens([screen([[0, 1], [2, 0]])])
        cases = {
            'bad magic': b'XXXX' + good[4:],
            'truncated pixels': good[:-1],
            'truncated header': good + b'WT',
            'colour outside palette': good[:-1] + b'\x07',
        }
        for name, data in cases.items():
            with self.subTest(name):
                with self.assertRaises(ScreenFormatError):
                    decode_screens(data)

    def test_missing_and_empty_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(FileNotFoundError):
                read_screens(Path(tmp) / 'missing.screens')
            empty = Path(tmp) / 'empty.screens'
            empty.write_bytes(b'')
            with self.assertRaises(ScreenFormatError):
                read_screens(empty)


if __name__ == '__main__':
    unittest.main()
