from enum import Enum

# PLANNING DEFAULTS
DEFAULT_FRAMESKIP = 15
DEFAULT_GAMMA = 0.99
DEFAULT_ALPHA = 50_000.0
DEATH_PENALTY_FACTOR = -10  # death penalty is DEATH_PENALTY_FACTOR * alpha
DEFAULT_CALIBRATION_ACTIONS = 100
DEFAULT_RUNS = 5
DEFAULT_BUDGET_SECONDS = 0.5
DEFAULT_BUDGET_CALLS = 2_000
DEFAULT_MAX_FRAMES = 18_000

# SCREEN CONSTANTS
ATARI_SCREEN_WIDTH = 160
ATARI_SCREEN_HEIGHT = 210
ATARI_PALETTE_SIZE = 128
ATARI_TILE_COLS = 16
ATARI_TILE_ROWS = 14
ATARI_TILE_WIDTH = 10
ATARI_TILE_HEIGHT = 15

# Feature spaces above this size use sparse tables instead of dense arrays
DENSE_TABLE_LIMIT = 1 << 26

# Pairwise features are built this many pairs at a time
PAIR_CHUNK = 1 << 20

# Largest depth a table can hold; INFINITE_DEPTH is reserved as the sentinel
INFINITE_DEPTH = (1 << 32) - 1

# FILE FORMATS
SCREEN_FILE_MAGIC = b"WTSC"
SCREEN_FORMAT_VERSION = 1
RESULT_SCHEMA_VERSION = 1


class ResultRecordType(Enum):
    DECISION = 'decision'
    SUMMARY = 'summary'
    RUN = 'run'
    MEAN = 'mean'
