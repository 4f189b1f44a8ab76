from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Union
from loguru import logger
import toml
import widthtools.configuration.constants as global_constants
from widthtools.utilities.exceptions import ConfigurationError


class PlannerKind(Enum):
    IW = 'iw'
    IWG = 'iwg'
    IWS = 'iws'
    ROLLOUT_IW = 'rollout-iw'
    RA_ROLLOUT_IW = 'ra-rollout-iw'
    RAS_ROLLOUT_IW = 'ras-rollout-iw'

    @classmethod
    def from_name(cls, name: str) -> 'PlannerKind':
        try:
            return cls(name.lower())
        except ValueError:
            raise ConfigurationError(f"unknown planner {name!r}; expected one of {[k.value for k in cls]}")

    @property
    def risk_averse(self) -> bool:
        return self in (PlannerKind.RA_ROLLOUT_IW, PlannerKind.RAS_ROLLOUT_IW)

    @property
    def rollout(self) -> bool:
        return self in (PlannerKind.ROLLOUT_IW, PlannerKind.RA_ROLLOUT_IW, PlannerKind.RAS_ROLLOUT_IW)


@dataclass
class EpisodeConfig:
    """Settings for one online episode"""
    planner: PlannerKind = PlannerKind.ROLLOUT_IW
    width: int = 1  # conjunction size k for IW(k) and Rollout IW(k)
    frameskip: int = global_constants.DEFAULT_FRAMESKIP
    budget_calls: Optional[int] = None
    budget_seconds: Optional[float] = None
    gamma: float = global_constants.DEFAULT_GAMMA
    alpha: float = global_constants.DEFAULT_ALPHA
    death_penalty: Optional[float] = None  # defaults to DEATH_PENALTY_FACTOR * alpha
    max_frames: int = global_constants.DEFAULT_MAX_FRAMES
    caching: bool = False
    seed: int = 0
    families: str = 'bprost'
    tile_width: Optional[int] = None
    tile_height: Optional[int] = None
    calibration_actions: int = global_constants.DEFAULT_CALIBRATION_ACTIONS
    extension: bool = True
    reward_breaks_extension: bool = True
    trace: bool = False

    def __post_init__(self):
        """Validate configuration and set defaults"""
        if isinstance(self.planner, str):
            self.planner = PlannerKind.from_name(self.planner)
        if self.budget_calls is None and self.budget_seconds is None:
            self.budget_calls = global_constants.DEFAULT_BUDGET_CALLS
        if self.budget_calls is not None and self.budget_seconds is not None:
            raise ConfigurationError("choose either budget_calls or budget_seconds, not both")
        if self.budget_calls is not None and self.budget_calls <= 0:
            raise ConfigurationError(f"budget_calls must be positive, got {self.budget_calls}")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise ConfigurationError(f"budget_seconds must be positive, got {self.budget_seconds}")
        if self.frameskip < 1:
            raise ConfigurationError(f"frameskip must be at least 1, got {self.frameskip}")
        if not 0 < self.gamma < 1:
            raise ConfigurationError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.width < 1:
            raise ConfigurationError(f"width must be at least 1, got {self.width}")
        if self.max_frames < 0:
            raise ConfigurationError(f"max_frames must be non-negative, got {self.max_frames}")
        if self.calibration_actions < 0:
            raise ConfigurationError(f"calibration_actions must be non-negative, got {self.calibration_actions}")
        if self.families not in ('basic', 'bpros', 'bprost'):
            raise ConfigurationError(f"families must be basic, bpros or bprost, got {self.families!r}")
        if (self.tile_width is None) != (self.tile_height is None):
            raise ConfigurationError("tile_width and tile_height must be given together")
        if self.death_penalty is None:
            self.death_penalty = global_constants.DEATH_PENALTY_FACTOR * self.alpha

    @property
    def budget_label(self) -> str:
        return f"{self.budget_calls}c" if self.budget_calls is not None else f"{self.budget_seconds}s"

    def to_record(self) -> dict:
        return {
            'planner': self.planner.value,
            'width': self.width,
            'budget': self.budget_label,
            'frameskip': self.frameskip,
            'gamma': self.gamma,
            'alpha': self.alpha,
            'caching': self.caching,
            'seed': self.seed,
        }


@dataclass
class RunConfig:
    """Episode settings plus the environment, batch size and output location of a CLI run"""
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    env: str = 'pixel-chain'
    env_params: dict[str, Any] = field(default_factory=dict)
    runs: int = global_constants.DEFAULT_RUNS
    out: Optional[Path] = None
    trace: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigurationError(f"runs must be at least 1, got {self.runs}")
        if self.out is not None:
            self.out = Path(self.out)


@dataclass
class SweepConfig:
    """Budgets x planners x environments matrix; every cell is an independent run"""
    base: RunConfig = field(default_factory=RunConfig)
    budgets: list[Union[int, float]] = field(default_factory=list)
    planners: list[PlannerKind] = field(default_factory=list)
    envs: list[tuple[str, dict[str, Any]]] = field(default_factory=list)
    seconds: bool = False  # budgets are seconds instead of calls

    def __post_init__(self):
        self.planners = [PlannerKind.from_name(p) if isinstance(p, str) else p for p in self.planners]
        if not self.envs:
            self.envs = [(self.base.env, dict(self.base.env_params))]

    def cells(self) -> list[RunConfig]:
        cells = []
        for env, params in self.envs:
            for planner in self.planners:
                for budget in self.budgets:
                    budget_fields = {'budget_seconds': float(budget), 'budget_calls': None} if self.seconds \
                        else {'budget_calls': int(budget), 'budget_seconds': None}
                    episode = replace(self.base.episode, planner=planner, **budget_fields)
                    cells.append(replace(self.base, episode=episode, env=env, env_params=dict(params)))
        return cells


_EPISODE_KEYS = {f.name for f in fields(EpisodeConfig)}
_RUN_KEYS = {'env', 'env_params', 'runs', 'out', 'trace'}


def run_config_from_mapping(mapping: Mapping[str, Any]) -> RunConfig:
    """Build a RunConfig from flat keys mirroring the CLI flags"""
    unknown = set(mapping) - _EPISODE_KEYS - _RUN_KEYS - {'budgets', 'planners', 'envs', 'seconds'}
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    episode = EpisodeConfig(**{k: v for k, v in mapping.items() if k in _EPISODE_KEYS})
    run = {k: v for k, v in mapping.items() if k in _RUN_KEYS}
    if 'trace' in run:
        episode.trace = bool(run['trace'])
    return RunConfig(episode=episode, **run)


def _load_toml(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(
            f"Configuration file not found at {path}. "
            f"Pass a TOML file whose keys mirror the command-line flags."
        )
    try:
        return toml.load(path)
    except toml.TomlDecodeError as e:
        raise ConfigurationError(f"{path}: {e}") from e


def load_run_config(path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Load a run configuration file; overrides (from flags) win over file values"""
    mapping = _load_toml(path)
    mapping.update(overrides or {})
    logger.debug(f"load_run_config: {path} with {len(overrides or {})} overrides")
    return run_config_from_mapping(mapping)


def sweep_config_from_mapping(mapping: Mapping[str, Any]) -> SweepConfig:
    mapping = dict(mapping)
    budgets = list(mapping.pop('budgets', []))
    planners = list(mapping.pop('planners', []))
    envs = [
        (entry, {}) if isinstance(entry, str) else (entry['name'], {k: v for k, v in entry.items() if k != 'name'})
        for entry in mapping.pop('envs', [])
    ]
    seconds = bool(mapping.pop('seconds', False))
    return SweepConfig(run_config_from_mapping(mapping), budgets, planners, envs, seconds)


def load_sweep_config(path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None) -> SweepConfig:
    mapping = _load_toml(path)
    mapping.update(overrides or {})
    return sweep_config_from_mapping(mapping)
