# Standard imports
import traceback
from dataclasses import replace
from typing import Callable, Optional, TextIO, Union

# Third party imports
import numpy as np
from loguru import logger

# Local imports
from widthtools.configuration.configuration import EpisodeConfig, PlannerKind
from widthtools.configuration.constants import ATARI_SCREEN_HEIGHT, ATARI_SCREEN_WIDTH
from widthtools.control.extension import SearchContext, fill_with_extension
from widthtools.control.shaping import make_shaper
from widthtools.control.values import backup_values, select_action
from widthtools.env.caching import CachingSimulator
from widthtools.features.bprost import (
    BackgroundMap,
    BProstEncoder,
    FamilySelection,
    FeatureLayout,
    TilingConfig,
    background_update,
    calibrate_background,
)
from widthtools.features.novelty import FeatureSet
from widthtools.features.screen import Screen
from widthtools.models.results import BatchResult, DecisionRecord, EpisodeResult, TerminationReason
from widthtools.performance.budget import Budget
from widthtools.performance.metric_types import Metric
from widthtools.performance.monitor import PerformanceMonitor
from widthtools.planners.iw import WidthPlanner, goal_count_key, logscore_key, single_key
from widthtools.planners.rollout import RolloutPlanner
from widthtools.planners.tree import SearchStats, TreeNode, count_nodes, dump_tree
from widthtools.protocols.planner import Planner
from widthtools.protocols.simulator import Simulator
from widthtools.utilities.exceptions import ConfigurationError

# independent random streams derived from the episode seed
CALIBRATION_STREAM = 0
DECISION_STREAM = 1

EnvFactory = Callable[[], Simulator]


def tiling_for(screen: Screen, cfg: EpisodeConfig) -> TilingConfig:
    """Configured tiling, the Atari tiling for Atari-sized screens, one tile per pixel otherwise"""
    width, height = screen.shape
    if cfg.tile_width is not None:
        if width % cfg.tile_width or height % cfg.tile_height:
            raise ConfigurationError(f"{cfg.tile_width}x{cfg.tile_height} tiles do not divide a {width}x{height} screen")
        return TilingConfig(width // cfg.tile_width, height // cfg.tile_height, cfg.tile_width, cfg.tile_height)
    if (width, height) == (ATARI_SCREEN_WIDTH, ATARI_SCREEN_HEIGHT):
        return TilingConfig.atari()
    return TilingConfig.per_pixel(width, height)


def goal_features(env: Simulator, layout: FeatureLayout, capacity: int) -> FeatureSet:
    """Basic features of the environment's goal pixels"""
    goal_pixels = getattr(env, 'goal_pixels', None)
    pixels = goal_pixels() if goal_pixels is not None else []
    if not pixels:
        raise ConfigurationError("the iwg planner needs an environment exposing goal pixels")
    tiling = layout.tiling
    ids = [layout.encode_basic(x // tiling.tile_w, y // tiling.tile_h, colour) for x, y, colour in pixels]
    return FeatureSet.from_iterable(ids, capacity)


def make_planner(cfg: EpisodeConfig, goals: Optional[FeatureSet] = None) -> Planner:
    match cfg.planner:
        case PlannerKind.IW:
            return WidthPlanner(single_key, cfg.width, cfg.caching)
        case PlannerKind.IWG:
            if goals is None or not len(goals):
                raise ConfigurationError("the iwg planner needs goal features")
            return WidthPlanner(goal_count_key(goals), 1, cfg.caching)
        case PlannerKind.IWS:
            return WidthPlanner(logscore_key, 1, cfg.caching)
        case PlannerKind.ROLLOUT_IW | PlannerKind.RA_ROLLOUT_IW:
            return RolloutPlanner(cfg.width, partitioned=False, caching=cfg.caching, trace=cfg.trace)
        case PlannerKind.RAS_ROLLOUT_IW:
            return RolloutPlanner(cfg.width, partitioned=True, caching=cfg.caching, trace=cfg.trace)
    raise ConfigurationError(f"unsupported planner {cfg.planner}")


def make_budget(cfg: EpisodeConfig) -> Budget:
    if cfg.budget_calls is not None:
        return Budget(calls=cfg.budget_calls)
    return Budget(seconds=cfg.budget_seconds)


@PerformanceMonitor.measure('plan_decision', Metric.DURATION, Metric.SIMULATOR_CALLS, Metric.NODES, Metric.ROLLOUTS,
                             Metric.TREE_DEPTH)
def plan_decision(planner: Planner, ctx: SearchContext, root: TreeNode, budget: Budget,
                  rng: np.random.Generator) -> SearchStats:
    return planner.plan(ctx, root, budget, rng)


def run_episode(env: Simulator, cfg: EpisodeConfig, tree_out: Optional[TextIO] = None) -> EpisodeResult:
    """Play one episode online: calibrate, then plan, select and execute until the game ends.

    The environment is reset first. With tree_out every lookahead tree is dumped there
    after planning, under a "# seed=S decision=I" header line. Any failure inside the loop ends the episode with the
    decisions made so far and terminated_by=error.
    """
    result = EpisodeResult(seed=cfg.seed)
    first_screen = env.reset()
    if cfg.max_frames == 0:
        return result

    layout = FeatureLayout(tiling_for(first_screen, cfg), first_screen.palette_size)
    background: Optional[BackgroundMap] = calibrate_background(
        env, cfg.calibration_actions, rng_seed=[cfg.seed, CALIBRATION_STREAM], frames=cfg.frameskip
    )
    encoder = BProstEncoder(layout, background, FamilySelection.from_name(cfg.families))
    goals = goal_features(env, layout, encoder.capacity) if cfg.planner is PlannerKind.IWG else None
    planner = make_planner(cfg, goals)

    csim = CachingSimulator(env, cfg.frameskip)
    ctx = SearchContext(csim, encoder, make_shaper(cfg), cfg.extension, cfg.reward_breaks_extension)
    root = TreeNode.root(encoder.encode(csim.root.screen), csim.root.screen, encoder.version)

    try:
        while result.frames < cfg.max_frames:
            index = len(result.decisions)
            rng = np.random.default_rng([cfg.seed, DECISION_STREAM, index])
            budget = make_budget(cfg)
            stats = plan_decision(planner, ctx, root, budget, rng)
            if tree_out is not None:
                tree_out.write(f"# seed={cfg.seed} decision={index}\n")
                dump_tree(root, tree_out)
            values = backup_values(root, cfg.gamma)
            action = select_action(values, rng, env.action_count)

            executed = root.child(action)
            if executed is None or not executed.filled:
                executed = None
                step = fill_with_extension(ctx, root, action).step
            else:
                step = executed.step
            outcome, screen = csim.advance_root(step, keep=cfg.caching)
            background_update(background, screen)
            new_root = TreeNode.root(encoder.encode(screen, root.state), screen, encoder.version)

            result.total_raw_score += outcome.reward
            result.frames += outcome.frames
            result.decisions.append(DecisionRecord(
                index=index,
                selected=action,
                raw_reward=outcome.reward,
                death=outcome.death,
                frames=outcome.frames,
                lookahead_nodes=count_nodes(root),
                rollouts=stats.rollouts,
                simulator_calls=stats.simulator_calls,
                elapsed=budget.elapsed(),
                tree_depth_max=stats.max_depth,
            ))
            logger.debug(
                f"decision {index}: action={action} reward={outcome.reward:g} calls={stats.simulator_calls} "
                f"nodes={stats.generated} rollouts={stats.rollouts} depth={stats.max_depth}"
            )
            if outcome.terminal:
                result.terminated_by = TerminationReason.GAME_OVER
                break
            root = planner.next_root(executed, new_root)
    except Exception as e:
        logger.error(traceback.format_exc())
        result.terminated_by = TerminationReason.ERROR
        result.error = f"{type(e).__name__}: {e}"

    logger.info(
        f"run_episode: score={result.total_raw_score:g} frames={result.frames} "
        f"decisions={len(result.decisions)} ({result.terminated_by.value})"
    )
    return result


def derive_seeds(seed: int, n_runs: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n_runs)]


def run_batch(
        env: Union[Simulator, EnvFactory],
        cfg: EpisodeConfig,
        n_runs: int = 5,
        tree_out: Optional[TextIO] = None,
) -> BatchResult:
    """Independent episodes with seeds derived from cfg.seed.

    env is either a factory building a fresh environment per run or a single instance,
    which run_episode resets before every run.
    """
    if n_runs < 1:
        raise ConfigurationError(f"n_runs must be at least 1, got {n_runs}")
    batch = BatchResult()
    for run, seed in enumerate(derive_seeds(cfg.seed, n_runs)):
        instance = env() if callable(env) else env
        episode = run_episode(instance, replace(cfg, seed=seed), tree_out)
        batch.runs.append(episode)
        logger.info(f"run_batch: run {run + 1}/{n_runs} seed={seed} score={episode.total_raw_score:g}")
    logger.info(f"run_batch: mean score {batch.mean_score:g} over {n_runs} runs")
    return batch
