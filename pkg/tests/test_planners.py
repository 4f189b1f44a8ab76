import io
import unittest
from itertools import permutations

from widthtools.control.episode import goal_features
from widthtools.control.extension import fill_node
from widthtools.env.toy import (
    MARKER,
    collector_grid,
    hazard_corridor,
    latched_chain,
    pixel_chain,
    static_screen,
    two_goal_corridor,
)
from widthtools.features.bprost import FamilySelection
from widthtools.features.novelty import FeatureSet
from widthtools.performance.budget import Budget
from widthtools.planners.iw import WidthPlanner, iw_search, iwg_search, iws_search, logscore, retain_subtree
from widthtools.planners.oracle import plain_bfs_oracle
from widthtools.planners.tree import count_nodes, dump_tree, iter_nodes, max_depth
from widthtools.utilities.exceptions import ConfigurationError
from tests.fixtures import make_context, make_root, min_depths


def shape_of(root):
    return {(node.path, node.pruned) for node in iter_nodes(root)}


def holds_all(root, goals):
    return any(len(node.features.intersection(goals)) == len(goals) for node in iter_nodes(root))


class TestLogscore(unittest.TestCase):

    def test_values(self):
        for reward, expected in ((0, 0), (-3.0, 0), (0.5, -1), (0.3, -2), (1, 1), (3, 2), (4, 3)):
            with self.subTest(reward=reward):
                self.assertEqual(logscore(reward), expected)


class TestIW(unittest.TestCase):

    def test_iw1_prunes_the_second_goal(self):
        ctx = make_context(two_goal_corridor())
        goals = goal_features(ctx.csim.sim, ctx.encoder.layout, ctx.encoder.capacity)
        root = make_root(ctx)
        stats = iw_search(ctx, root, 1, Budget.unlimited())
        self.assertFalse(holds_all(root, goals))
        self.assertLessEqual(stats.expanded, ctx.encoder.capacity + 1)
        self.assertFalse(stats.truncated)
        self.assertEqual(stats.partition_keys, [0])

    def test_iw1_size_bounds(self):
        envs = {
            'pixel-chain': lambda: pixel_chain(6),
            'two-goal-corridor': two_goal_corridor,
            'hazard-corridor': lambda: hazard_corridor(6),
            'collector-grid': lambda: collector_grid(4, 4, items=((0, 0), (3, 3))),
            'static-screen': lambda: static_screen(3, 3),
            'latched-chain': lambda: latched_chain(5, latch=2),
        }
        for name, factory in envs.items():
            for families in (FamilySelection.BASIC, FamilySelection.BPROST):
                with self.subTest(env=name, families=families):
                    ctx = make_context(factory(), families)
                    stats = iw_search(ctx, make_root(ctx), 1, Budget.unlimited())
                    n_features = ctx.encoder.capacity
                    self.assertFalse(stats.truncated)
                    self.assertLessEqual(stats.expanded, n_features)
                    self.assertLessEqual(stats.generated, n_features * ctx.action_count)

    def test_partitioned_variants_reach_both_goals(self):
        for name in ('iwg', 'iws'):
            with self.subTest(name):
                ctx = make_context(two_goal_corridor())
                goals = goal_features(ctx.csim.sim, ctx.encoder.layout, ctx.encoder.capacity)
                root = make_root(ctx)
                if name == 'iwg':
                    stats = iwg_search(ctx, root, goals, Budget.unlimited())
                    self.assertLessEqual(stats.expanded, (len(goals) + 1) * ctx.encoder.capacity)
                else:
                    stats = iws_search(ctx, root, Budget.unlimited())
                self.assertTrue(holds_all(root, goals))
                self.assertEqual(stats.partition_keys, [0, 1, 2])

    def test_iws_without_rewards_is_iw(self):
        plain_ctx, scored_ctx = make_context(collector_grid(3, 3, items=())), make_context(collector_grid(3, 3, items=()))
        plain, scored = make_root(plain_ctx), make_root(scored_ctx)
        iw_search(plain_ctx, plain, 1, Budget.unlimited())
        iws_search(scored_ctx, scored, Budget.unlimited())
        self.assertEqual(shape_of(plain), shape_of(scored))

    def test_iwg_with_unreachable_goal_is_iw(self):
        plain_ctx, goal_ctx = make_context(pixel_chain(4)), make_context(pixel_chain(4))
        goals = FeatureSet.from_iterable([goal_ctx.encoder.layout.encode_basic(0, 0, MARKER)], goal_ctx.encoder.capacity)
        plain, goal = make_root(plain_ctx), make_root(goal_ctx)
        iw_search(plain_ctx, plain, 1, Budget.unlimited())
        iwg_search(goal_ctx, goal, goals, Budget.unlimited())
        self.assertEqual(shape_of(plain), shape_of(goal))
        with self.assertRaises(ConfigurationError):
            iwg_search(goal_ctx, goal, FeatureSet.empty(goal_ctx.encoder.capacity), Budget.unlimited())

    def test_wide_search_matches_breadth_first_enumeration(self):
        ctx, oracle_ctx = make_context(pixel_chain(3)), make_context(pixel_chain(3))
        root = make_root(ctx)
        iw_search(ctx, root, 4, Budget.unlimited())
        oracle = plain_bfs_oracle(oracle_ctx, make_root(oracle_ctx), 10)
        novel = [node for node in iter_nodes(root) if not node.pruned]
        self.assertEqual(len(novel), 4)
        self.assertEqual(oracle.states, 4)
        self.assertFalse(oracle.capped)
        self.assertEqual(min_depths(root), oracle.optimal_depth)

    def test_call_budget_truncates(self):
        ctx = make_context(collector_grid(9, 9, items=()))
        root = make_root(ctx)
        stats = iw_search(ctx, root, 1, Budget(calls=30))
        self.assertTrue(stats.truncated)
        self.assertEqual(stats.simulator_calls, 30)
        self.assertTrue(all(node.filled for node in iter_nodes(root, filled_only=False)))

    def test_bad_action_order(self):
        ctx = make_context(pixel_chain(3))
        with self.assertRaises(ConfigurationError):
            iw_search(ctx, make_root(ctx), 1, Budget.unlimited(), action_order=[0, 0])

    def test_width1_features_reached_at_optimal_depth(self):
        envs = {
            'pixel-chain': (lambda: pixel_chain(4), None),
            'two-goal-corridor': (two_goal_corridor, None),
            'hazard-corridor': (lambda: hazard_corridor(6), None),
            'latched-chain': (lambda: latched_chain(4, latch=2), None),
            'collector-grid': (lambda: collector_grid(3, 3, items=((0, 0),)), [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]]),
        }
        for name, (factory, orders) in envs.items():
            oracle_ctx = make_context(factory(), FamilySelection.BPROST)
            oracle = plain_bfs_oracle(oracle_ctx, make_root(oracle_ctx), 24)
            self.assertFalse(oracle.capped)
            self.assertGreater(len(oracle.width1), 0)
            for order in orders or permutations(range(oracle_ctx.action_count)):
                with self.subTest(env=name, order=list(order)):
                    ctx = make_context(factory(), FamilySelection.BPROST)
                    root = make_root(ctx)
                    iw_search(ctx, root, 1, Budget.unlimited(), action_order=order)
                    reached = min_depths(root)
                    for feature in oracle.width1:
                        self.assertEqual(reached.get(feature), oracle.depth_of(feature), ctx.encoder.layout.describe(feature))


class TestTreeReuse(unittest.TestCase):

    def test_retain_subtree(self):
        ctx = make_context(pixel_chain(5))
        root = make_root(ctx)
        iw_search(ctx, root, 1, Budget.unlimited())
        executed = root.child(1)
        deepest = max_depth(root)
        ctx.csim.advance_root(executed.step, keep=True)
        kept = retain_subtree(executed, make_root(ctx))
        children = [child for child in kept.children if child is not None]
        self.assertEqual({child.depth for child in children}, {1})
        retained = [node for node in iter_nodes(kept, filled_only=False) if node is not kept]
        self.assertTrue(all(node.retained and not node.filled for node in retained))
        self.assertEqual(max(node.depth for node in retained), deepest - 1)

        calls = ctx.csim.inner_calls
        for node in retained:
            self.assertFalse(fill_node(ctx, node))
        self.assertEqual(ctx.csim.inner_calls, calls)

        WidthPlanner(caching=True).plan(ctx, kept, Budget.unlimited(), None)
        self.assertFalse(any(node.pruned for node in retained))


class TestTreeDump(unittest.TestCase):

    def test_dump(self):
        ctx = make_context(pixel_chain(2))
        root = make_root(ctx)
        iw_search(ctx, root, 1, Budget.unlimited())
        out = io.StringIO()
        lines = dump_tree(root, out)
        self.assertEqual(lines, count_nodes(root))
        rows = out.getvalue().splitlines()
        self.assertEqual(rows[0], "-\t0\t0\t0")
        self.assertIn("1,1\t2\t1\t0", rows)


if __name__ == '__main__':
    unittest.main()
