import json
import tempfile
import time
import unittest
from pathlib import Path

from widthtools.env.caching import CachingSimulator
from widthtools.env.toy import pixel_chain
from widthtools.performance.budget import Budget
from widthtools.performance.metric_types import Metric
from widthtools.performance.monitor import PerformanceMonitor
from widthtools.performance.timer import Timer, TimerError
from widthtools.planners.tree import SearchStats
from widthtools.utilities.exceptions import BudgetExhaustedError, ConfigurationError


@PerformanceMonitor.measure('fake_plan', Metric.DURATION, Metric.SIMULATOR_CALLS, Metric.TREE_DEPTH)
def fake_plan(calls: int) -> SearchStats:
    return SearchStats(simulator_calls=calls, max_depth=calls // 2)


class TestBudget(unittest.TestCase):

    def test_validation(self):
        for kwargs in ({}, {'seconds': 1.0, 'calls': 10}, {'seconds': 0}, {'calls': -3}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ConfigurationError):
                    Budget(**kwargs)

    def test_call_budget_is_exact(self):
        csim = CachingSimulator(pixel_chain(10), 1)
        budget = Budget(calls=3)
        self.assertFalse(budget.exhausted())
        budget.start(csim)
        csim.cached_apply([1, 1, 1])
        self.assertTrue(budget.exhausted())
        with self.assertRaises(BudgetExhaustedError):
            csim.cached_apply([1, 1, 1, 1])
        # cached paths stay free
        csim.cached_apply([1, 1])
        budget.stop()
        csim.cached_apply([1, 1, 1, 1])
        self.assertEqual(csim.decision_calls, 4)

    def test_time_budget(self):
        csim = CachingSimulator(pixel_chain(2), 1)
        budget = Budget(seconds=0.01)
        self.assertEqual(budget.elapsed(), 0.0)
        budget.start(csim)
        time.sleep(0.02)
        self.assertTrue(budget.exhausted())
        self.assertGreater(budget.elapsed(), 0.0)

    def test_elapsed_frozen_at_stop(self):
        csim = CachingSimulator(pixel_chain(2), 1)
        budget = Budget(calls=5)
        budget.start(csim)
        time.sleep(0.005)
        budget.stop()
        planned = budget.elapsed()
        self.assertGreater(planned, 0.0)
        # value backup and action selection happen after stop
        time.sleep(0.02)
        self.assertEqual(budget.elapsed(), planned)
        budget.start(csim)
        self.assertLess(budget.elapsed(), planned + 0.02)


class TestTimer(unittest.TestCase):

    def test_usage_errors(self):
        timer = Timer()
        self.assertFalse(timer.running)
        with self.assertRaises(TimerError):
            timer.elapsed()
        timer.start()
        with self.assertRaises(TimerError):
            timer.start()
        self.assertGreaterEqual(timer.elapsed(_format="ms"), timer.elapsed() * 1000 - 1)


class TestPerformanceMonitor(unittest.TestCase):

    def tearDown(self):
        if PerformanceMonitor._instance is not None:
            PerformanceMonitor._instance.stop()

    def test_inactive_until_started(self):
        monitor = PerformanceMonitor()
        fake_plan(4)
        self.assertEqual(monitor.summary(), {})

    def test_records_result_attributes(self):
        with tempfile.TemporaryDirectory() as tmp:
            monitor = PerformanceMonitor(output_dir=Path(tmp), save_log=True)
            self.assertIs(PerformanceMonitor(), monitor)
            monitor.start()
            fake_plan(4)
            fake_plan(8)
            stats = monitor.summary()['fake_plan']
            self.assertEqual(stats['simulator_calls']['count'], 2)
            self.assertEqual(stats['simulator_calls']['total'], 12)
            self.assertEqual(stats['max_depth']['max'], 4)
            self.assertIn('duration', stats)
            monitor.stop()
            entries = [json.loads(line) for log in Path(tmp).glob('*.jsonl') for line in log.read_text().splitlines()]
            self.assertEqual({entry['metric_type'] for entry in entries}, {'duration', 'simulator_calls', 'max_depth'})
        self.assertIsNot(PerformanceMonitor(), monitor)


if __name__ == '__main__':
    unittest.main()
