from pathlib import Path
from typing import Optional, Dict
from functools import wraps
from datetime import datetime
import json
from loguru import logger
from .timer import Timer
from .metric_types import Metric


class AggregatedMeasurement:
    """Running statistics of one metric of one process"""
    def __init__(self, metric: Metric):
        self.metric = metric
        self.count = 0
        self.total = 0.0
        self.min_value = float('inf')
        self.max_value = float('-inf')
        self.last_window_start = datetime.now()

    def add(self, value: float) -> None:
        self.count += 1
        self.total += value
        self.min_value = min(self.min_value, value)
        self.max_value = max(self.max_value, value)

    def should_report(self, window_seconds: Optional[int]) -> tuple[bool, Optional[dict]]:
        """Check if it's time to report aggregated metrics and return stats if it is.

        Statistics are captured and reset in the same step, so no measurement falls
        between two windows.
        """
        if window_seconds is None:
            return False, None
        now = datetime.now()
        if (now - self.last_window_start).total_seconds() >= window_seconds:
            self.last_window_start = now
            stats = self.get_aggregate_stats()
            self.count = 0
            self.total = 0.0
            self.min_value = float('inf')
            self.max_value = float('-inf')
            return True, stats
        return False, None

    def get_aggregate_stats(self) -> dict:
        if self.count == 0:
            return {'avg': 0, 'count': 0, 'min': 0, 'max': 0, 'total': 0}
        return {
            'avg': self.total / self.count,
            'count': self.count,
            'min': self.min_value,
            'max': self.max_value,
            'total': self.total,
        }


class PerformanceMonitor:
    """Process-wide collector for planner measurements. Inactive until start() is called."""
    _instance = None
    _initialized = False
    _active = False

    def __new__(cls, *args, **kwargs):
        if not cls._initialized:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self, output_dir: Optional[Path] = None, time_window: Optional[int] = None, save_log: bool = False):
        if not self.__class__._initialized:
            self.output_dir = output_dir or Path.cwd() / "performance_logs"
            self.aggregated_measurements: Dict[tuple[str, Metric], AggregatedMeasurement] = {}
            self.time_window = time_window
            self.save_log = save_log
            if save_log:
                self.output_dir.mkdir(parents=True, exist_ok=True)
            self.__class__._initialized = True

    def log_measurement(self, process: str, metric: Metric, stats: dict):
        """Log a measurement and optionally append it to the day's JSONL file"""
        timestamp = datetime.now().isoformat()
        if self.save_log:
            log_entry = {
                "timestamp": timestamp,
                "process": process,
                "metric_type": metric.type_name,
                "statistics": stats,
                "unit": metric.unit,
            }
            log_file = self.output_dir / f"performance_log_{datetime.now().strftime('%Y%m%d')}.jsonl"
            with open(log_file, "a") as f:
                f.write(json.dumps(log_entry) + "\n")

        logger.debug(
            f"PerformanceMonitor.log_measurement: {process} {metric.type_name}: "
            f"avg={stats['avg']:.2f} {metric.unit}, count={stats['count']}, "
            f"min={stats['min']:.2f} {metric.unit}, max={stats['max']:.2f} {metric.unit}"
        )

    def record(self, process: str, metric: Metric, value: float) -> None:
        key = (process, metric)
        measurement = self.aggregated_measurements.get(key)
        if measurement is None:
            measurement = AggregatedMeasurement(metric)
            self.aggregated_measurements[key] = measurement
        measurement.add(value)
        should_report, stats = measurement.should_report(self.time_window)
        if should_report:
            self.log_measurement(process, metric, stats)

    def summary(self) -> dict[str, dict[str, dict]]:
        result: dict[str, dict[str, dict]] = {}
        for (process, metric), measurement in self.aggregated_measurements.items():
            result.setdefault(process, {})[metric.type_name] = measurement.get_aggregate_stats()
        return result

    @staticmethod
    def measure(process: str, *metrics: Metric):
        """Decorator recording the given metrics for every call of the wrapped function.

        DURATION and COUNT are measured around the call; the other metrics are read from
        the attribute of the same name on the returned object.
        """
        metrics = metrics or (Metric.DURATION, Metric.COUNT)

        def decorator(func):
            @wraps(func)
            def wrapper(*args, **kwargs):
                monitor = PerformanceMonitor._instance

                if monitor is None or not PerformanceMonitor._active:
                    return func(*args, **kwargs)

                timer = Timer()
                timer.start()
                result = func(*args, **kwargs)
                elapsed = timer.elapsed(_format="ms")

                for metric in metrics:
                    if not metric.from_result:
                        monitor.record(process, metric, elapsed if metric is Metric.DURATION else 1)
                    elif hasattr(result, metric.type_name):
                        monitor.record(process, metric, float(getattr(result, metric.type_name)))
                    else:
                        logger.error(f"PerformanceMonitor.measure: {process} result has no {metric.type_name}")
                return result
            return wrapper
        return decorator

    def start(self):
        PerformanceMonitor._instance = self
        PerformanceMonitor._active = True
        message = "Performance monitoring started. "
        if self.save_log:
            message += f"Performance logs will be written to {self.output_dir}"
        else:
            message += "Performance log saving is currently disabled."
        logger.info(message)

    def stop(self):
        """Flush every aggregate and deactivate the monitor"""
        for (process, metric), measurement in self.aggregated_measurements.items():
            if measurement.count:
                self.log_measurement(process, metric, measurement.get_aggregate_stats())
        PerformanceMonitor._instance = None
        PerformanceMonitor._initialized = False
        PerformanceMonitor._active = False
        logger.info("Performance monitoring stopped")
