from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Union
import json
import numpy as np
from widthtools.configuration.constants import RESULT_SCHEMA_VERSION, ResultRecordType


class TerminationReason(Enum):
    GAME_OVER = 'game_over'
    FRAME_CAP = 'frame_cap'
    ERROR = 'error'


@dataclass
class DecisionRecord:
    """What happened at one decision point"""
    index: int
    selected: int
    raw_reward: float
    death: bool
    frames: int
    lookahead_nodes: int
    rollouts: int
    simulator_calls: int  # inner calls spent planning this decision
    elapsed: float
    tree_depth_max: int

    def to_record(self) -> dict:
        return {'type': ResultRecordType.DECISION.value, 'schema': RESULT_SCHEMA_VERSION, **asdict(self)}


@dataclass
class EpisodeResult:
    total_raw_score: float = 0.0
    frames: int = 0
    decisions: list[DecisionRecord] = field(default_factory=list)
    terminated_by: TerminationReason = TerminationReason.FRAME_CAP
    seed: int = 0
    error: Optional[str] = None

    @property
    def simulator_calls(self) -> int:
        return sum(d.simulator_calls for d in self.decisions)

    @property
    def deaths(self) -> int:
        return sum(1 for d in self.decisions if d.death)

    def summary_record(self) -> dict:
        record = {
            'type': ResultRecordType.SUMMARY.value,
            'schema': RESULT_SCHEMA_VERSION,
            'score': self.total_raw_score,
            'frames': self.frames,
            'decisions': len(self.decisions),
            'calls': self.simulator_calls,
            'terminated_by': self.terminated_by.value,
            'seed': self.seed,
        }
        if self.error is not None:
            record['error'] = self.error
        return record

    def to_records(self) -> list[dict]:
        """One record per decision followed by the summary record"""
        return [decision.to_record() for decision in self.decisions] + [self.summary_record()]


@dataclass
class BatchResult:
    runs: list[EpisodeResult] = field(default_factory=list)

    @property
    def scores(self) -> list[float]:
        return [run.total_raw_score for run in self.runs]

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.scores)) if self.runs else 0.0

    def to_rows(self, context: dict) -> list[dict]:
        """Result-file rows: one per run plus the mean row; context holds env and planner columns"""
        rows = []
        for run in self.runs:
            rows.append({
                'type': ResultRecordType.RUN.value,
                'schema': RESULT_SCHEMA_VERSION,
                **context,
                'seed': run.seed,
                'score': run.total_raw_score,
                'decisions': len(run.decisions),
                'calls': run.simulator_calls,
                'frames': run.frames,
                'terminated_by': run.terminated_by.value,
            })
        rows.append({
            'type': ResultRecordType.MEAN.value,
            'schema': RESULT_SCHEMA_VERSION,
            **context,
            'runs': len(self.runs),
            'score': self.mean_score,
            'decisions': float(np.mean([len(r.decisions) for r in self.runs])) if self.runs else 0.0,
            'calls': float(np.mean([r.simulator_calls for r in self.runs])) if self.runs else 0.0,
        })
        return rows


def write_jsonl(path: Union[str, Path], records: Iterable[dict], append: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'a' if append else 'w') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + '\n')


def read_jsonl(path: Union[str, Path]) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
