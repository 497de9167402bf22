"""Scoring and report generation.

Two headline numbers summarise a run at each round:

* **utility rate** — the fraction of instances fully solved by that round.
  Sessions freeze once they pass, so this is cumulative and never
  decreases from one round to the next.
* **capability-weighted score** — outcomes are grouped by the deepest
  capability tag on each requirement, averaged per tag, then per
  instance, then across the dataset.  An instance with many requirements
  probing the same ability therefore counts that ability once, instead
  of letting requirement-heavy instances dominate.

``capability_stats`` breaks the same outcomes down over the capability
tree.  Every level of a tag's path is incremented, so a parent node
aggregates everything below it.  Requirements without tags (and tags the
taxonomy does not know) are tallied under a separate ``untagged`` root so
they stay visible instead of silently vanishing.

Cross-model analytics (per-round spread, rank stability against round 1)
live here too, next to the report schema they feed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema
import numpy as np
from scipy.stats import rankdata

from . import taxonomy
from .dataset import DataInstance
from .judging import Judgment
from .orchestrator import Transcript

DEFAULT_WINDOWS: tuple[tuple[int, int], ...] = ((1, 5), (6, 10), (11, 15), (16, 20))


# ---------------------------------------------------------------------------
# Capability tree tallies
# ---------------------------------------------------------------------------


@dataclass
class CapabilityNode:
    """Pass/fail tally for one capability tree node."""

    correct: int = 0
    wrong: int = 0
    children: dict[str, "CapabilityNode"] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.correct + self.wrong

    @property
    def percentage(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def child(self, name: str) -> "CapabilityNode":
        node = self.children.get(name)
        if node is None:
            node = self.children[name] = CapabilityNode()
        return node

    def add(self, passed: bool) -> None:
        if passed:
            self.correct += 1
        else:
            self.wrong += 1

    def to_dict(self) -> dict:
        return {
            "percentage": self.percentage,
            "correct": self.correct,
            "wrong": self.wrong,
            "total": self.total,
            "children": {
                name: self.children[name].to_dict()
                for name in sorted(self.children, key=taxonomy.node_order)
            },
        }

    @staticmethod
    def from_dict(obj: Mapping) -> "CapabilityNode":
        node = CapabilityNode(correct=obj["correct"], wrong=obj["wrong"])
        for name, raw in obj.get("children", {}).items():
            node.children[name] = CapabilityNode.from_dict(raw)
        return node


UNTAGGED = "untagged"


def _tally_path(stats: dict[str, CapabilityNode], path: Sequence[str], passed: bool) -> None:
    """Count one outcome at every level of a capability path.

    Paths rooted at a known dimension hang off that dimension's node;
    anything else (unknown tags) goes under the diagnostic root with the
    full path preserved beneath it.
    """
    if path and taxonomy.is_dimension(path[0]):
        node = stats[path[0]]
        rest = path[1:]
    else:
        node = stats[UNTAGGED]
        rest = path
    node.add(passed)
    for name in rest:
        node = node.child(name)
        node.add(passed)


# ---------------------------------------------------------------------------
# Round reports
# ---------------------------------------------------------------------------


@dataclass
class RoundReport:
    round: int  # 1-based cumulative round the report describes
    meeseeks_score: float
    utility_score: float
    capability_stats: dict[str, CapabilityNode]
    total_items: int

    def to_dict(self) -> dict:
        roots = list(taxonomy.DIMENSIONS) + [UNTAGGED]
        # Preserve any unexpected roots (defensive; normally none).
        roots += [k for k in self.capability_stats if k not in roots]
        return {
            "round": self.round,
            "meeseeks_score": self.meeseeks_score,
            "utility_score": self.utility_score,
            "capability_stats": {
                name: self.capability_stats[name].to_dict()
                for name in roots
                if name in self.capability_stats
            },
            "total_items": self.total_items,
        }


def _outcome(judgments: Mapping[int, Judgment] | None, point_id: int) -> bool:
    """A requirement with no judgment on record counts as failed."""
    if judgments is None:
        return False
    j = judgments.get(point_id)
    return j is not None and j.passed


def build_round_report(
    instances: Sequence[DataInstance],
    transcripts: Mapping[str, Transcript],
    round_index: int,
    *,
    micro: bool = False,
) -> RoundReport:
    """Score one endpoint's transcripts as of cumulative round ``round_index``.

    Judgments are taken from the latest evaluated turn at or before the
    round; instances whose session produced no turn by then (errors,
    immediate context overflow, missing transcripts) count as failing
    every requirement, which keeps denominators identical across rounds.

    ``micro=True`` pools every (instance, tag) outcome into one average
    instead of averaging per instance first.
    """
    if round_index < 1:
        raise ValueError("round_index must be at least 1")
    stats: dict[str, CapabilityNode] = {name: CapabilityNode() for name in taxonomy.DIMENSIONS}
    stats[UNTAGGED] = CapabilityNode()

    instance_scores: list[float] = []
    pooled: list[float] = []
    passed_count = 0

    for instance in instances:
        transcript = transcripts.get(instance.id)
        judgments = transcript.judgments_at(round_index) if transcript else None
        if transcript and transcript.passed_turn is not None and transcript.passed_turn <= round_index:
            passed_count += 1

        tag_groups: dict[str, list[bool]] = {}
        for sq in instance.sub_questions:
            passed = _outcome(judgments, sq.point_id)
            if sq.capability_tags:
                for path in sq.capability_tags:
                    _tally_path(stats, path, passed)
                    tag_groups.setdefault(path[-1], []).append(passed)
            else:
                _tally_path(stats, (), passed)

        if tag_groups:
            tag_means = [sum(v) / len(v) for v in tag_groups.values()]
            instance_scores.append(sum(tag_means) / len(tag_means))
            pooled.extend(tag_means)
        else:
            # Nothing tagged: the instance still participates, via its
            # all-requirements-passed bit.
            bit = 1.0 if all(_outcome(judgments, sq.point_id) for sq in instance.sub_questions) else 0.0
            instance_scores.append(bit)
            pooled.append(bit)

    if micro:
        score = sum(pooled) / len(pooled) if pooled else 0.0
    else:
        score = sum(instance_scores) / len(instance_scores) if instance_scores else 0.0
    utility = passed_count / len(instances) if instances else 0.0
    return RoundReport(
        round=round_index,
        meeseeks_score=score,
        utility_score=utility,
        capability_stats=stats,
        total_items=len(instances),
    )


def build_reports(
    instances: Sequence[DataInstance],
    transcripts: Mapping[str, Transcript],
    max_round: int,
    *,
    micro: bool = False,
) -> list[RoundReport]:
    return [
        build_round_report(instances, transcripts, r, micro=micro)
        for r in range(1, max_round + 1)
    ]


def utility_rate_series(
    transcripts: Mapping[str, Transcript] | Iterable[Transcript],
    max_round: int,
    *,
    total: int | None = None,
) -> list[float]:
    """Cumulative solved fraction per round, rounds 1..max_round.

    ``total`` overrides the denominator when the transcript set does not
    cover the whole dataset (crashed runs); by default every transcript
    counts.
    """
    ts = list(transcripts.values() if isinstance(transcripts, Mapping) else transcripts)
    n = total if total is not None else len(ts)
    if n <= 0:
        return [0.0] * max_round
    pass_turns = [t.passed_turn for t in ts if t.passed_turn is not None]
    return [sum(1 for p in pass_turns if p <= r) / n for r in range(1, max_round + 1)]


# ---------------------------------------------------------------------------
# Window averages and cross-model analytics
# ---------------------------------------------------------------------------


def window_average_series(
    series: Sequence[float],
    windows: Sequence[tuple[int, int]] = DEFAULT_WINDOWS,
) -> list[float]:
    """Average a per-round series over inclusive 1-based round windows."""
    out = []
    for lo, hi in windows:
        if not (1 <= lo <= hi <= len(series)):
            raise ValueError(
                f"window {lo}-{hi} does not fit a {len(series)}-round series"
            )
        chunk = series[lo - 1 : hi]
        out.append(sum(chunk) / len(chunk))
    return out


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    # Constancy must be tested on the raw values: centering a constant
    # series whose mean is not exactly representable leaves residual noise
    # that would sneak past a denom == 0 check.
    if (x == x[0]).all() or (y == y[0]).all():
        return float("nan")
    sx = x - x.mean()
    sy = y - y.mean()
    # Rescale before squaring so values far below 1.0 cannot underflow
    # the sum of squares into a bogus zero denominator.
    sx = sx / np.abs(sx).max()
    sy = sy / np.abs(sy).max()
    denom = math.sqrt(float((sx * sx).sum()) * float((sy * sy).sum()))
    if denom == 0.0:
        return float("nan")
    return float((sx * sy).sum()) / denom


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson r; nan when either side has zero variance."""
    ax, ay = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if ax.shape != ay.shape or ax.ndim != 1 or ax.size < 2:
        raise ValueError("need two equal-length 1-d samples of size >= 2")
    return _pearson(ax, ay)


def spearman_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rho: Pearson over average ranks (ties share their mean rank)."""
    ax, ay = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if ax.shape != ay.shape or ax.ndim != 1 or ax.size < 2:
        raise ValueError("need two equal-length 1-d samples of size >= 2")
    return _pearson(rankdata(ax), rankdata(ay))


@dataclass(frozen=True)
class CrossModelAnalysis:
    """How a population of models spreads and re-ranks over rounds."""

    models: tuple[str, ...]
    rounds: int
    stdev_by_round: tuple[float, ...]  # population spread across models, per round
    pearson_vs_first_round: tuple[float, ...]  # value agreement with round 1
    spearman_vs_first_round: tuple[float, ...]  # rank agreement with round 1
    windows: tuple[tuple[int, int], ...]
    window_averages: dict[str, tuple[float, ...]]


def cross_model_analysis(
    utilities: Mapping[str, Sequence[float]],
    windows: Sequence[tuple[int, int]] | None = None,
) -> CrossModelAnalysis:
    """Compare per-round utility series across models.

    All series must have equal length.  ``windows`` defaults to the
    standard 5-round windows, clipped to however many rounds the series
    actually cover.
    """
    if len(utilities) < 2:
        raise ValueError("cross-model analysis needs at least two models")
    models = tuple(utilities)
    lengths = {len(utilities[m]) for m in models}
    if len(lengths) != 1:
        raise ValueError(f"utility series lengths differ: {sorted(lengths)}")
    rounds = lengths.pop()
    if rounds < 1:
        raise ValueError("utility series are empty")

    matrix = np.array([utilities[m] for m in models], dtype=float)  # models x rounds
    # Identical columns must spread exactly 0.0; np.std leaves ~1e-16 of
    # centering noise when the shared value is not representable.
    stdev = tuple(
        0.0 if (col == col[0]).all() else float(col.std(ddof=0))
        for col in matrix.T
    )
    first = matrix[:, 0]
    pear = tuple(_pearson(first, matrix[:, r]) for r in range(rounds))
    first_ranks = rankdata(first)
    spear = tuple(_pearson(first_ranks, rankdata(matrix[:, r])) for r in range(rounds))

    if windows is None:
        windows = tuple((lo, hi) for lo, hi in DEFAULT_WINDOWS if hi <= rounds)
    win = tuple((int(lo), int(hi)) for lo, hi in windows)
    averages = {
        m: tuple(window_average_series(utilities[m], win)) for m in models
    }
    return CrossModelAnalysis(
        models=models,
        rounds=rounds,
        stdev_by_round=stdev,
        pearson_vs_first_round=pear,
        spearman_vs_first_round=spear,
        windows=win,
        window_averages=averages,
    )


# ---------------------------------------------------------------------------
# Report serialisation
# ---------------------------------------------------------------------------

REPORT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Round report",
    "$defs": {
        "capability_node": {
            "type": "object",
            "properties": {
                "percentage": {"type": "number", "minimum": 0.0, "maximum": 1.0},
                "correct": {"type": "integer", "minimum": 0},
                "wrong": {"type": "integer", "minimum": 0},
                "total": {"type": "integer", "minimum": 0},
                "children": {
                    "type": "object",
                    "additionalProperties": {"$ref": "#/$defs/capability_node"},
                },
            },
            "required": ["percentage", "correct", "wrong", "total", "children"],
            "additionalProperties": False,
        }
    },
    "type": "object",
    "properties": {
        "round": {"type": "integer", "minimum": 1},
        "meeseeks_score": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "utility_score": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "capability_stats": {
            "type": "object",
            "additionalProperties": {"$ref": "#/$defs/capability_node"},
        },
        "total_items": {"type": "integer", "minimum": 0},
    },
    "required": [
        "round",
        "meeseeks_score",
        "utility_score",
        "capability_stats",
        "total_items",
    ],
    "additionalProperties": False,
}


def validate_report(obj: Mapping) -> None:
    """Raise ``jsonschema.ValidationError`` if ``obj`` is not a round report."""
    jsonschema.validate(obj, REPORT_SCHEMA)


def render_report_json(report: RoundReport) -> str:
    return json.dumps(report.to_dict(), indent=4, ensure_ascii=False) + "\n"


def write_report(report: RoundReport, path: str | Path) -> None:
    Path(path).write_text(render_report_json(report), encoding="utf-8")


def parse_report(obj: Mapping | str) -> RoundReport:
    """Rebuild a :class:`RoundReport` from its JSON form (validating first)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    validate_report(obj)
    return RoundReport(
        round=obj["round"],
        meeseeks_score=obj["meeseeks_score"],
        utility_score=obj["utility_score"],
        capability_stats={
            name: CapabilityNode.from_dict(raw)
            for name, raw in obj["capability_stats"].items()
        },
        total_items=obj["total_items"],
    )


def load_utility_reference() -> dict[str, Any]:
    """Bundled 20-round utility series for 17 public chat models.

    The document carries per-round values, the published 5-round window
    averages, and errata notes for two export defects that were corrected
    in the bundled copy.
    """
    text = (
        resources.files("meeseeks") / "fixtures" / "utility_reference.json"
    ).read_text(encoding="utf-8")
    return json.loads(text)
