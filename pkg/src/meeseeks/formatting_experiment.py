"""Head-to-head check of the extraction + rule pipeline on labeled corpora.

The synthetic corpora in :mod:`meeseeks.dataset` pair every instance with
one satisfying and one violating response, so the pipeline's verdict can
be compared against ground truth at scale.  This is how regressions in
extraction (a coder that clips elements, a regenerator that paraphrases)
show up as accuracy, not anecdotes.

No target model is involved: responses come from the corpus.  The
formatter endpoints (and the sandbox, for coding instances) do all the
work.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .dataset import CorpusItem
from .extraction import ExtractionStrategy
from .gateway import ChatGateway, Endpoint
from .orchestrator import RunConfig, evaluate_response
from .sandbox import SandboxPolicy


@dataclass(frozen=True)
class ItemOutcome:
    """Pipeline verdict for one labeled (instance, response) pair."""

    item_id: str
    label: bool  # ground truth: response satisfies all rules
    predicted: bool  # pipeline verdict: every requirement judged passing
    strategies: dict[str, str]  # part name -> extraction strategy used
    verified: bool  # every extraction passed the verbatim check
    token_cost: int

    @property
    def correct(self) -> bool:
        return self.predicted == self.label


@dataclass(frozen=True)
class ComparisonReport:
    outcomes: tuple[ItemOutcome, ...]

    @property
    def total(self) -> int:
        return len(self.outcomes)

    @property
    def correct(self) -> int:
        return sum(1 for o in self.outcomes if o.correct)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.outcomes else 0.0

    @property
    def token_cost(self) -> int:
        return sum(o.token_cost for o in self.outcomes)

    def confusion(self) -> dict[str, int]:
        """Counts keyed tp/fp/tn/fn (positive = predicted satisfying)."""
        counts = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
        for o in self.outcomes:
            if o.predicted and o.label:
                counts["tp"] += 1
            elif o.predicted and not o.label:
                counts["fp"] += 1
            elif not o.predicted and not o.label:
                counts["tn"] += 1
            else:
                counts["fn"] += 1
        return counts

    def strategy_counts(self) -> dict[str, int]:
        """How many part-extractions each strategy handled."""
        counts = {s.value: 0 for s in ExtractionStrategy}
        for o in self.outcomes:
            for strategy in o.strategies.values():
                counts[strategy] += 1
        return counts

    def mismatches(self) -> list[ItemOutcome]:
        return [o for o in self.outcomes if not o.correct]


def run_formatting_comparison(
    items: Sequence[CorpusItem],
    gateway: ChatGateway,
    *,
    coder: Endpoint,
    regenerator: Endpoint,
    evaluator: Endpoint | None = None,
    policy: SandboxPolicy | None = None,
    workers: int = 4,
    limit: int | None = None,
    max_repair_rounds: int = 2,
) -> ComparisonReport:
    """Judge every corpus item and compare verdicts against labels.

    ``limit`` truncates the corpus (handy for smoke runs over the 1002-item
    sweep).  Outcomes come back in corpus order regardless of worker
    scheduling.  The evaluator endpoint is only consulted for instances
    with model-judged requirements; the bundled corpora have none, so it
    defaults to the coder.
    """
    if limit is not None:
        items = items[:limit]
    config = RunConfig(
        evaluator=evaluator or coder,
        coder=coder,
        regenerator=regenerator,
        sandbox=policy or SandboxPolicy(),
        max_repair_rounds=max_repair_rounds,
    )

    def judge(item: CorpusItem) -> ItemOutcome:
        extractions, judgments, tokens = evaluate_response(
            item.instance, item.response, gateway, config
        )
        return ItemOutcome(
            item_id=item.instance.id,
            label=item.label,
            predicted=all(j.passed for j in judgments.values()),
            strategies={k: v.strategy.value for k, v in extractions.items()},
            verified=all(v.verified for v in extractions.values()),
            token_cost=tokens,
        )

    if workers <= 1 or len(items) <= 1:
        outcomes = [judge(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(judge, items))
    return ComparisonReport(tuple(outcomes))
