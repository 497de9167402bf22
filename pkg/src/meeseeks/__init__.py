"""Meeseeks: a multi-turn instruction-following evaluation harness.

A target model answers an instruction carrying many individual
requirements; every requirement is judged (deterministic rules on
extracted elements where possible, an evaluator model otherwise); the
failures are folded into corrective feedback; the target tries again.
Instances freeze the moment they fully pass.  Per-round utility rates,
capability-tree breakdowns and cross-model analytics fall out of the
recorded transcripts.
"""

from .dataset import (
    CorpusItem,
    CorpusScenario,
    DataInstance,
    DatasetError,
    Language,
    SubQuestion,
    dump_dataset,
    expand_template,
    generate_formatting_corpus,
    load_dataset,
    load_template,
    parse_dataset,
    parse_instance,
)
from .extraction import (
    ExtractionResult,
    ExtractionStrategy,
    extract_part,
)
from .formatting_experiment import ComparisonReport, run_formatting_comparison
from .gateway import (
    ChatGateway,
    ChatReply,
    Endpoint,
    GatewayError,
    HttpChatGateway,
    ReplayGateway,
    ReplayMode,
    ReplayStore,
    estimate_message_tokens,
    estimate_tokens,
    register_token_estimator,
)
from .judging import (
    Judgment,
    JudgmentSource,
    apply_dependency_propagation,
    judge_sub_question,
    synthesize_feedback,
)
from .orchestrator import (
    RunConfig,
    RunResult,
    SessionStatus,
    Transcript,
    TranscriptStore,
    TurnRecord,
    run_benchmark,
    run_instance_session,
)
from .reporting import (
    DEFAULT_WINDOWS,
    REPORT_SCHEMA,
    CapabilityNode,
    CrossModelAnalysis,
    RoundReport,
    build_reports,
    build_round_report,
    cross_model_analysis,
    load_utility_reference,
    parse_report,
    pearson_correlation,
    spearman_correlation,
    utility_rate_series,
    validate_report,
    window_average_series,
)
from .rules import (
    CountMode,
    RuleParseError,
    RuleSpec,
    RuleVerdict,
    check_rule,
    count_units,
    parse_rule,
    register_rule_plugin,
)
from .sandbox import (
    SandboxErrorKind,
    SandboxExecutionError,
    SandboxPolicy,
    execute_extraction_program,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityNode",
    "ChatGateway",
    "ChatReply",
    "ComparisonReport",
    "CorpusItem",
    "CorpusScenario",
    "CountMode",
    "CrossModelAnalysis",
    "DEFAULT_WINDOWS",
    "DataInstance",
    "DatasetError",
    "Endpoint",
    "ExtractionResult",
    "ExtractionStrategy",
    "GatewayError",
    "HttpChatGateway",
    "Judgment",
    "JudgmentSource",
    "Language",
    "REPORT_SCHEMA",
    "ReplayGateway",
    "ReplayMode",
    "ReplayStore",
    "RoundReport",
    "RuleParseError",
    "RuleSpec",
    "RuleVerdict",
    "RunConfig",
    "RunResult",
    "SandboxErrorKind",
    "SandboxExecutionError",
    "SandboxPolicy",
    "SessionStatus",
    "SubQuestion",
    "Transcript",
    "TranscriptStore",
    "TurnRecord",
    "apply_dependency_propagation",
    "build_reports",
    "build_round_report",
    "check_rule",
    "count_units",
    "cross_model_analysis",
    "dump_dataset",
    "estimate_message_tokens",
    "estimate_tokens",
    "execute_extraction_program",
    "expand_template",
    "extract_part",
    "generate_formatting_corpus",
    "judge_sub_question",
    "load_dataset",
    "load_template",
    "load_utility_reference",
    "parse_dataset",
    "parse_instance",
    "parse_report",
    "parse_rule",
    "pearson_correlation",
    "register_rule_plugin",
    "register_token_estimator",
    "run_benchmark",
    "run_formatting_comparison",
    "run_instance_session",
    "spearman_correlation",
    "synthesize_feedback",
    "utility_rate_series",
    "validate_report",
    "window_average_series",
]
