"""Dataset model: typed instances, loading, templates and synthetic corpora.

A dataset file is a JSON array of instances.  Each instance carries a
user-facing question plus a list of sub-questions (the individual
requirements a response must satisfy), and each sub-question optionally
names a rule label, a dependency list and capability tags.  Files written
by older tooling use Chinese key names for two fields (``能力项`` for
capability tags, ``被依赖`` for the depended-on marker); both spellings are
accepted.

Also here:

* template expansion — ``###name###`` placeholder substitution plus
  arithmetic spans like ``###200*0.9###`` (see
  :func:`evaluate_placeholder_expressions`),
* word-count capability bucketing ("7字" → "0~10字"),
* deterministic synthetic corpora for the formatting comparison runs.
"""

from __future__ import annotations

import ast
import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from . import taxonomy
from .rules import (
    CountMode,
    RuleParseError,
    RuleSpec,
    RuleVerdict,
    ElementCheck,
    count_units,
    parse_rule,
    register_rule_plugin,
)

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    """A dataset file or instance dict violates the schema."""


class Language(str, Enum):
    CHINESE = "chinese"
    ENGLISH = "english"

    @property
    def count_mode(self) -> CountMode:
        if self is Language.CHINESE:
            return CountMode.CHINESE_CHARS
        return CountMode.ENGLISH_WORDS


@dataclass(frozen=True)
class SubQuestion:
    """One requirement the response must satisfy."""

    point_id: int
    question: str  # the requirement, phrased as a yes/no question
    rule: str | None  # raw rule label; None means judged by the evaluator model
    rule_spec: RuleSpec | None  # parsed form of `rule`
    dep: tuple[int, ...] = ()  # point_ids that must pass before this one counts
    depended_on: bool = False
    capability_tags: tuple[tuple[str, ...], ...] = ()  # full taxonomy paths
    corresponding_part: str | None = None  # key into instance.corresponding_parts

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "point_id": self.point_id,
            "question": self.question,
            "rule": self.rule,
            "dep": list(self.dep),
            "depended_on": self.depended_on,
            "capability_tags": [list(p) for p in self.capability_tags],
        }
        if self.corresponding_part is not None:
            out["corresponding_part"] = self.corresponding_part
        return out


@dataclass(frozen=True)
class DataInstance:
    """One benchmark item: a question and its requirement list.

    Instances are immutable after loading; sessions and reports only read
    them, so they are safe to share across worker threads.
    """

    id: str
    category: str
    question: str
    corresponding_parts: Mapping[str, str]
    sub_questions: tuple[SubQuestion, ...]
    language: Language
    coding_flag: bool = False  # True: element extraction goes through generated code

    def sub_question(self, point_id: int) -> SubQuestion:
        for sq in self.sub_questions:
            if sq.point_id == point_id:
                return sq
        raise KeyError(point_id)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "question": self.question,
            "corresponding_parts": dict(self.corresponding_parts),
            "language": self.language.value,
            "coding_flag": self.coding_flag,
            "sub_questions": [sq.to_dict() for sq in self.sub_questions],
        }


_NULLISH = {"", "null", "none", "nan"}


def _as_rule(value: Any, ctx: str) -> tuple[str | None, RuleSpec | None]:
    if value is None:
        return None, None
    if not isinstance(value, str):
        raise DatasetError(f"{ctx}: rule must be a string or null, got {type(value).__name__}")
    if value.strip().lower() in _NULLISH:
        return None, None
    try:
        return value, parse_rule(value)
    except RuleParseError as exc:
        raise DatasetError(f"{ctx}: {exc}") from exc


def _as_tags(value: Any, ctx: str) -> tuple[tuple[str, ...], ...]:
    if value is None:
        return ()
    raw_tags: list[Any]
    if isinstance(value, str):
        raw_tags = [t for t in value.split("、") if t.strip()]
    elif isinstance(value, list):
        raw_tags = value
    else:
        raise DatasetError(f"{ctx}: capability tags must be a string or list")
    paths = []
    for tag in raw_tags:
        path = taxonomy.normalize_tag(tag)
        if len(path) == 1 and not taxonomy.is_dimension(path[0]):
            logger.warning("%s: unknown capability tag %r", ctx, tag)
        paths.append(path)
    return tuple(paths)


def detect_language(text: str) -> Language:
    """Guess the working language of a question from its script mix."""
    cjk = count_units(text, CountMode.CHINESE_CHARS)
    latin = sum(1 for ch in text if ch.isascii() and ch.isalpha())
    if cjk > 0 and cjk >= latin:
        return Language.CHINESE
    return Language.ENGLISH


def _derived_id(index: int, category: str, question: str) -> str:
    digest = hashlib.sha256(f"{category}\x1f{question}".encode("utf-8")).hexdigest()[:8]
    return f"item-{index:04d}-{digest}"


def parse_instance(obj: Any, *, index: int = 0) -> DataInstance:
    """Validate one raw instance dict and build a :class:`DataInstance`."""
    if not isinstance(obj, dict):
        raise DatasetError(f"instance #{index}: expected an object, got {type(obj).__name__}")

    question = obj.get("question")
    if not isinstance(question, str) or not question.strip():
        raise DatasetError(f"instance #{index}: 'question' must be a non-empty string")
    category = obj.get("category", "")
    if not isinstance(category, str):
        raise DatasetError(f"instance #{index}: 'category' must be a string")

    inst_id = obj.get("id")
    if inst_id is None:
        inst_id = _derived_id(index, category, question)
    elif not isinstance(inst_id, str) or not inst_id:
        raise DatasetError(f"instance #{index}: 'id' must be a non-empty string")
    ctx = f"instance {inst_id!r}"

    parts = obj.get("corresponding_parts", {})
    if not isinstance(parts, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in parts.items()
    ):
        raise DatasetError(f"{ctx}: 'corresponding_parts' must map strings to strings")

    lang_raw = obj.get("language")
    if lang_raw is None:
        language = detect_language(question)
    else:
        try:
            language = Language(str(lang_raw).lower())
        except ValueError:
            raise DatasetError(f"{ctx}: unknown language {lang_raw!r}") from None

    coding_flag = obj.get("coding_flag", False)
    if not isinstance(coding_flag, bool):
        raise DatasetError(f"{ctx}: 'coding_flag' must be a boolean")

    raw_sqs = obj.get("sub_questions")
    if not isinstance(raw_sqs, list) or not raw_sqs:
        raise DatasetError(f"{ctx}: 'sub_questions' must be a non-empty array")

    sub_questions: list[SubQuestion] = []
    for pos, raw in enumerate(raw_sqs):
        if not isinstance(raw, dict):
            raise DatasetError(f"{ctx}: sub_question #{pos} must be an object")
        sctx = f"{ctx}, sub_question #{pos}"
        pid = raw.get("point_id", pos)
        if not isinstance(pid, int) or isinstance(pid, bool):
            raise DatasetError(f"{sctx}: 'point_id' must be an integer")
        sq_question = raw.get("question")
        if not isinstance(sq_question, str) or not sq_question.strip():
            raise DatasetError(f"{sctx}: 'question' must be a non-empty string")
        rule_label, rule_spec = _as_rule(raw.get("rule"), sctx)
        dep_raw = raw.get("dep", [])
        if not isinstance(dep_raw, list) or not all(
            isinstance(d, int) and not isinstance(d, bool) for d in dep_raw
        ):
            raise DatasetError(f"{sctx}: 'dep' must be an array of integers")
        part = raw.get("corresponding_part")
        if part is not None:
            if not isinstance(part, str):
                raise DatasetError(f"{sctx}: 'corresponding_part' must be a string")
            if part not in parts:
                raise DatasetError(
                    f"{sctx}: corresponding_part {part!r} not found in corresponding_parts"
                )
        depended = raw.get("depended_on", raw.get("被依赖"))
        if depended is not None and not isinstance(depended, bool):
            raise DatasetError(f"{sctx}: 'depended_on' must be a boolean")
        tags = _as_tags(raw.get("capability_tags", raw.get("能力项")), sctx)
        sub_questions.append(
            SubQuestion(
                point_id=pid,
                question=sq_question,
                rule=rule_label,
                rule_spec=rule_spec,
                dep=tuple(dep_raw),
                depended_on=bool(depended) if depended is not None else False,
                capability_tags=tags,
                corresponding_part=part,
            )
        )

    pids = sorted(sq.point_id for sq in sub_questions)
    if pids != list(range(len(sub_questions))):
        raise DatasetError(f"{ctx}: point_ids must be dense 0..{len(sub_questions) - 1}, got {pids}")

    known = set(pids)
    for sq in sub_questions:
        for d in sq.dep:
            if d == sq.point_id:
                raise DatasetError(f"{ctx}: sub_question {sq.point_id} depends on itself")
            if d not in known:
                raise DatasetError(
                    f"{ctx}: sub_question {sq.point_id} depends on unknown point_id {d}"
                )
    _check_acyclic(sub_questions, ctx)

    # Fill in depended_on from the graph when the data did not set it.
    referenced = {d for sq in sub_questions for d in sq.dep}
    filled = []
    for pos, (sq, raw) in enumerate(zip(sub_questions, raw_sqs)):
        if "depended_on" not in raw and "被依赖" not in raw and sq.point_id in referenced:
            sq = SubQuestion(
                point_id=sq.point_id,
                question=sq.question,
                rule=sq.rule,
                rule_spec=sq.rule_spec,
                dep=sq.dep,
                depended_on=True,
                capability_tags=sq.capability_tags,
                corresponding_part=sq.corresponding_part,
            )
        filled.append(sq)

    return DataInstance(
        id=inst_id,
        category=category,
        question=question,
        corresponding_parts=dict(parts),
        sub_questions=tuple(filled),
        language=language,
        coding_flag=coding_flag,
    )


def _check_acyclic(sub_questions: Iterable[SubQuestion], ctx: str) -> None:
    deps = {sq.point_id: set(sq.dep) for sq in sub_questions}
    ready = [pid for pid, ds in deps.items() if not ds]
    seen = 0
    while ready:
        pid = ready.pop()
        seen += 1
        for other, ds in deps.items():
            if pid in ds:
                ds.discard(pid)
                if not ds:
                    ready.append(other)
    if seen != len(deps):
        stuck = sorted(pid for pid, ds in deps.items() if ds)
        raise DatasetError(f"{ctx}: dependency cycle among point_ids {stuck}")


def load_dataset(path: str | Path) -> list[DataInstance]:
    """Load and validate a dataset file (JSON array of instances)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"dataset {path} is not valid JSON: {exc}") from exc
    return parse_dataset(raw)


def parse_dataset(raw: Any) -> list[DataInstance]:
    if not isinstance(raw, list):
        raise DatasetError("dataset root must be a JSON array of instances")
    instances = [parse_instance(obj, index=i) for i, obj in enumerate(raw)]
    seen: dict[str, int] = {}
    for i, inst in enumerate(instances):
        if inst.id in seen:
            raise DatasetError(f"duplicate instance id {inst.id!r} (items #{seen[inst.id]} and #{i})")
        seen[inst.id] = i
    return instances


def dump_dataset(instances: Iterable[DataInstance], path: str | Path | None = None) -> str:
    text = json.dumps([inst.to_dict() for inst in instances], indent=4, ensure_ascii=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# Placeholder templates
# ---------------------------------------------------------------------------

_SPAN_RE = re.compile(r"###(.*?)###", re.DOTALL)

_ALLOWED_AST = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant,
                ast.Add, ast.Sub, ast.Mult, ast.Div, ast.UAdd, ast.USub)


def _eval_arithmetic(expr: str) -> float:
    """Evaluate +,-,*,/ arithmetic over numeric literals. No names, no calls."""
    tree = ast.parse(expr, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_AST):
            raise ValueError(f"disallowed syntax {type(node).__name__!r} in {expr!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError(f"non-numeric literal in {expr!r}")
    return _eval_node(tree.body)


def _eval_node(node: ast.AST) -> float:
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.UnaryOp):
        v = _eval_node(node.operand)
        return +v if isinstance(node.op, ast.UAdd) else -v
    if isinstance(node, ast.BinOp):
        a, b = _eval_node(node.left), _eval_node(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        return a / b
    raise ValueError(f"unexpected node {type(node).__name__}")


def evaluate_placeholder_expressions(text: str) -> str:
    """Replace every ``###expr###`` span with its value formatted ``{:.1f}``.

    ``"###10*0.9###"`` becomes ``"9.0"``; ``"###200*1.1###"`` becomes
    ``"220.0"``.  A span that does not evaluate (stray names, bad syntax)
    is left untouched and logged, so template typos surface in output
    rather than crashing generation.
    """

    def repl(m: re.Match) -> str:
        expr = m.group(1)
        try:
            return "{:.1f}".format(_eval_arithmetic(expr))
        except (ValueError, SyntaxError, ZeroDivisionError) as exc:
            logger.warning("could not evaluate expression %r: %s", expr, exc)
            return m.group(0)

    return _SPAN_RE.sub(repl, text)


@dataclass(frozen=True)
class TemplateSpec:
    """A parameterised skeleton plus the parameter grid to expand it over."""

    parameter_names: tuple[str, ...]
    parameter_rows: tuple[tuple, ...]  # each row binds parameter_names in order
    instances: tuple[dict, ...]  # raw instance skeletons with ###name### spans


def load_template(path: str | Path) -> TemplateSpec:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read template {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"template {path} is not valid JSON: {exc}") from exc
    return parse_template(raw)


def parse_template(raw: Any) -> TemplateSpec:
    if not isinstance(raw, dict):
        raise DatasetError("template root must be an object")
    params = raw.get("parameters")
    if not isinstance(params, dict):
        raise DatasetError("template must contain a 'parameters' object")
    names = params.get("names")
    rows = params.get("values")
    if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
        raise DatasetError("'parameters.names' must be a non-empty array of strings")
    if len(set(names)) != len(names):
        raise DatasetError("'parameters.names' contains duplicates")
    if not isinstance(rows, list) or not rows:
        raise DatasetError("'parameters.values' must be a non-empty array")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(names):
            raise DatasetError(
                f"'parameters.values'[{i}] must bind all of {names} (got {row!r})"
            )
    skeletons = raw.get("instances")
    if not isinstance(skeletons, list) or not skeletons or not all(
        isinstance(s, dict) for s in skeletons
    ):
        raise DatasetError("'instances' must be a non-empty array of objects")
    return TemplateSpec(
        parameter_names=tuple(names),
        parameter_rows=tuple(tuple(r) for r in rows),
        instances=tuple(skeletons),
    )


def _substitute_strings(obj: Any, binding: Mapping[str, Any]) -> Any:
    """Apply placeholder substitution to every string in a JSON-ish tree.

    First exact ``###name###`` spans are replaced with the bound value,
    then bare names *inside remaining spans* are replaced (this is what
    turns ``###字数2*0.9###`` into ``###300*0.9###``), and finally the
    arithmetic spans are evaluated.
    """
    if isinstance(obj, str):
        text = obj
        for name, value in binding.items():
            text = text.replace(f"###{name}###", str(value))

        def bind_in_span(m: re.Match) -> str:
            inner = m.group(1)
            for name, value in binding.items():
                inner = inner.replace(name, str(value))
            return f"###{inner}###"

        text = _SPAN_RE.sub(bind_in_span, text)
        return evaluate_placeholder_expressions(text)
    if isinstance(obj, dict):
        return {
            _substitute_strings(k, binding): _substitute_strings(v, binding)
            for k, v in obj.items()
        }
    if isinstance(obj, list):
        return [_substitute_strings(v, binding) for v in obj]
    return obj


_WORD_COUNT_TAG = re.compile(r"^\s*([0-9.+-eE]+)\s*字\s*$")


def bucket_word_count(n: float) -> str | None:
    """Map a nonnegative word count to its capability bucket name."""
    if n < 0:
        return None
    if n < 10:
        return "0~10字"
    if n < 50:
        return "10~50字"
    if n < 200:
        return "50~200字"
    return "200字以上"


def bucket_word_count_capability(tag: str) -> str:
    """Replace a concrete word-count tag like "7字" with its range bucket.

    Tags that do not end in 字 pass through unchanged; tags whose prefix
    does not parse as a number pass through with a warning (bad template
    output should be visible, not fatal).
    """
    stripped = tag.strip()
    if not stripped.endswith("字"):
        return tag
    try:
        n = float(stripped[:-1])
    except ValueError:
        logger.warning("could not parse word count from tag %r", tag)
        return tag
    bucket = bucket_word_count(n)
    return bucket if bucket is not None else tag


def _bucket_tags_in_place(obj: dict) -> None:
    for sq in obj.get("sub_questions", []):
        if not isinstance(sq, dict):
            continue
        for key in ("能力项", "capability_tags"):
            value = sq.get(key)
            if isinstance(value, str):
                parts = value.split("、")
                sq[key] = "、".join(bucket_word_count_capability(p) for p in parts)
            elif isinstance(value, list):
                sq[key] = [
                    bucket_word_count_capability(p) if isinstance(p, str) else p
                    for p in value
                ]


def expand_template(spec: TemplateSpec) -> list[DataInstance]:
    """Expand a template over its parameter grid.

    Output order is rows-major: all skeletons for the first parameter row,
    then the next row, and so on.  Word-count capability tags are bucketed
    after substitution, so "###字数1###字" ends up as a range bucket.
    """
    out: list[DataInstance] = []
    for row in spec.parameter_rows:
        binding = dict(zip(spec.parameter_names, row))
        for skeleton in spec.instances:
            obj = _substitute_strings(skeleton, binding)
            _bucket_tags_in_place(obj)
            out.append(parse_instance(obj, index=len(out)))
    return out


# ---------------------------------------------------------------------------
# Synthetic formatting corpora
# ---------------------------------------------------------------------------


class CorpusScenario(str, Enum):
    LONG_SINGLE = "long_single"  # one long passage, sentence-count requirement
    MULTI_ELEMENT = "multi_element"  # several elements, per-element length range


@dataclass(frozen=True)
class CorpusItem:
    """A synthetic (instance, response) pair with its ground-truth label."""

    instance: DataInstance
    response: str
    label: bool  # True: the response genuinely satisfies all rules


_SENTENCE_BOUNDARY = re.compile(r"[.!?。！？]+")


def count_sentences(text: str) -> int:
    return sum(1 for seg in _SENTENCE_BOUNDARY.split(text) if seg.strip())


def _sentence_count_checker(args, elements, mode, language) -> RuleVerdict:
    if len(args) != 2:
        raise ValueError(f"sentence_count expects [min, max], got {args!r}")
    lo, hi = args
    n = sum(count_sentences(el) for el in elements)
    ok = lo <= n <= hi
    if ok:
        fb = ""
    elif language == "chinese":
        fb = f"句子数量为{n}，要求在{lo}到{hi}之间"
    else:
        fb = f"sentence count is {n}, required between {lo} and {hi}"
    return RuleVerdict(ok, (ElementCheck(-1, n, ok),), fb)


# sentence_count is used by the long_single corpus below and doubles as the
# in-repo demonstration of the plugin rule API.
register_rule_plugin("sentence_count", _sentence_count_checker)


_LONG_SINGLE_MAX = 10**6

_CJK_POOL = "城市发展带来机遇与挑战交通住房教育医疗生态环境治理需要耐心智慧共同参与建设宜居家园"


def _cjk_filler(length: int, offset: int) -> str:
    """Deterministic all-ideograph filler of exactly `length` characters."""
    if length <= 0:
        return ""
    reps = (length + offset) // len(_CJK_POOL) + 2
    return (_CJK_POOL * reps)[offset : offset + length]


def _long_single_items(n: int) -> list[CorpusItem]:
    # "at least 0 sentences" cannot be violated, so the degenerate n=0 case
    # is read as "produce a non-empty continuation" (at least one sentence).
    required = max(n, 1)
    question = (
        "A man is performing on stage for the audience, the lights dim and the "
        f"crowd falls silent. Please continue and expand this passage with at "
        f"least {n} sentences."
    )
    obj = {
        "id": f"fmt-long-{n:03d}",
        "category": "formatting_long_single",
        "question": question,
        "language": "english",
        "coding_flag": True,
        "corresponding_parts": {
            "continuation": (
                "Please extract the continued passage from the model response, "
                'in python list format, for example ["The stage lights rose."] — '
                "content only, without any surrounding commentary."
            )
        },
        "sub_questions": [
            {
                "point_id": 0,
                "question": f"Does the continuation contain at least {n} sentences?",
                "rule": f"sentence_count:[{required},{_LONG_SINGLE_MAX}]",
                "dep": [],
                "corresponding_part": "continuation",
                "capability_tags": ["Element number requirement"],
            }
        ],
    }
    instance = parse_instance(obj, index=n)

    def response_with(count: int) -> str:
        body = " ".join(
            f"Sentence {i + 1} keeps the performance alive." for i in range(count)
        )
        return (
            "Sure, here is my continuation of the scene.\n\n"
            f"[CONTINUATION]\n{body}\n[END]\n\n"
            "I hope the audience enjoys it!"
        )

    return [
        CorpusItem(instance, response_with(required), True),
        CorpusItem(instance, response_with(required - 1), False),
    ]


def _multi_element_items(chars: int, index: int) -> list[CorpusItem]:
    lo, hi = chars * 0.9, chars * 1.1
    question = (
        f"请围绕城市发展这一话题写3条短评，每条{chars}字左右（允许上下浮动10%），"
        "字数只计中文字符。"
    )
    obj = {
        "id": f"fmt-multi-{chars:04d}",
        "category": "formatting_multi_element",
        "question": question,
        "language": "chinese",
        "coding_flag": False,
        "corresponding_parts": {
            "短评": '请你按照python list的格式，抓取模型回复中给出的短评部分，'
                   '例如["第一条短评", "第二条短评"]，只提取内容，不要提取序号或注释。'
        },
        "sub_questions": [
            {
                "point_id": 0,
                "question": "是否给出了3条短评？",
                "rule": "item_count:[3,3]",
                "dep": [],
                "corresponding_part": "短评",
                "capability_tags": ["单元数量合规"],
                "被依赖": True,
            },
            {
                "point_id": 1,
                "question": f"每条短评是否在{chars}字左右（上下浮动10%）？",
                "rule": f"each_length:[{lo:.1f},{hi:.1f}]",
                "dep": [0],
                "corresponding_part": "短评",
                "capability_tags": f"{bucket_word_count_capability(str(chars) + '字')}、范围",
            },
        ],
    }
    instance = parse_instance(obj, index=index)

    def response_with(lengths: list[int]) -> str:
        elements = [_cjk_filler(n, i * 7) for i, n in enumerate(lengths)]
        lines = "\n".join(f"{i + 1}. {el}" for i, el in enumerate(elements))
        return f"好的，以下是三条短评：\n{lines}\n希望这些短评对您有帮助！"

    short = int(chars * 0.7)
    return [
        CorpusItem(instance, response_with([chars, chars, chars]), True),
        CorpusItem(instance, response_with([chars, short, chars]), False),
    ]


def generate_formatting_corpus(scenario: CorpusScenario) -> list[CorpusItem]:
    """Build the deterministic corpus for one formatting scenario.

    ``LONG_SINGLE`` sweeps the required sentence count 0..500 (501
    parameterizations); ``MULTI_ELEMENT`` sweeps the per-element character
    count 50, 150, ..., 4950 (50 parameterizations).  Every
    parameterization yields one satisfying and one violating response, so
    labels are balanced 1:1 by construction.
    """
    scenario = CorpusScenario(scenario)
    items: list[CorpusItem] = []
    if scenario is CorpusScenario.LONG_SINGLE:
        for n in range(0, 501):
            items.extend(_long_single_items(n))
    else:
        for i, chars in enumerate(range(50, 5000, 100)):
            items.extend(_multi_element_items(chars, i))
    return items
