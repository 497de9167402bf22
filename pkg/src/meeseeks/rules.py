"""Deterministic constraint checkers for extracted response elements.

A rule label is a compact string such as ``item_count:[80,80]`` or
``non_repeat``.  Labels are parsed once into :class:`RuleSpec` objects and
checked against a list of extracted elements, yielding a :class:`RuleVerdict`
with per-element detail and a feedback sentence that embeds the measured
quantities (so a failing model can be told *what* was measured, not just
that it failed).

Checkers are pure: no I/O, no globals mutated, same verdict for same input.
Unknown rule names can be supplied at runtime through
:func:`register_rule_plugin`.
"""

from __future__ import annotations

import ast
import json
import re
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import Callable


class RuleParseError(ValueError):
    """Raised when a rule label does not conform to the rule grammar."""


class CountMode(Enum):
    """How textual length is measured."""

    CHINESE_CHARS = "chinese_chars"  # CJK unified ideograph code points only
    ENGLISH_WORDS = "english_words"  # whitespace tokens containing a Latin letter


class RuleKind(Enum):
    ITEM_COUNT = "item_count"
    EACH_LENGTH = "each_length"
    NON_REPEAT = "non_repeat"
    WORD_FREQ = "word_freq"
    KEYWORDS = "keywords"
    JSON_FORMAT = "json_format"
    PLUGIN = "plugin"


# CJK Unified Ideographs, base block + extensions A..H.  Punctuation, kana
# and hangul are deliberately excluded: "count Chinese characters" in the
# datasets means ideographs only.
_CJK_RANGES = (
    (0x4E00, 0x9FFF),
    (0x3400, 0x4DBF),
    (0x20000, 0x2A6DF),
    (0x2A700, 0x2B73F),
    (0x2B740, 0x2B81F),
    (0x2B820, 0x2CEAF),
    (0x2CEB0, 0x2EBEF),
    (0x30000, 0x3134F),
    (0x31350, 0x323AF),
)

_LATIN_LETTER = re.compile(r"[A-Za-zÀ-ɏ]")


def is_cjk_char(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def count_units(text: str, mode: CountMode) -> int:
    """Count length units in ``text`` under the given mode.

    ``CHINESE_CHARS`` counts CJK ideograph code points and ignores
    everything else (digits, latin letters, punctuation, whitespace).
    ``ENGLISH_WORDS`` splits on whitespace and counts tokens that contain
    at least one Latin letter, so stray punctuation or numerals between
    words do not inflate the count.
    """
    if mode is CountMode.CHINESE_CHARS:
        return sum(1 for ch in text if is_cjk_char(ch))
    if mode is CountMode.ENGLISH_WORDS:
        return sum(1 for tok in text.split() if _LATIN_LETTER.search(tok))
    raise ValueError(f"unsupported count mode: {mode!r}")


@dataclass(frozen=True)
class RuleSpec:
    """A parsed rule label."""

    kind: RuleKind
    args: tuple  # kind-specific payload, normalised (see parse_rule)
    raw: str  # original label text, kept for serialisation and messages

    @property
    def plugin_name(self) -> str:
        if self.kind is not RuleKind.PLUGIN:
            raise ValueError("not a plugin rule")
        return self.args[0]


@dataclass(frozen=True)
class ElementCheck:
    """Outcome of checking one element (or one global property)."""

    index: int  # element index; -1 for collection-level checks
    measured: object  # the quantity that was measured (count, tokens, ...)
    passed: bool


@dataclass(frozen=True)
class RuleVerdict:
    passed: bool
    per_element: tuple[ElementCheck, ...]
    feedback: str  # empty iff passed; embeds measured quantities otherwise


PluginChecker = Callable[[tuple, list[str], CountMode, str], RuleVerdict]

_PLUGINS: dict[str, PluginChecker] = {}


def register_rule_plugin(name: str, checker: PluginChecker) -> None:
    """Register a checker for an out-of-grammar rule name.

    The checker receives ``(args, elements, mode, language)`` and must
    return a :class:`RuleVerdict`.  Registering an existing name replaces
    the previous checker.
    """
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        raise ValueError(f"invalid plugin rule name: {name!r}")
    _PLUGINS[name] = checker


def unregister_rule_plugin(name: str) -> None:
    _PLUGINS.pop(name, None)


def registered_rule_plugins() -> tuple[str, ...]:
    return tuple(sorted(_PLUGINS))


def _num(value: object) -> str:
    """Render a bound or count without a spurious trailing ``.0``."""
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


_LABEL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?::\s*(.*?)\s*)?$", re.DOTALL)


def parse_rule(label: str) -> RuleSpec:
    """Parse a rule label string into a :class:`RuleSpec`.

    Grammar::

        label  ::= name | name ":" "[" args "]"
        name   ::= identifier
        args   ::= comma-separated numbers / quoted strings

    The bracketed part is read as a Python/JSON list literal.  Unknown
    names are accepted only when a plugin checker is registered for them.
    """
    if not isinstance(label, str):
        raise RuleParseError(f"rule label must be a string, got {type(label).__name__}")
    m = _LABEL_RE.match(label)
    if not m:
        raise RuleParseError(f"malformed rule label: {label!r}")
    name, arg_text = m.group(1), m.group(2)

    args: list = []
    if arg_text is not None:
        if not (arg_text.startswith("[") and arg_text.endswith("]")):
            raise RuleParseError(f"rule arguments must be a bracketed list: {label!r}")
        try:
            parsed = ast.literal_eval(arg_text)
        except (ValueError, SyntaxError) as exc:
            raise RuleParseError(f"unparsable rule arguments in {label!r}: {exc}") from exc
        if not isinstance(parsed, (list, tuple)):
            raise RuleParseError(f"rule arguments must form a list: {label!r}")
        args = list(parsed)

    def bounds_pair() -> tuple[float, float]:
        if len(args) != 2 or not all(_is_number(a) for a in args):
            raise RuleParseError(f"{name} expects two numeric bounds: {label!r}")
        lo, hi = args
        if lo > hi:
            raise RuleParseError(f"{name} bounds out of order in {label!r}: {lo} > {hi}")
        return lo, hi

    if name == "item_count":
        return RuleSpec(RuleKind.ITEM_COUNT, bounds_pair(), label)
    if name == "each_length":
        return RuleSpec(RuleKind.EACH_LENGTH, bounds_pair(), label)
    if name == "non_repeat":
        if args:
            raise RuleParseError(f"non_repeat takes no arguments: {label!r}")
        return RuleSpec(RuleKind.NON_REPEAT, (), label)
    if name == "word_freq":
        if (
            len(args) != 3
            or not isinstance(args[0], str)
            or not all(_is_number(a) for a in args[1:])
        ):
            raise RuleParseError(f"word_freq expects [token, min, max]: {label!r}")
        if args[1] > args[2]:
            raise RuleParseError(f"word_freq bounds out of order: {label!r}")
        return RuleSpec(RuleKind.WORD_FREQ, (args[0], args[1], args[2]), label)
    if name == "keywords":
        if not args or not all(isinstance(a, str) for a in args):
            raise RuleParseError(f"keywords expects a non-empty list of strings: {label!r}")
        return RuleSpec(RuleKind.KEYWORDS, tuple(args), label)
    if name == "json_format":
        if args:
            raise RuleParseError(f"json_format takes no arguments: {label!r}")
        return RuleSpec(RuleKind.JSON_FORMAT, (), label)
    if name in _PLUGINS:
        return RuleSpec(RuleKind.PLUGIN, (name, tuple(args)), label)
    raise RuleParseError(f"unknown rule name {name!r} in {label!r} (no plugin registered)")


def _unit_word(mode: CountMode, language: str) -> str:
    if language == "chinese":
        return "字" if mode is CountMode.CHINESE_CHARS else "个英文单词"
    return "Chinese characters" if mode is CountMode.CHINESE_CHARS else "words"


def check_rule(
    spec: RuleSpec,
    elements: list[str],
    mode: CountMode,
    language: str = "english",
) -> RuleVerdict:
    """Check extracted elements against a parsed rule.

    Always yields a verdict; nothing here raises on odd content (empty
    element lists, empty strings and so on are legitimate measurements).
    ``language`` only affects the wording of the feedback sentence.
    """
    zh = language == "chinese"
    kind = spec.kind

    if kind is RuleKind.ITEM_COUNT:
        lo, hi = spec.args
        n = len(elements)
        ok = lo <= n <= hi
        if ok:
            fb = ""
        elif zh:
            fb = f"元素数量为{n}，要求在{_num(lo)}到{_num(hi)}之间"
        else:
            fb = f"element count is {n}, required between {_num(lo)} and {_num(hi)}"
        return RuleVerdict(ok, (ElementCheck(-1, n, ok),), fb)

    if kind is RuleKind.EACH_LENGTH:
        lo, hi = spec.args
        checks = []
        bad = []
        for i, el in enumerate(elements):
            c = count_units(el, mode)
            ok = lo <= c <= hi
            checks.append(ElementCheck(i, c, ok))
            if not ok:
                bad.append((i, c))
        unit = _unit_word(mode, language)
        if not bad:
            fb = ""
        elif zh:
            fb = "；".join(
                f"第{i + 1}条长度为{c}{unit}，要求在{_num(lo)}到{_num(hi)}{unit}之间"
                for i, c in bad
            )
        else:
            fb = "; ".join(
                f"element {i + 1} has {c} {unit}, required between {_num(lo)} and {_num(hi)}"
                for i, c in bad
            )
        return RuleVerdict(not bad, tuple(checks), fb)

    if kind is RuleKind.NON_REPEAT:
        # Normalise before comparing so visually identical text (NFC vs NFD,
        # stray surrounding whitespace) counts as a repeat.
        seen: dict[str, int] = {}
        checks = []
        dupes = []
        for i, el in enumerate(elements):
            key = unicodedata.normalize("NFC", el).strip()
            dup = key in seen
            checks.append(ElementCheck(i, el, not dup))
            if dup:
                dupes.append((i, el, seen[key]))
            else:
                seen[key] = i
        if not dupes:
            fb = ""
        elif zh:
            fb = "；".join(
                f"第{i + 1}条与第{j + 1}条重复：{el!r}" for i, el, j in dupes
            )
        else:
            fb = "; ".join(
                f"element {i + 1} repeats element {j + 1}: {el!r}" for i, el, j in dupes
            )
        return RuleVerdict(not dupes, tuple(checks), fb)

    if kind is RuleKind.WORD_FREQ:
        token, lo, hi = spec.args
        text = "\n".join(elements)
        n = text.count(token) if token else 0
        ok = lo <= n <= hi
        if ok:
            fb = ""
        elif zh:
            fb = f"「{token}」出现了{n}次，要求在{_num(lo)}到{_num(hi)}次之间"
        else:
            fb = (
                f"the word {token!r} appears {n} times, "
                f"required between {_num(lo)} and {_num(hi)} times"
            )
        return RuleVerdict(ok, (ElementCheck(-1, n, ok),), fb)

    if kind is RuleKind.KEYWORDS:
        text = "\n".join(elements)
        missing = [k for k in spec.args if k not in text]
        checks = tuple(
            ElementCheck(-1, k, k not in missing) for k in spec.args
        )
        if not missing:
            fb = ""
        elif zh:
            fb = "缺少关键词：" + "、".join(missing)
        else:
            fb = "missing keywords: " + ", ".join(missing)
        return RuleVerdict(not missing, checks, fb)

    if kind is RuleKind.JSON_FORMAT:
        checks = []
        bad = []
        for i, el in enumerate(elements):
            err = _json_error(el)
            checks.append(ElementCheck(i, err, err is None))
            if err is not None:
                bad.append((i, err))
        if not bad:
            fb = ""
        elif zh:
            fb = "；".join(f"第{i + 1}条不是有效的JSON：{err}" for i, err in bad)
        else:
            fb = "; ".join(f"element {i + 1} is not valid JSON: {err}" for i, err in bad)
        return RuleVerdict(not bad, tuple(checks), fb)

    if kind is RuleKind.PLUGIN:
        name, plugin_args = spec.args
        try:
            checker = _PLUGINS[name]
        except KeyError:
            raise LookupError(
                f"plugin rule {name!r} was unregistered after parsing"
            ) from None
        return checker(plugin_args, elements, mode, language)

    raise ValueError(f"unhandled rule kind: {kind!r}")


def _json_error(text: str) -> str | None:
    """Return None when ``text`` is a JSON object/array, else a reason.

    Bare scalars ("42", "true") are rejected: when a prompt asks for JSON
    output it means a structured document, and accepting scalars would let
    arbitrary numeric answers pass.  A fenced ```json block is unwrapped
    first, since models routinely wrap structured output in fences.
    """
    t = text.strip()
    fence = re.match(r"^```(?:json)?\s*\n(.*)\n?```\s*$", t, re.DOTALL)
    if fence:
        t = fence.group(1).strip()
    if not t:
        return "empty"
    if t[0] not in "[{":
        return "top-level value is not an object or array"
    try:
        json.loads(t)
    except json.JSONDecodeError as exc:
        return f"{exc.msg} at position {exc.pos}"
    return None
