"""Canonical capability tag tree and tag-path normalisation.

Capability tags annotate sub-questions with what ability they probe.  In
raw data files a tag may appear as a Chinese node name ("主题约束"), an
English node name ("Theme requirement"), or a full path.  This module owns
the canonical three-dimension tree and resolves any known spelling to a
full canonical path, so that scoring and reporting group outcomes
consistently.

Unknown tags are not an error here: they resolve to a single-element path
and are surfaced by the reporting layer under a diagnostic node.
"""

from __future__ import annotations

from typing import Iterator, Sequence

DIMENSIONS = (
    "Intent Recognition",
    "Granular Content Validation",
    "Output Structure Validation",
)

# (chinese name, english name, children)
_Node = tuple[str, str, tuple]

TREE: tuple[_Node, ...] = (
    (
        "任务意图理解",
        "Intent Recognition",
        (
            ("在干扰下完成指令", "Follow instruction under distraction", ()),
        ),
    ),
    (
        "单元细节合规",
        "Granular Content Validation",
        (
            ("主题约束", "Theme requirement", ()),
            (
                "文体约束",
                "Stylistic requirement",
                (
                    ("生成特定文案", "Generate in certain style", ()),
                    ("生成名字/标题", "Generate names/titles", ()),
                ),
            ),
            (
                "语言约束",
                "Language requirement",
                (
                    ("中英文混杂", "Generate Chinese-English-mixed article", ()),
                ),
            ),
            (
                "格式约束",
                "Format requirement",
                (
                    ("特定格式", "Generate in other format", ()),
                    ("日期格式", "Generate result in date-format", ()),
                ),
            ),
            (
                "字数约束",
                "Word count requirement",
                (
                    ("精确", "Generate at accurate word number", ()),
                    ("范围", "Generate in rough/range word number", ()),
                    ("倍数", "Generate in X times word number of reference text", ()),
                    ("0~10字", "Generate in 0~10 words", ()),
                    ("10~50字", "Generate in 10~50 words", ()),
                    ("50~200字", "Generate in 50~200 words", ()),
                    ("200字以上", "Generate in above 200 words", ()),
                ),
            ),
            (
                "其他特殊规则",
                "Other granular requirements",
                (
                    ("押韵", "Generate rhyming content", ()),
                    ("关键词", "Generate with certain keywords", ()),
                    ("重复", "Generate repeat/non-repeat content", ()),
                    ("写作手法", "Generate with certain rhetoric", ()),
                    ("词频", "Generate with certain number of word X", ()),
                ),
            ),
        ),
    ),
    (
        "整体结构合规",
        "Output Structure Validation",
        (
            (
                "模版合规",
                "Output format requirement",
                (
                    ("JSON格式", "Generate in JSON format", ()),
                ),
            ),
            ("单元数量合规", "Element number requirement", ()),
            (
                "答题逻辑合规",
                "Output logic requirement",
                (
                    ("答题结构合规", "Generate by certain steps", ()),
                ),
            ),
        ),
    ),
)

# Alternative spellings observed in data and reports.
_EXTRA_ALIASES = {
    "JSON format": ("Output Structure Validation", "Output format requirement", "Generate in JSON format"),
    "Granular format requirement": ("Granular Content Validation", "Format requirement"),
    "模板合规": ("Output Structure Validation", "Output format requirement"),
}


def _clean(name: str) -> str:
    # Full-width tilde and range dash variants all mean the ASCII tilde.
    return name.strip().replace("～", "~").replace("〜", "~")


def _walk(nodes: tuple[_Node, ...], prefix: tuple[str, ...]) -> Iterator[tuple[str, str, tuple[str, ...]]]:
    for zh, en, children in nodes:
        path = prefix + (en,)
        yield zh, en, path
        yield from _walk(children, path)


_PATH_BY_NAME: dict[str, tuple[str, ...]] = {}
_ORDER_BY_NAME: dict[str, int] = {}
for _i, (_zh, _en, _path) in enumerate(_walk(TREE, ())):
    _ORDER_BY_NAME[_en] = _i
    # First registration wins; node names in the tree are unique anyway.
    _PATH_BY_NAME.setdefault(_en, _path)
    _PATH_BY_NAME.setdefault(_clean(_zh), _path)
for _alias, _path in _EXTRA_ALIASES.items():
    _PATH_BY_NAME.setdefault(_clean(_alias), _path)


def tag_path(name: str) -> tuple[str, ...] | None:
    """Full canonical path for a known node name (Chinese or English)."""
    return _PATH_BY_NAME.get(_clean(name))


def canonical_name(name: str) -> str:
    """Canonical English node name for any known spelling, else unchanged."""
    path = tag_path(name)
    return path[-1] if path else _clean(name)


def normalize_tag(tag: str | Sequence[str]) -> tuple[str, ...]:
    """Resolve a raw tag (name or path) to a full capability path.

    A bare name resolves through the tree; an explicit path has its
    deepest component resolved when known (so ["字数约束", "范围"] and
    ["Word count requirement", "Generate in rough/range word number"]
    land on the same canonical path).  Unknown names come back as a
    single-element path and are reported as untagged downstream.
    """
    if isinstance(tag, str):
        return tag_path(tag) or (_clean(tag),)
    parts = [p for p in (str(p) for p in tag) if p.strip()]
    if not parts:
        raise ValueError("empty capability tag path")
    deepest = tag_path(parts[-1])
    if deepest:
        return deepest
    return tuple(canonical_name(p) for p in parts)


def node_order(name: str) -> tuple[int, str]:
    """Deterministic sort key: taxonomy order first, unknown names last."""
    idx = _ORDER_BY_NAME.get(name)
    if idx is None:
        return (1_000_000, name)
    return (idx, name)


def is_dimension(name: str) -> bool:
    return name in DIMENSIONS
