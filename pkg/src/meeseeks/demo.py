"""A self-contained demonstration world.

Six small instances, a scripted target/evaluator/coder trio, and the
tooling to record their traffic into replay fixtures.  Everything here is
deterministic, so the full multi-turn loop — extraction, sandboxed
programs, rule checks, model judging, dependency propagation, feedback,
freeze-on-pass, context overflow — can run end to end with zero network
access and byte-identical results.

The six sessions are chosen to end differently on purpose:

========================  =================================================
demo-zh-comments          regenerate extraction + three rules; passes on turn 2
demo-en-title             coding extraction through the sandbox; passes on turn 1
demo-zh-names             rule never satisfied; exhausts the 3-turn budget
demo-zh-overflow          long request/replies; context overflow before turn 3
demo-en-json              whole-response structure rules; passes on turn 2
demo-zh-deps              judge fails the root requirement on turn 1, dependants
                          flip by propagation; passes on turn 2
========================  =================================================
"""

from __future__ import annotations

import shutil
from importlib import resources
from pathlib import Path
from typing import Sequence

import yaml

from .dataset import DataInstance, dump_dataset, parse_dataset
from .gateway import (
    ChatGateway,
    ChatReply,
    Endpoint,
    Message,
    ReplayGateway,
    ReplayMode,
    ReplayStore,
    RequestError,
    estimate_message_tokens,
    estimate_tokens,
)
from .orchestrator import RunConfig, RunResult, SessionStatus, run_benchmark

DEMO_MAX_TURNS = 3

# (status, passing turn) each demo session must reach; build_replay_fixtures
# refuses to record fixtures that do not reproduce this exactly.
EXPECTED_OUTCOMES: dict[str, tuple[SessionStatus, int | None]] = {
    "demo-zh-comments": (SessionStatus.PASSED, 2),
    "demo-en-title": (SessionStatus.PASSED, 1),
    "demo-zh-names": (SessionStatus.EXHAUSTED, None),
    "demo-zh-overflow": (SessionStatus.CONTEXT_OVERFLOW, None),
    "demo-en-json": (SessionStatus.PASSED, 2),
    "demo-zh-deps": (SessionStatus.PASSED, 2),
}


def demo_endpoints() -> tuple[Endpoint, Endpoint, Endpoint]:
    """The (target, evaluator, coder) endpoints every demo asset refers to.

    The target's context budget is squeezed to 600 tokens so one of the
    sessions genuinely overflows inside a three-turn demo.
    """
    target = Endpoint(name="demo-target", model="demo-target-model", max_context_tokens=600)
    evaluator = Endpoint(name="demo-evaluator", model="demo-evaluator-model")
    coder = Endpoint(name="demo-coder", model="demo-coder-model")
    return target, evaluator, coder


# ---------------------------------------------------------------------------
# The dataset
# ---------------------------------------------------------------------------

_COMMENTS_T1 = [
    "夏日清晨微风拂面带来一丝难得的清凉惬意",  # 19 chars: violates each_length
    "蝉鸣声里夏意正浓",
    "西瓜甜透整个午后",
    "傍晚雷雨来去匆匆",
    "夜市烟火气息动人",
]
_COMMENTS_T2 = ["夏日清晨微风正清凉"] + _COMMENTS_T1[1:]

_NAMES_BY_TURN = [
    ["面香居", "一碗鲜", "麦穗"],
    ["面缘", "香稻府", "麦香"],
    ["面缘", "稻香居", "麦香"],
]

_DEPS_COPY_T1 = (
    "清晨的第一杯咖啡带着焦糖香气，办公室的键盘声也变得温柔起来，"
    "愿你今天元气满满，有咖啡相伴就不孤单，咖啡在手暖意常在。"
)
_DEPS_COPY_T2 = (
    "秋风起时捧起秋天的第一杯奶茶，暖意顺着指尖蔓延到心底，"
    "甜甜的珍珠提醒我把温柔留给自己，也分享给身边的你。"
)

_OVERFLOW_OPENINGS = [
    "水乡古镇欢迎每一位远客。",
    "换一个角度再看这座古镇。",
    "这一次从夜色说起古镇。",
]
_OVERFLOW_BODY = (
    "清晨的古镇在薄雾中醒来，石板路泛着微光，摇橹船轻轻划开平静的水面。"
    "粉墙黛瓦倒映在河水里，枕河人家的窗台上晾着刚洗好的蓝印花布。"
    "沿河的早点铺子飘出豆浆与蟹壳黄的香气，唤醒了赶早市的行人。"
    "入夜后灯笼次第亮起，夜市的吆喝声与评弹声在巷口轻轻交织。"
    "游客可以沿着河岸慢慢走，在桥头听一段旧事，再尝一碗桂花糖芋。"
    "小住几日，把时间调慢，古镇自会把它的故事讲给你听。"
)


def _demo_items() -> list[dict]:
    return [
        {
            "id": "demo-zh-comments",
            "category": "demo",
            "language": "chinese",
            "question": "请写出5条关于夏天的短评，每条10字左右（8到12个汉字），内容互不重复，每行一条。",
            "corresponding_parts": {
                "短评": '请按照python list的格式，提取模型回复中的5条短评，'
                       '例如["第一条", "第二条"]，只提取短评内容，不要提取序号。'
            },
            "sub_questions": [
                {
                    "point_id": 0,
                    "question": "是否给出了5条短评？",
                    "rule": "item_count:[5,5]",
                    "corresponding_part": "短评",
                    "被依赖": True,
                    "能力项": "单元数量合规",
                },
                {
                    "point_id": 1,
                    "question": "每条短评是否为8到12个汉字？",
                    "rule": "each_length:[8,12]",
                    "dep": [0],
                    "corresponding_part": "短评",
                    "能力项": "10~50字、范围",
                },
                {
                    "point_id": 2,
                    "question": "5条短评是否互不重复？",
                    "rule": "non_repeat",
                    "dep": [0],
                    "corresponding_part": "短评",
                    "能力项": "重复",
                },
            ],
        },
        {
            "id": "demo-en-title",
            "category": "demo",
            "language": "english",
            "coding_flag": True,
            "question": (
                "Please propose a title for my lakeside travel journal. "
                "Reply with only the title, on a single line, between 4 and 8 words."
            ),
            "corresponding_parts": {
                "title": (
                    "Please extract the title line from the model response, in "
                    'python list format, for example ["A Quiet Shore"].'
                )
            },
            "sub_questions": [
                {
                    "point_id": 0,
                    "question": "Is the reply a single line containing only a title, with no extra commentary?",
                    "rule": None,
                    "能力项": "生成名字/标题",
                },
                {
                    "point_id": 1,
                    "question": "Is the title between 4 and 8 words long?",
                    "rule": "each_length:[4,8]",
                    "corresponding_part": "title",
                    "能力项": "范围",
                },
            ],
        },
        {
            "id": "demo-zh-names",
            "category": "demo",
            "language": "chinese",
            "question": "请为新开的面馆起3个名字，每个名字必须恰好2个字，用顿号分隔。",
            "corresponding_parts": {
                "名字": '请按照python list的格式，提取模型回复中给出的名字，'
                       '例如["名一", "名二"]，只提取名字本身。'
            },
            "sub_questions": [
                {
                    "point_id": 0,
                    "question": "是否给出了3个名字？",
                    "rule": "item_count:[3,3]",
                    "corresponding_part": "名字",
                    "被依赖": True,
                    "能力项": "单元数量合规",
                },
                {
                    "point_id": 1,
                    "question": "每个名字是否恰好2个字？",
                    "rule": "each_length:[2,2]",
                    "dep": [0],
                    "corresponding_part": "名字",
                    "能力项": "精确、0~10字",
                },
            ],
        },
        {
            "id": "demo-zh-overflow",
            "category": "demo",
            "language": "chinese",
            "question": (
                "请为一座历史悠久的江南水乡古镇撰写一段对外宣传文案，介绍小桥流水、"
                "粉墙黛瓦、摇橹船与沿河夜市等景致，描绘古镇清晨与夜晚的不同韵味，"
                "吸引游客前来小住几日。要求文案在二百四十到三百个汉字之间，"
                "只输出文案本身，不要添加任何说明。"
            ),
            "corresponding_parts": {
                "文案": "请提取模型回复中的宣传文案。若整条回复都是文案，输出ALL。"
            },
            "sub_questions": [
                {
                    "point_id": 0,
                    "question": "文案字数是否在240到300个汉字之间？",
                    "rule": "each_length:[240,300]",
                    "corresponding_part": "文案",
                    "能力项": "200字以上、范围",
                }
            ],
        },
        {
            "id": "demo-en-json",
            "category": "demo",
            "language": "english",
            "question": (
                "Describe our book club's next event as a JSON object with the keys "
                '"title", "date" and "blurb". The blurb must mention the word '
                "community at least twice and include the words reading and snacks."
            ),
            "corresponding_parts": {},
            "sub_questions": [
                {
                    "point_id": 0,
                    "question": "Is the reply a valid JSON object?",
                    "rule": "json_format",
                    "能力项": "JSON格式",
                },
                {
                    "point_id": 1,
                    "question": "Does the reply include the words reading and snacks?",
                    "rule": 'keywords:["reading","snacks"]',
                    "能力项": "关键词",
                },
                {
                    "point_id": 2,
                    "question": "Does the reply mention the word community at least twice?",
                    "rule": 'word_freq:["community",2,1000]',
                    "能力项": "词频",
                },
            ],
        },
        {
            "id": "demo-zh-deps",
            "category": "demo",
            "language": "chinese",
            "question": (
                "请以《秋天的第一杯奶茶》为主题写一段50字左右的朋友圈文案"
                "（45到55个汉字），并在文案之后另起一行添加一个以#开头的话题标签。"
            ),
            "corresponding_parts": {
                "文案": '请按照python list的格式提取模型回复中的朋友圈文案部分'
                       '（不含话题标签行），例如["文案内容"]。'
            },
            "sub_questions": [
                {
                    "point_id": 0,
                    "question": "文案是否围绕《秋天的第一杯奶茶》主题展开？",
                    "rule": None,
                    "被依赖": True,
                    "能力项": "主题约束",
                },
                {
                    "point_id": 1,
                    "question": "文案是否为45到55个汉字？",
                    "rule": "each_length:[45,55]",
                    "dep": [0],
                    "corresponding_part": "文案",
                    "能力项": "50~200字、范围",
                },
                {
                    "point_id": 2,
                    "question": "是否在文案之后另起一行给出了以#开头的话题标签？",
                    "rule": None,
                    "dep": [0],
                    "能力项": "特定格式",
                },
            ],
        },
    ]


def demo_dataset() -> list[DataInstance]:
    return parse_dataset(_demo_items())


# ---------------------------------------------------------------------------
# The scripted models
# ---------------------------------------------------------------------------

_CODER_PROGRAM = '''```python
def extract_info_list(model_response):
    lines = [line.strip() for line in model_response.splitlines() if line.strip()]
    return [lines[0]] if lines else []
```'''


def _numbered(items: Sequence[str]) -> str:
    return "\n".join(f"{i + 1}. {item}" for i, item in enumerate(items))


def _py_list(items: Sequence[str]) -> str:
    return "[" + ", ".join(f'"{item}"' for item in items) + "]"


def _judgment(passed: bool, analysis: str) -> str:
    word = "Yes" if passed else "No"
    mark = "CORRECT" if passed else "WRONG"
    return f"Analysis: {mark} {analysis}\nJudgment: {word}"


class ScriptedGateway(ChatGateway):
    """Deterministic stand-in for all three demo endpoints.

    The target replies depend only on the opening question and the turn
    number, the formatter/judge replies only on the prompt text, so
    replies are a pure function of the request — exactly the property
    record/replay relies on.
    """

    LATENCY_MS = 12.0

    def chat(self, endpoint: Endpoint, messages: Sequence[Message]) -> ChatReply:
        if endpoint.name == "demo-target":
            text = self._target(messages)
        elif endpoint.name == "demo-coder":
            text = _CODER_PROGRAM
        elif endpoint.name == "demo-evaluator":
            text = self._evaluator(messages[-1]["content"])
        else:
            raise RequestError(f"scripted gateway knows no endpoint {endpoint.name!r}")
        prompt_tokens = estimate_message_tokens(messages, endpoint)
        completion_tokens = estimate_tokens(text, endpoint)
        return ChatReply(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            total_tokens=prompt_tokens + completion_tokens,
            latency_ms=self.LATENCY_MS,
        )

    # -- target ------------------------------------------------------------

    def _target(self, messages: Sequence[Message]) -> str:
        question = messages[0]["content"]
        turn = (len(messages) + 1) // 2
        if "夏天的短评" in question:
            comments = _COMMENTS_T1 if turn == 1 else _COMMENTS_T2
            return "好的，这就为您写5条：\n" + _numbered(comments)
        if "lakeside travel journal" in question:
            return "Stillwater Mornings: A Lakeside Journal"
        if "面馆" in question:
            names = _NAMES_BY_TURN[min(turn, len(_NAMES_BY_TURN)) - 1]
            return "好的：" + "、".join(names)
        if "水乡古镇" in question:
            opening = _OVERFLOW_OPENINGS[min(turn, len(_OVERFLOW_OPENINGS)) - 1]
            return opening + _OVERFLOW_BODY
        if "book club" in question:
            if turn == 1:
                blurb = "Join our community for an evening of reading, warm snacks and conversation."
            else:
                blurb = (
                    "Join our community for an evening of reading, warm snacks and "
                    "conversation — this community grows one book at a time."
                )
            return (
                '```json\n{"title": "Autumn Pages", "date": "2026-09-12", '
                f'"blurb": "{blurb}"}}\n```'
            )
        if "秋天的第一杯奶茶" in question:
            if turn == 1:
                return _DEPS_COPY_T1 + "\n#秋日咖啡时光"
            return _DEPS_COPY_T2 + "\n#秋天的第一杯奶茶"
        raise RequestError(f"scripted target has no reply for question {question[:40]!r}")

    # -- formatters and judge ----------------------------------------------

    def _evaluator(self, prompt: str) -> str:
        if "information extraction expert" in prompt:
            return self._regenerate(prompt)
        return self._judge(prompt)

    def _regenerate(self, prompt: str) -> str:
        if "夏日清晨微风拂面" in prompt:
            return _py_list(_COMMENTS_T1)
        if "夏日清晨微风正清凉" in prompt:
            return _py_list(_COMMENTS_T2)
        if "香稻府" in prompt:
            return _py_list(_NAMES_BY_TURN[1])
        if "稻香居" in prompt:
            return _py_list(_NAMES_BY_TURN[2])
        if "面香居" in prompt:
            return _py_list(_NAMES_BY_TURN[0])
        if "水乡古镇" in prompt:
            return "ALL"
        if "咖啡" in prompt:
            return _py_list([_DEPS_COPY_T1])
        if "奶茶" in prompt:
            return _py_list([_DEPS_COPY_T2])
        raise RequestError(f"scripted regenerator has no reply for prompt {prompt[:40]!r}")

    def _judge(self, prompt: str) -> str:
        if "only a title" in prompt:
            return _judgment(True, "The reply is a single line containing only a plausible journal title.")
        if "主题展开" in prompt:
            if "咖啡" in prompt:
                return _judgment(False, "The copy is about coffee, not the requested milk-tea theme.")
            return _judgment(True, "The copy clearly centres on the requested milk-tea theme.")
        if "另起一行" in prompt:
            return _judgment(True, "A #-prefixed hashtag follows the copy on its own line.")
        raise RequestError(f"scripted judge has no reply for prompt {prompt[:40]!r}")


# ---------------------------------------------------------------------------
# Running and recording
# ---------------------------------------------------------------------------


def demo_run_config(output_dir: str | Path | None = None, **overrides) -> RunConfig:
    _, evaluator, coder = demo_endpoints()
    settings = dict(
        evaluator=evaluator,
        coder=coder,
        max_turns=DEMO_MAX_TURNS,
        # Sequential on purpose: transcripts.jsonl comes out in one fixed
        # order, so a replayed run is comparable byte for byte.
        concurrency=1,
        output_dir=Path(output_dir) if output_dir is not None else None,
    )
    settings.update(overrides)
    return RunConfig(**settings)


def run_demo(gateway: ChatGateway, output_dir: str | Path | None = None) -> RunResult:
    target, _, _ = demo_endpoints()
    return run_benchmark(demo_dataset(), target, gateway, demo_run_config(output_dir))


def check_outcomes(result: RunResult) -> None:
    """Raise if a demo run strayed from the scripted outcomes."""
    transcripts = result.for_endpoint("demo-target")
    for instance_id, (status, passed_turn) in EXPECTED_OUTCOMES.items():
        t = transcripts.get(instance_id)
        if t is None:
            raise AssertionError(f"no transcript for {instance_id}")
        if t.status is not status or t.passed_turn != passed_turn:
            raise AssertionError(
                f"{instance_id}: expected {status.value}@{passed_turn}, "
                f"got {t.status.value}@{t.passed_turn} ({t.error or 'no error'})"
            )


def build_replay_fixtures(replay_dir: str | Path, output_dir: str | Path | None = None) -> RunResult:
    """Record the demo run's full traffic into ``replay_dir``.

    The recorded outcomes are checked against :data:`EXPECTED_OUTCOMES`
    before returning, so a drifted script cannot silently produce broken
    fixtures.
    """
    gateway = ReplayGateway(ReplayStore(replay_dir), ReplayMode.RECORD, inner=ScriptedGateway())
    result = run_demo(gateway, output_dir)
    check_outcomes(result)
    return result


def bundled_demo_dir() -> Path:
    """Directory holding the shipped demo assets (dataset, config, replay)."""
    return Path(str(resources.files("meeseeks") / "fixtures" / "demo"))


def write_demo_assets(dest: str | Path) -> Path:
    """Write dataset.json, config.yaml and recorded replay/ under ``dest``.

    This regenerates exactly what the package ships under
    ``fixtures/demo`` and is exposed as ``meeseeks fixtures``.
    """
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    dump_dataset(demo_dataset(), dest / "dataset.json")

    target, evaluator, coder = demo_endpoints()
    config = {
        "dataset": "dataset.json",
        "targets": [
            {
                "name": target.name,
                "model": target.model,
                "max_context_tokens": target.max_context_tokens,
            }
        ],
        "evaluator": {"name": evaluator.name, "model": evaluator.model},
        "coder": {"name": coder.name, "model": coder.model},
        "run": {"max_turns": DEMO_MAX_TURNS, "concurrency": 1},
        "replay": {"mode": "replay_strict", "dir": "replay"},
    }
    (dest / "config.yaml").write_text(
        yaml.safe_dump(config, allow_unicode=True, sort_keys=False), encoding="utf-8"
    )

    replay = dest / "replay"
    if replay.exists():
        shutil.rmtree(replay)
    build_replay_fixtures(replay)
    return dest
