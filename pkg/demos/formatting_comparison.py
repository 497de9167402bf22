"""Compare the two extraction strategies on their labeled corpora.

Two synthetic corpora stress the formatting stage: 1002 long single-part
responses wrapped in [CONTINUATION] markers (where a tiny generated
program shines) and 100 multi-element numbered lists (where asking the
evaluator to copy the lines verbatim is enough).  Every item carries a
ground-truth label, so running the real pipeline over them measures how
often the verdict survives the formatting step intact.
"""

import json
import re

from meeseeks import (
    ChatReply,
    CorpusScenario,
    Endpoint,
    estimate_tokens,
    generate_formatting_corpus,
    run_formatting_comparison,
)

PROGRAM = '''```python
import re

def extract_info_list(model_response):
    m = re.search(r"\\[CONTINUATION\\]\\n(.*?)\\n\\[END\\]", model_response, flags=re.DOTALL)
    return [m.group(1)] if m else [model_response]
```'''


def copy_numbered_lines(prompt: str) -> str:
    # Only the section after the final ---your turn--- marker is the real
    # input; the instructions above it contain numbered worked examples.
    tail = prompt.rsplit("---your turn---", 1)[1]
    body = tail.split("[Model Response]", 1)[1].split("[Extraction Target]", 1)[0]
    items = re.findall(r"^\d+[.、]\s*(.+)$", body, flags=re.MULTILINE)
    return json.dumps(items, ensure_ascii=False)


class FormatterStub:
    """Answers coding prompts with PROGRAM, copy prompts by copying."""

    def chat(self, endpoint, messages):
        prompt = messages[-1]["content"]
        if "Python data processing expert" in prompt:
            text = PROGRAM
        elif "information extraction expert" in prompt:
            text = copy_numbered_lines(prompt)
        else:
            raise RuntimeError(f"unexpected prompt: {prompt[:60]}")
        n = estimate_tokens(text, endpoint)
        return ChatReply(text=text, prompt_tokens=80, completion_tokens=n,
                         total_tokens=80 + n, latency_ms=3.0)


roles = dict(
    coder=Endpoint(name="coder", model="stub"),
    regenerator=Endpoint(name="regen", model="stub"),
)

for scenario, limit in ((CorpusScenario.LONG_SINGLE, 40), (CorpusScenario.MULTI_ELEMENT, 40)):
    items = generate_formatting_corpus(scenario)
    report = run_formatting_comparison(items, FormatterStub(), limit=limit, **roles)
    print(f"{scenario.value}: {len(items)} items, scoring the first {report.total}")
    print(f"  accuracy   {report.accuracy:.3f}  ({report.correct}/{report.total})")
    print(f"  confusion  {report.confusion()}")
    print(f"  strategies {report.strategy_counts()}")
    print(f"  evaluator tokens spent: {report.token_cost}")
    print()
