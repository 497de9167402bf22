"""Watch one instance travel the evaluate -> feedback -> retry loop.

The target below forgets a required keyword on its first try.  The rule
checkers notice, the harness folds the failures into one corrective
message, and the corrected second reply freezes the session as passed.
All requirements here are rule-labelled whole-response checks, so no
evaluator model is involved at all.
"""

from meeseeks import (
    ChatReply,
    Endpoint,
    RunConfig,
    parse_instance,
    run_instance_session,
)

instance = parse_instance(
    {
        "id": "park-notice",
        "category": "demo",
        "language": "english",
        "question": (
            "Draft a short notice for the opening of the riverside park. "
            "Mention the words picnic, fountain and fireworks, and say the "
            "word welcome at least twice."
        ),
        "corresponding_parts": {},
        "sub_questions": [
            {
                "point_id": 0,
                "question": "Does the notice mention picnic, fountain and fireworks?",
                "rule": 'keywords:["picnic","fountain","fireworks"]',
            },
            {
                "point_id": 1,
                "question": "Does the notice say welcome at least twice?",
                "rule": 'word_freq:["welcome",2,100]',
            },
        ],
    }
)

REPLIES = [
    "Welcome to the riverside park! Join us for a picnic by the new fountain.",
    "You are welcome any time, and welcome again: join us for a picnic by the "
    "new fountain and stay for the evening fireworks.",
]


class ScriptedTarget:
    def __init__(self):
        self.calls = 0

    def chat(self, endpoint, messages):
        text = REPLIES[min(self.calls, len(REPLIES) - 1)]
        self.calls += 1
        return ChatReply(text=text, prompt_tokens=40, completion_tokens=20,
                         total_tokens=60, latency_ms=5.0)


target = Endpoint(name="park-writer", model="scripted")
evaluator = Endpoint(name="unused-judge", model="scripted")
config = RunConfig(evaluator=evaluator, max_turns=5, concurrency=1)

transcript = run_instance_session(instance, target, ScriptedTarget(), config)

print(f"status: {transcript.status.value} on turn {transcript.passed_turn}\n")
for record in transcript.turns:
    print(f"turn {record.turn_index}  usable={record.usable}")
    print(f"  reply:    {record.response[:72]}...")
    for pid, judgment in sorted(record.judgments.items()):
        print(f"  sq{pid}: {'pass' if judgment.passed else 'FAIL'}  {judgment.feedback}")
    if record.feedback:
        print("  feedback sent back to the model:")
        for line in record.feedback.splitlines():
            print(f"    | {line}")
    print()
