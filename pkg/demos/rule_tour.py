"""A tour of the deterministic rule checkers.

Rule labels are tiny strings like ``each_length:[8,12]`` attached to a
requirement.  Parsing one gives a RuleSpec; checking it against a list of
extracted elements gives a verdict plus ready-made corrective feedback.
"""

from meeseeks import CountMode, check_rule, count_units, parse_rule
from meeseeks.rules import ElementCheck, RuleVerdict, register_rule_plugin

comments = [
    "蝉鸣声里夏意正浓",
    "西瓜甜透整个午后",
    "夏日清晨微风拂面带来一丝难得的清凉惬意",  # 19 chars, too long
    "西瓜甜透整个午后",  # duplicate of #2
]

for label in ("item_count:[5,5]", "each_length:[8,12]", "non_repeat"):
    spec = parse_rule(label)
    verdict = check_rule(spec, comments, CountMode.CHINESE_CHARS, "chinese")
    print(f"{label:<22} passed={verdict.passed}")
    if not verdict.passed:
        print(f"    {verdict.feedback}")

# Length counting is language-aware: ideographs for Chinese, whitespace
# tokens containing a Latin letter for English.
print()
print("count_units('夏日清晨微风正清凉', CHINESE_CHARS) =",
      count_units("夏日清晨微风正清凉", CountMode.CHINESE_CHARS))
print("count_units('a quiet shore - 2026', ENGLISH_WORDS) =",
      count_units("a quiet shore - 2026", CountMode.ENGLISH_WORDS))

# keywords / word_freq / json_format run on whatever elements you hand them;
# checking the whole response just means passing a one-element list.
reply = '{"title": "Autumn Pages", "blurb": "community reading, community snacks"}'
for label in ('keywords:["reading","snacks"]', 'word_freq:["community",2,1000]', "json_format"):
    verdict = check_rule(parse_rule(label), [reply], CountMode.ENGLISH_WORDS)
    print(f"{label:<34} passed={verdict.passed}")

# Out-of-grammar names can be registered as plugins.  A checker receives
# (args, elements, mode, language) and returns a RuleVerdict.


def vowel_start(args, elements, mode, language):
    checks = tuple(
        ElementCheck(i, el[:1], bool(el) and el[0].lower() in "aeiou")
        for i, el in enumerate(elements)
    )
    bad = [str(c.index) for c in checks if not c.passed]
    feedback = "" if not bad else f"elements {', '.join(bad)} do not start with a vowel"
    return RuleVerdict(all(c.passed for c in checks), checks, feedback)


register_rule_plugin("vowel_start", vowel_start)
verdict = check_rule(parse_rule("vowel_start"), ["Otter", "Eel", "Pike"], CountMode.ENGLISH_WORDS)
print()
print(f"vowel_start plugin: passed={verdict.passed} — {verdict.feedback}")
