"""What happens to extraction programs that misbehave.

Evaluator-written programs run in a separate interpreter with no file,
network or environment access, a memory rlimit and a wall-clock budget.
Each failure mode maps to a stable error kind, which the extraction
pipeline uses to decide whether to repair the program or move on.
"""

from meeseeks import SandboxExecutionError, SandboxPolicy, execute_extraction_program

RESPONSE = "1. spring breeze\n2. summer rain\n3. autumn moon"

good = """
import re
def extract_info_list(model_response):
    return [m.group(1) for m in re.finditer(r"\\d+\\. (.+)", model_response)]
"""

print("well-behaved program:", execute_extraction_program(good, RESPONSE))
print()

# A fast budget is plenty for these; the default is 10 s / 512 MiB.
policy = SandboxPolicy(timeout_seconds=2.0, memory_bytes=256 * 1024 * 1024)

hostile = {
    "spins forever": "def extract_info_list(r):\n    while True: pass",
    "reads a file": "def extract_info_list(r):\n    return [open('/etc/hostname').read()]",
    "dials out": "import socket\ndef extract_info_list(r):\n    return []",
    "peeks at env": "import os\ndef extract_info_list(r):\n    return [os.environ['HOME']]",
    "eats memory": "def extract_info_list(r):\n    return ['x' * (1 << 30)] * 8",
    "wrong type": "def extract_info_list(r):\n    return 42",
    "crashes": "def extract_info_list(r):\n    return [r[999999]]",
    "won't compile": "def extract_info_list(r)\n    return []",
}

for label, source in hostile.items():
    try:
        execute_extraction_program(source, RESPONSE, policy)
        print(f"{label:<14} -> returned normally?!")
    except SandboxExecutionError as err:
        print(f"{label:<14} -> {err}")
