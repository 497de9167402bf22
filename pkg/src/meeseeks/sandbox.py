"""Isolated execution of evaluator-written extraction programs.

The judging pipeline asks an LLM to write a small Python function
``extract_info_list(model_response)`` that pulls the part under test out
of a free-form response.  That code is model output and gets none of our
trust: it runs in a separate interpreter process with

* a restricted builtin table (no ``open``/``eval``/``exec``/...),
* imports limited to ``re`` (the only module the prompt dialect uses),
* an address-space cap and a CPU cap via ``resource`` rlimits,
* file-size rlimit 0, so even an escaped write cannot land on disk,
* stdout redirected to ``/dev/null`` — results travel over a private
  duplicated descriptor, so a print-happy program cannot corrupt them,
* a wall-clock kill from the parent.

Failures are reported as distinct :class:`SandboxErrorKind` values
because the extraction fallback chain treats them differently (a compile
error is worth a repair round; a policy violation usually is not).
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from enum import Enum


class SandboxErrorKind(str, Enum):
    COMPILE_ERROR = "compile_error"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    WRONG_RETURN_TYPE = "wrong_return_type"
    POLICY_VIOLATION = "policy_violation"
    RESOURCE_EXCEEDED = "resource_exceeded"


class SandboxExecutionError(Exception):
    def __init__(self, kind: SandboxErrorKind, message: str):
        super().__init__(message)
        self.kind = kind

    def __str__(self) -> str:
        return f"[{self.kind.value}] {super().__str__()}"


@dataclass(frozen=True)
class SandboxPolicy:
    timeout_seconds: float = 10.0  # wall-clock budget, enforced by the parent
    memory_bytes: int = 512 * 1024 * 1024  # address-space rlimit in the child
    max_output_bytes: int = 50 * 1024 * 1024  # serialized result size cap


# The child program: reads {source, response, memory_bytes, max_output_bytes}
# as JSON on stdin, writes a single JSON result line to a duplicate of the
# original stdout, and exits.  Kept dependency-free and ASCII-only.
_RUNNER_SOURCE = r"""
import json, os, re, resource, sys, traceback

data = json.load(sys.stdin)

out = os.fdopen(os.dup(1), "w")
devnull = os.open(os.devnull, os.O_WRONLY)
os.dup2(devnull, 1)

def report(obj):
    out.write(json.dumps(obj))
    out.flush()
    os._exit(0)

def fail(kind, message):
    report({"status": "error", "kind": kind, "message": message})

try:
    mem = int(data["memory_bytes"])
    resource.setrlimit(resource.RLIMIT_AS, (mem, mem))
    cpu = max(1, int(data.get("cpu_seconds", 10)))
    resource.setrlimit(resource.RLIMIT_CPU, (cpu, cpu + 1))
    resource.setrlimit(resource.RLIMIT_FSIZE, (0, 0))
except (ValueError, OSError) as exc:
    fail("runtime_error", "sandbox setup failed: %s" % exc)


class PolicyViolation(Exception):
    pass


def _blocked(name):
    def stub(*args, **kwargs):
        raise PolicyViolation("%s() is not allowed in the extraction sandbox" % name)
    stub.__name__ = name
    return stub


def _guarded_import(name, *args, **kwargs):
    if name == "re":
        return re
    raise PolicyViolation("import of %r is not allowed (only 're' is available)" % name)


_SAFE_NAMES = [
    "abs", "all", "any", "bool", "bytes", "callable", "chr", "dict", "divmod",
    "enumerate", "filter", "float", "format", "frozenset", "getattr", "hasattr",
    "hash", "hex", "int", "isinstance", "issubclass", "iter", "len", "list",
    "map", "max", "min", "next", "oct", "ord", "pow", "print", "range", "repr",
    "reversed", "round", "set", "slice", "sorted", "str", "sum", "tuple", "type",
    "zip", "object", "__build_class__",
    "BaseException", "Exception", "ArithmeticError", "AttributeError",
    "IndexError", "KeyError", "LookupError", "MemoryError", "NameError",
    "RecursionError", "RuntimeError", "StopIteration", "TypeError",
    "ValueError", "ZeroDivisionError",
]

import builtins as _b
safe_builtins = {name: getattr(_b, name) for name in _SAFE_NAMES}
safe_builtins["__import__"] = _guarded_import
for name in ("open", "input", "eval", "exec", "compile", "globals", "locals",
             "vars", "dir", "setattr", "delattr", "breakpoint", "exit", "quit",
             "help", "memoryview"):
    safe_builtins[name] = _blocked(name)
safe_builtins["PolicyViolation"] = PolicyViolation

prog_globals = {"__builtins__": safe_builtins, "__name__": "extraction_program", "re": re}

try:
    code = compile(data["source"], "<extraction_program>", "exec")
except SyntaxError as exc:
    fail("compile_error", "SyntaxError: %s (line %s)" % (exc.msg, exc.lineno))

def _classified(exc):
    if isinstance(exc, PolicyViolation):
        return "policy_violation", str(exc)
    if isinstance(exc, MemoryError):
        return "resource_exceeded", "program exceeded the sandbox memory limit"
    tb = traceback.format_exception_only(type(exc), exc)
    return "runtime_error", tb[-1].strip() if tb else repr(exc)

try:
    exec(code, prog_globals)
except BaseException as exc:
    fail(*_classified(exc))

fn = prog_globals.get("extract_info_list")
if not callable(fn):
    fail("compile_error", "the program must define extract_info_list(model_response)")

try:
    result = fn(data["response"])
except BaseException as exc:
    fail(*_classified(exc))

if not isinstance(result, list):
    fail("wrong_return_type",
         "extract_info_list returned %s, expected a list of strings"
         % type(result).__name__)
bad = [type(el).__name__ for el in result if not isinstance(el, str)]
if bad:
    fail("wrong_return_type",
         "extract_info_list returned a list containing %s, expected only strings"
         % ", ".join(sorted(set(bad))))

# Size the result element by element before serializing: encoding a
# too-large list into one JSON string would blow the memory limit first
# and die unclassified.
cap = int(data["max_output_bytes"])
total = 0
for el in result:
    total += len(el.encode("utf-8", "surrogatepass"))
    if total > cap:
        fail("resource_exceeded", "extraction result exceeds the output size cap")

try:
    payload = json.dumps({"status": "ok", "elements": result})
except MemoryError:
    fail("resource_exceeded", "program exceeded the sandbox memory limit")
if len(payload) > cap:
    fail("resource_exceeded", "extraction result exceeds the output size cap")
out.write(payload)
out.flush()
os._exit(0)
"""

_SIGNAL_KINDS = {
    -9: (SandboxErrorKind.RESOURCE_EXCEEDED, "killed (out of memory or forced stop)"),
    -24: (SandboxErrorKind.TIMEOUT, "CPU time limit exhausted"),
    -25: (SandboxErrorKind.POLICY_VIOLATION, "attempted to write a file"),
}


def execute_extraction_program(
    source: str,
    response: str,
    policy: SandboxPolicy = SandboxPolicy(),
) -> list[str]:
    """Run ``extract_info_list`` from ``source`` against ``response``.

    Returns the extracted element list on success; raises
    :class:`SandboxExecutionError` with a specific kind otherwise.
    """
    request = json.dumps(
        {
            "source": source,
            "response": response,
            "memory_bytes": policy.memory_bytes,
            "cpu_seconds": int(policy.timeout_seconds) or 1,
            "max_output_bytes": policy.max_output_bytes,
        }
    )
    with tempfile.TemporaryDirectory(prefix="meeseeks-sbx-") as scratch:
        proc = subprocess.Popen(
            [sys.executable, "-I", "-S", "-c", _RUNNER_SOURCE],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            cwd=scratch,
            env={"PATH": "/usr/bin:/bin"},
            text=True,
        )
        try:
            stdout, stderr = proc.communicate(request, timeout=policy.timeout_seconds)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.communicate()
            raise SandboxExecutionError(
                SandboxErrorKind.TIMEOUT,
                f"extraction program exceeded the {policy.timeout_seconds:g}s budget",
            ) from None

    try:
        result = json.loads(stdout)
    except json.JSONDecodeError:
        result = None
    if not isinstance(result, dict) or "status" not in result:
        if proc.returncode in _SIGNAL_KINDS:
            kind, note = _SIGNAL_KINDS[proc.returncode]
            raise SandboxExecutionError(kind, f"extraction program {note}")
        tail = (stderr or "").strip().splitlines()[-3:]
        raise SandboxExecutionError(
            SandboxErrorKind.RUNTIME_ERROR,
            "sandbox produced no result (exit %s): %s"
            % (proc.returncode, " | ".join(tail) or "no diagnostics"),
        )

    if result["status"] == "ok":
        elements = result.get("elements")
        if isinstance(elements, list) and all(isinstance(e, str) for e in elements):
            return elements
        raise SandboxExecutionError(
            SandboxErrorKind.WRONG_RETURN_TYPE, "sandbox returned a malformed element list"
        )

    kind_raw = result.get("kind", "runtime_error")
    try:
        kind = SandboxErrorKind(kind_raw)
    except ValueError:
        kind = SandboxErrorKind.RUNTIME_ERROR
    raise SandboxExecutionError(kind, str(result.get("message", "unknown sandbox error")))
