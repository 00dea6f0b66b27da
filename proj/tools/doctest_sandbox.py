#!/usr/bin/env python3
"""Runs one submission's doctests in a throwaway process.

stdin:  {"code": str, "doctests": [{"input": str, "expected": str}],
         "timeout_s": float, "memory_mb": int}
stdout: {"status": "ok" | "compile_error",
         "per_test": [{"ok": bool, "got": str, "raised": str | null}],
         "stderr": str}

Exit status is 0 whenever a result was written, whatever the code did.
"""
import contextlib
import io
import json
import os
import resource
import signal
import sys
import traceback


class _Timeout(BaseException):
    pass


def _on_alarm(signum, frame):
    raise _Timeout()


def _limit_memory(megabytes):
    if megabytes and megabytes > 0:
        cap = int(megabytes) * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (cap, cap))


def _block_network():
    import socket

    def refuse(*args, **kwargs):
        raise OSError("network access is disabled in the sandbox")

    socket.socket = refuse
    socket.create_connection = refuse


def _run(source, mode, namespace, timeout_s):
    out = io.StringIO()
    signal.setitimer(signal.ITIMER_REAL, timeout_s)
    try:
        with contextlib.redirect_stdout(out):
            exec(compile(source, "<doctest>", mode), namespace)
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
    return out.getvalue()


def _matches(got, expected, raised, exc_line):
    want = expected.rstrip("\n")
    if want.startswith("Traceback (most recent call last):"):
        if raised is None:
            return False
        last = want.splitlines()[-1].strip()
        return last == exc_line or last.split(":")[0] == raised
    return raised is None and got.rstrip("\n") == want


def main():
    request = json.load(sys.stdin)
    # Keep a private handle on the real stdout and send fd 1 to stderr so
    # nothing the submission writes can corrupt the result document.
    result_out = os.fdopen(os.dup(1), "w")
    os.dup2(2, 1)
    timeout_s = float(request.get("timeout_s", 5))
    signal.signal(signal.SIGALRM, _on_alarm)
    _limit_memory(request.get("memory_mb", 0))
    _block_network()
    sys.setrecursionlimit(2000)

    result = {"status": "ok", "per_test": [], "stderr": ""}
    namespace = {"__name__": "__main__"}
    try:
        _run(request["code"], "exec", namespace, timeout_s)
    except _Timeout:
        result["status"] = "compile_error"
        result["stderr"] = "timeout while defining the submission"
    except BaseException:
        result["status"] = "compile_error"
        result["stderr"] = traceback.format_exc(limit=0)
    if result["status"] == "ok":
        for test in request["doctests"]:
            got, raised, exc_line = "", None, ""
            try:
                source = test["input"]
                if not source.endswith("\n"):
                    source += "\n"
                got = _run(source, "single", namespace, timeout_s)
            except _Timeout:
                raised = "Timeout"
            except BaseException as exc:
                raised = type(exc).__name__
                exc_line = traceback.format_exception_only(type(exc), exc)[-1].strip()
            ok = _matches(got, test["expected"], raised, exc_line)
            result["per_test"].append({"ok": ok, "got": got, "raised": raised})
    json.dump(result, result_out)
    result_out.flush()


if __name__ == "__main__":
    main()
