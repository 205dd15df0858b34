#!/usr/bin/env python3
"""Runs the console examples of a Markdown file and compares their output.

Inside ```console blocks, a line starting with "$ " is a command; the lines
after it, up to the next command, are its expected stdout. A line "..."
matches any number of lines, "..." inside a line matches any text, and a
final "# exit N" line gives the expected exit status (default 0). Blocks run
in order in one scratch directory.
"""

import argparse
import os
import re
import subprocess
import sys
import tempfile


def examples(markdown):
    in_block = False
    current = None
    for number, line in enumerate(markdown.splitlines(), 1):
        if line.startswith("```"):
            if in_block and current:
                yield current
                current = None
            in_block = not in_block and line.strip() == "```console"
            continue
        if not in_block:
            continue
        if line.startswith("$ "):
            if current:
                yield current
            current = {"line": number, "command": line[2:], "expected": [], "exit": 0}
        elif current is not None:
            m = re.fullmatch(r"# exit (\d+)", line.strip())
            if m:
                current["exit"] = int(m.group(1))
            else:
                current["expected"].append(line)


def line_pattern(expected):
    return re.compile(".*".join(re.escape(part) for part in expected.split("...")) + r"\Z")


def matches(expected, actual):
    if not expected:
        return not actual
    head, rest = expected[0], expected[1:]
    if head == "...":
        return any(matches(rest, actual[i:]) for i in range(len(actual) + 1))
    return bool(actual) and bool(line_pattern(head).match(actual[0])) and matches(rest, actual[1:])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("markdown")
    parser.add_argument("--bin", required=True, help="directory holding the adore binary")
    parser.add_argument("--fixtures", required=True)
    args = parser.parse_args()

    with open(args.markdown, encoding="utf-8") as f:
        cases = list(examples(f.read()))
    env = dict(os.environ)
    env["PATH"] = os.path.abspath(args.bin) + os.pathsep + env.get("PATH", "")
    env["FIXTURES"] = os.path.abspath(args.fixtures)

    failures = 0
    with tempfile.TemporaryDirectory() as scratch:
        for case in cases:
            proc = subprocess.run(["bash", "-c", case["command"]], cwd=scratch, env=env,
                                  stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                                  text=True, timeout=120)
            actual = proc.stdout.splitlines()
            ok = proc.returncode == case["exit"] and matches(case["expected"], actual)
            print(("ok   " if ok else "FAIL ") + f"line {case['line']}: {case['command']}")
            if not ok:
                failures += 1
                print(f"  exit {proc.returncode}, expected {case['exit']}")
                print("  stdout:\n" + "\n".join("    " + l for l in actual))
                if proc.stderr:
                    print("  stderr:\n" + "\n".join("    " + l for l in proc.stderr.splitlines()))
    print(f"{len(cases) - failures}/{len(cases)} examples passed")
    return 1 if failures or not cases else 0


if __name__ == "__main__":
    sys.exit(main())
