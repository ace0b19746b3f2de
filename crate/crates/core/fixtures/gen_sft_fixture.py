"""Regenerates ../data/sft_source.jsonl and sft_script.json (seed 0 tags).

    python3 gen_sft_fixture.py
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def convo(id, question, code):
    return {"id": id, "messages": [
        {"role": "user", "content": question},
        {"role": "assistant", "content": "Here is a solution.\n\n```python\n" + code + "```\n"},
    ]}


def fenced(code):
    return "The student mixed up the operation.\n\n## Incorrect Code Solution\n\n```python\n" + code + "```"


def inputs(entry, *calls):
    out = []
    for c in calls:
        if c is None:
            out.append("I could not think of an input.")
        else:
            out.append(
                "## Hypothesis\n\nThe code mishandles some inputs.\n\nError Pattern: edge values\n\n"
                "## Unit Test\n\n### Input Arguments\n\nPick a value on the edge.\n"
                f"Arguments: {entry}({c})\n\n### Output\n\nOutput: 0"
            )
    return out


SOURCE = [
    convo("src01", "Write a python function to square a number.", "def square(x):\n    return x * x\n"),
    convo("src02", "Write a python function to return the absolute difference of a and b.",
          "def abs_diff(a, b):\n    return abs(a - b)\n"),
    {"id": "src03", "messages": [
        {"role": "user", "content": "Write a JavaScript function that adds two numbers."},
        {"role": "assistant", "content": "```js\nfunction add(a, b) { return a + b; }\n```"},
    ]},
    convo("src04", "Write a python function to double a number.", "def double(x):\n    return 2 * x\n"),
    convo("src05", "Write a python function to return the last element of a list.",
          "def last(xs):\n    return xs[-1]\n"),
    convo("src06", "Write a python function to negate a number. " + "Please be careful. " * 700,
          "def neg(x):\n    return -x\n"),
    convo("src07", "Write a python function to count the uppercase letters in a string.",
          "def count_upper(s):\n    return sum(1 for c in s if c.isupper())\n"),
]

SCRIPT = [
    ("src01/corrupt", [fenced("def square(x):\n    return x * 2\n"),
                       fenced("def square(x):\n    return x * x if x > 0 else -x * x\n")]),
    ("src01/c0/input/", inputs("square", "3", "2", None, "3", "-1")),
    ("src01/c1/input/", inputs("square", "2", "-2", "0", "-3", "'a'")),
    ("src02/corrupt", [fenced("def abs_diff(a, b):\n    return a - b\n"),
                       fenced("def abs_diff(a, b):\n    return a - b\n")]),
    ("src02/c0/input/", inputs("abs_diff", "1, 4", "4, 1", "2, 2", "0, 3", None)),
    ("src04/corrupt", [fenced("def double(x):\n    return x + x\n"),
                       fenced("def double(x):\n    return x * 2\n")]),
    ("src04/c0/input/", inputs("double", "1", "2", "3", "-1", "0")),
    ("src04/c1/input/", inputs("double", "1", "2", "3", "-1", "0")),
    ("src05/corrupt", [fenced("def last(xs)\n    return xs[-1]\n"),
                       fenced("def last(xs):\n    return xs[-1]\n")]),
    ("src07/corrupt", [fenced("def count_upper(s):\n    return sum(1 for c in s if c.islower())\n"),
                       fenced("def count_upper(s):\n    return sum(1 for c in s[1:] if c.isupper())\n")]),
    ("src07/c0/input/", inputs("count_upper", "'AbC'", "'aB'", "''", "'ab'", "'XYZ'")),
    ("src07/c1/input/", inputs("count_upper", "'abc'", "'Ab'", "'AB'", None, "'b'")),
]


def main():
    with open(os.path.join(HERE, "..", "data", "sft_source.jsonl"), "w") as f:
        for item in SOURCE:
            f.write(json.dumps(item) + "\n")
    entries = [{"tag": "sft/s0/" + tag, "completions": outs} for tag, outs in SCRIPT]
    entries.append({
        "contains": "provide step-by-step reasoning",
        "repeat": True,
        "completions": [
            "### Reasoning\n\nLet's think step by step.\n\n"
            "- Apply the task description to the given input.\n\n"
            "- The result is the output stated above."
        ],
    })
    with open(os.path.join(HERE, "sft_script.json"), "w") as f:
        json.dump({"backend_id": "scripted-sft", "entries": entries}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
