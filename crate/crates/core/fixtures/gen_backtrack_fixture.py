"""Regenerates backtrack.json: a debug transcript for toy03 where the round 1
edit is discarded and the round 2 edit is kept.

    python3 gen_backtrack_fixture.py
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
P = "debug/toy03"


def ask(args):
    return [
        "## Hypothesis\n\nThe last element seems to be ignored.\n\n"
        "Error Pattern: the maximum sits at the end of the list\n\n"
        "## Unit Test\n\n### Input Arguments\n\n"
        f"Arguments: max_of_list({args})\n\n### Output\n\nOutput: 0"
    ]


def votes(right, wrong, n_right=5):
    text = "Scanning the list for its largest element gives {}.\nOutput: {}"
    return [text.format(right, right)] * n_right + [text.format(wrong, wrong)] * (8 - n_right)


def edit(body):
    return ["Here is the corrected function.\n\n```python\ndef max_of_list(xs):\n" + body + "```"]


SLOTS = [
    # generation 1, against the buggy code
    ("g1/slot0", "[1, 3]", votes("3", "1")),
    ("g1/slot1", "[4, 9, 7]", votes("9", "7", 6)),
    ("g1/slot2", "[5, 4, 3, 9]", votes("9", "5")),
    # generation 2, against the accepted edit
    ("g2/slot0", "[2, 2]", votes("2", "4", 8)),
    ("g2/slot1", "[1]", votes("1", "0", 7)),
    ("g2/slot2", "[-1, -5, -2]", votes("-1", "-5")),
]


def main():
    entries = []
    for slot, args, outs in SLOTS:
        entries.append({"tag": f"{P}/{slot}/input/", "completions": ask(args)})
        entries.append({"tag": f"{P}/{slot}/output", "completions": outs})
    entries.append({"tag": f"{P}/r1/edit", "completions": edit("    return sorted(xs)[0]\n")})
    entries.append({"tag": f"{P}/r2/edit", "completions": edit("    return max(xs)\n")})
    with open(os.path.join(HERE, "backtrack.json"), "w") as f:
        json.dump({"backend_id": "scripted-backtrack", "entries": entries}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
