"""Regenerates toy_corpus.jsonl and toy_pools.jsonl.

Each problem has a reference, a candidate with a planted bug that some
domain input reaches, and a small input domain. Gold tests are the
reference outputs over the whole domain.

    python3 gen_toy.py
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

PROBLEMS = [
    dict(
        id="toy01", entry="add_one", sig="add_one(x)",
        desc="Write a function that returns x plus one.",
        ref="def add_one(x):\n    return x + 1\n",
        bug="def add_one(x):\n    if x > 3:\n        return x + 2\n    return x + 1\n",
        alt="def add_one(x):\n    return x + 1 if x >= 0 else x\n",
        domain=[[str(x)] for x in range(-2, 7)],
    ),
    dict(
        id="toy02", entry="is_even", sig="is_even(n)",
        desc="Write a function that returns True if the integer n is even and False otherwise.",
        ref="def is_even(n):\n    return n % 2 == 0\n",
        bug="def is_even(n):\n    if n <= 0:\n        return False\n    return n % 2 == 0\n",
        alt="def is_even(n):\n    return n % 2 == 0 if n != 4 else False\n",
        domain=[[str(x)] for x in range(-3, 6)],
    ),
    dict(
        id="toy03", entry="max_of_list", sig="max_of_list(xs)",
        desc="Write a function that returns the largest element of a non-empty list of integers.",
        ref="def max_of_list(xs):\n    return max(xs)\n",
        bug="def max_of_list(xs):\n    if len(xs) > 1:\n        return max(xs[:-1])\n    return xs[0]\n",
        alt="def max_of_list(xs):\n    return sorted(xs)[-1] if len(xs) < 4 else xs[0]\n",
        domain=[["[1]"], ["[3, 1]"], ["[1, 3]"], ["[2, 2]"], ["[-1, -5, -2]"], ["[4, 9, 7]"], ["[0, 1, 2, 3]"], ["[5, 4, 3, 9]"]],
    ),
    dict(
        id="toy04", entry="reverse_string", sig="reverse_string(s)",
        desc="Write a function that returns the string s reversed, keeping every character.",
        ref="def reverse_string(s):\n    return s[::-1]\n",
        bug="def reverse_string(s):\n    return s[::-1].strip()\n",
        alt="def reverse_string(s):\n    return s[::-1] if len(s) < 3 else s[1:][::-1]\n",
        domain=[["''"], ["'a'"], ["'ab'"], ["'abc'"], ["' x'"], ["'a b '"], ["'hello'"], ["'  '"]],
    ),
    dict(
        id="toy05", entry="count_vowels", sig="count_vowels(s)",
        desc="Write a function that counts the vowels (a, e, i, o, u, in either case) in the string s.",
        ref="def count_vowels(s):\n    return sum(1 for c in s.lower() if c in 'aeiou')\n",
        bug="def count_vowels(s):\n    return sum(1 for c in s if c in 'aeiou')\n",
        alt="def count_vowels(s):\n    return sum(1 for c in s.lower() if c in 'aeio')\n",
        domain=[["''"], ["'abc'"], ["'AEIOU'"], ["'xyz'"], ["'Banana'"], ["'queue'"], ["'Umbrella'"], ["'sky'"]],
    ),
    dict(
        id="toy06", entry="factorial", sig="factorial(n)",
        desc="Write a function that returns n! for a non-negative integer n.",
        ref="def factorial(n):\n    out = 1\n    for i in range(2, n + 1):\n        out *= i\n    return out\n",
        bug="def factorial(n):\n    out = 1\n    for i in range(2, n):\n        out *= i\n    return out\n",
        alt="def factorial(n):\n    out = 1\n    for i in range(2, n + 1):\n        out *= i\n    return out if n < 5 else out + 1\n",
        domain=[[str(x)] for x in range(0, 7)],
    ),
    dict(
        id="toy07", entry="fib", sig="fib(n)",
        desc="Write a function that returns the n-th Fibonacci number, with fib(0) = 0 and fib(1) = 1.",
        ref="def fib(n):\n    a, b = 0, 1\n    for _ in range(n):\n        a, b = b, a + b\n    return a\n",
        bug="def fib(n):\n    a, b = 1, 1\n    for _ in range(n):\n        a, b = b, a + b\n    return a\n",
        alt="def fib(n):\n    a, b = 0, 1\n    for _ in range(n):\n        a, b = b, a + b\n    return a if n < 6 else a - 1\n",
        domain=[[str(x)] for x in range(0, 8)],
    ),
    dict(
        id="toy08", entry="sum_digits", sig="sum_digits(n)",
        desc="Write a function that returns the sum of the decimal digits of the integer n, ignoring its sign.",
        ref="def sum_digits(n):\n    return sum(int(d) for d in str(abs(n)))\n",
        bug="def sum_digits(n):\n    return sum(int(d) for d in str(n))\n",
        alt="def sum_digits(n):\n    return sum(int(d) for d in str(abs(n))[:2])\n",
        domain=[["0"], ["7"], ["12"], ["-12"], ["305"], ["-9"], ["1111"], ["99"]],
    ),
    dict(
        id="toy09", entry="is_palindrome", sig="is_palindrome(s)",
        desc="Write a function that returns True if the string s reads the same forwards and backwards.",
        ref="def is_palindrome(s):\n    return s == s[::-1]\n",
        bug="def is_palindrome(s):\n    return s[1:] == s[1:][::-1]\n",
        alt="def is_palindrome(s):\n    return s.lower() == s.lower()[::-1]\n",
        domain=[["''"], ["'a'"], ["'aa'"], ["'ab'"], ["'aba'"], ["'abb'"], ["'Aa'"], ["'racecar'"]],
    ),
    dict(
        id="toy10", entry="second_largest", sig="second_largest(xs)",
        desc="Write a function that returns the second largest distinct value in a list holding at least two distinct integers.",
        ref="def second_largest(xs):\n    return sorted(set(xs))[-2]\n",
        bug="def second_largest(xs):\n    return sorted(xs)[-2]\n",
        alt="def second_largest(xs):\n    return sorted(set(xs))[-2] if len(xs) < 5 else max(xs)\n",
        domain=[["[1, 2]"], ["[2, 1]"], ["[3, 3, 1]"], ["[5, 1, 4]"], ["[1, 2, 2]"], ["[-1, -2]"], ["[7, 7, 7, 3]"], ["[1, 2, 3, 4, 5]"]],
    ),
    dict(
        id="toy11", entry="clamp", sig="clamp(x, lo, hi)",
        desc="Write a function that limits x to the closed interval [lo, hi].",
        ref="def clamp(x, lo, hi):\n    return max(lo, min(hi, x))\n",
        bug="def clamp(x, lo, hi):\n    return min(hi, x)\n",
        alt="def clamp(x, lo, hi):\n    return max(lo, min(hi - 1, x))\n",
        domain=[["0", "0", "5"], ["3", "0", "5"], ["7", "0", "5"], ["-2", "0", "5"], ["5", "0", "5"], ["-9", "-3", "3"], ["1", "1", "1"]],
    ),
    dict(
        id="toy12", entry="gcd", sig="gcd(a, b)",
        desc="Write a function that returns the greatest common divisor of two positive integers.",
        ref="def gcd(a, b):\n    while b:\n        a, b = b, a % b\n    return a\n",
        bug="def gcd(a, b):\n    return min(a, b) if max(a, b) % min(a, b) == 0 else 1\n",
        alt="def gcd(a, b):\n    while b:\n        a, b = b, a % b\n    return a if a < 6 else 1\n",
        domain=[["1", "1"], ["4", "2"], ["6", "9"], ["7", "3"], ["12", "18"], ["10", "5"], ["8", "12"]],
    ),
    dict(
        id="toy13", entry="average", sig="average(xs)",
        desc="Write a function that returns the arithmetic mean of a non-empty list of numbers as a float.",
        ref="def average(xs):\n    return sum(xs) / len(xs)\n",
        bug="def average(xs):\n    return float(sum(xs) // len(xs))\n",
        alt="def average(xs):\n    return sum(xs) / len(xs) if len(xs) < 3 else sum(xs[:-1]) / len(xs)\n",
        domain=[["[1]"], ["[1, 2]"], ["[2, 4]"], ["[1, 2, 4]"], ["[0.5, 0.25]"], ["[3, 3, 3]"], ["[-1, 2]"]],
    ),
    dict(
        id="toy14", entry="remove_duplicates", sig="remove_duplicates(xs)",
        desc="Write a function that removes repeated elements from a list while keeping the first occurrence of each in its original order.",
        ref="def remove_duplicates(xs):\n    seen = set()\n    out = []\n    for x in xs:\n        if x not in seen:\n            seen.add(x)\n            out.append(x)\n    return out\n",
        bug="def remove_duplicates(xs):\n    return sorted(set(xs))\n",
        alt="def remove_duplicates(xs):\n    out = []\n    for x in xs:\n        if not out or out[-1] != x:\n            out.append(x)\n    return out\n",
        domain=[["[]"], ["[1]"], ["[1, 1]"], ["[1, 2, 1]"], ["[3, 1, 3]"], ["[2, 2, 1, 1]"], ["[5, 4, 5, 4]"]],
    ),
    dict(
        id="toy15", entry="char_freq", sig="char_freq(s)",
        desc="Write a function that returns a dictionary mapping every character of s, including spaces, to its number of occurrences.",
        ref="def char_freq(s):\n    out = {}\n    for c in s:\n        out[c] = out.get(c, 0) + 1\n    return out\n",
        bug="def char_freq(s):\n    out = {}\n    for c in s:\n        if c.isalpha():\n            out[c] = out.get(c, 0) + 1\n    return out\n",
        alt="def char_freq(s):\n    return {c: 1 for c in s}\n",
        domain=[["''"], ["'a'"], ["'aa'"], ["'ab'"], ["'a b'"], ["'  '"], ["'abca'"]],
    ),
    dict(
        id="toy16", entry="merge_sorted", sig="merge_sorted(a, b)",
        desc="Write a function that merges two sorted lists into a single sorted list.",
        ref="def merge_sorted(a, b):\n    return sorted(a + b)\n",
        bug="def merge_sorted(a, b):\n    return a + b\n",
        alt="def merge_sorted(a, b):\n    return sorted(set(a + b))\n",
        domain=[["[]", "[]"], ["[1]", "[]"], ["[]", "[2]"], ["[1, 3]", "[2]"], ["[2]", "[1, 3]"], ["[1, 1]", "[1]"], ["[0, 5]", "[1, 2]"]],
    ),
    dict(
        id="toy17", entry="count_words", sig="count_words(s)",
        desc="Write a function that counts the words in s, where words are separated by any amount of whitespace.",
        ref="def count_words(s):\n    return len(s.split())\n",
        bug="def count_words(s):\n    return len(s.split(' '))\n",
        alt="def count_words(s):\n    return len(s.strip().split(' ')) if s.strip() else 0\n",
        domain=[["''"], ["'a'"], ["'a b'"], ["'a  b'"], ["' a'"], ["'one two three'"], ["'x\\ty'"]],
    ),
    dict(
        id="toy18", entry="to_binary", sig="to_binary(n)",
        desc="Write a function that returns the binary representation of a non-negative integer n as a string without prefix.",
        ref="def to_binary(n):\n    return bin(n)[2:]\n",
        bug="def to_binary(n):\n    out = ''\n    while n > 0:\n        out = str(n % 2) + out\n        n //= 2\n    return out\n",
        alt="def to_binary(n):\n    return bin(n)[2:] if n < 4 else bin(n)[3:]\n",
        domain=[[str(x)] for x in range(0, 7)],
    ),
    dict(
        id="toy19", entry="triangle_type", sig="triangle_type(a, b, c)",
        desc="Write a function that classifies a triangle by its side lengths as 'equilateral', 'isosceles' or 'scalene'.",
        ref="def triangle_type(a, b, c):\n    if a == b == c:\n        return 'equilateral'\n    if a == b or b == c or a == c:\n        return 'isosceles'\n    return 'scalene'\n",
        bug="def triangle_type(a, b, c):\n    if a == b == c:\n        return 'equilateral'\n    if a == b:\n        return 'isosceles'\n    return 'scalene'\n",
        alt="def triangle_type(a, b, c):\n    if a == b == c:\n        return 'equilateral'\n    if a == b or b == c:\n        return 'isosceles'\n    return 'scalene'\n",
        domain=[["1", "1", "1"], ["2", "2", "3"], ["3", "2", "2"], ["2", "3", "2"], ["3", "4", "5"], ["5", "5", "8"], ["4", "6", "5"]],
    ),
    dict(
        id="toy20", entry="running_sum", sig="running_sum(xs)",
        desc="Write a function that returns the list of prefix sums of xs, where the i-th entry is the sum of xs[0] through xs[i].",
        ref="def running_sum(xs):\n    out = []\n    total = 0\n    for x in xs:\n        total += x\n        out.append(total)\n    return out\n",
        bug="def running_sum(xs):\n    return [sum(xs[:i]) for i in range(len(xs))]\n",
        alt="def running_sum(xs):\n    out = []\n    total = 0\n    for x in xs:\n        total += abs(x)\n        out.append(total)\n    return out\n",
        domain=[["[]"], ["[1]"], ["[1, 2]"], ["[0, 0]"], ["[3, -1, 2]"], ["[5, 5, 5]"], ["[-2, 2]"]],
    ),
]


def run(code, entry, args):
    env = {}
    exec(code, env)
    return env[entry](*[eval(a) for a in args])


def outcome(code, entry, args):
    try:
        return ("ok", run(code, entry, args))
    except Exception as e:
        return ("raise", type(e).__name__)


def main():
    corpus, pools = [], []
    for p in PROBLEMS:
        gold = []
        diverging = 0
        for args in p["domain"]:
            expected = run(p["ref"], p["entry"], args)
            gold.append({"args": args, "expected": repr(expected)})
            if outcome(p["bug"], p["entry"], args) != ("ok", expected):
                diverging += 1
        assert diverging > 0, p["id"]
        base = {
            "id": p["id"],
            "description": p["desc"],
            "entry_point": p["entry"],
            "signature": p["sig"],
            "reference_code": p["ref"],
            "gold_tests": gold,
        }
        corpus.append(dict(base, candidates=[{"source": p["bug"], "provenance": "human_bug"}],
                           input_domain=p["domain"], source_tag="toy"))
        pools.append(dict(base, candidates=[
            {"source": p["bug"], "provenance": "sampled_model"},
            {"source": p["alt"], "provenance": "sampled_model"},
            {"source": p["ref"], "provenance": "sampled_model"},
        ], input_domain=p["domain"], source_tag="toy"))
    for name, rows in [("toy_corpus.jsonl", corpus), ("toy_pools.jsonl", pools)]:
        with open(os.path.join(HERE, name), "w") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")


if __name__ == "__main__":
    main()
