"""
rewards/math_answer.py — Final-answer verification for reasoning tasks.

Extraction order: last balanced \\boxed{...}, else the text after the last
"answer is" / "Final Answer", else the last standalone number. Both sides
are normalized and compared as rationals (relative tolerance 1e-6), falling
back to a case-insensitive string compare.
"""

import re
from fractions import Fraction
from typing import Optional

from core.types import REASONING_KINDS, AnswerGold
from rewards.base import reward_kernel

_MARKER_RE = re.compile(r"answer is|final answer", re.IGNORECASE)
_NUMBER_RE = re.compile(r"[-+]?(?:\d+(?:,\d{3})*(?:\.\d+)?|\.\d+)(?:\s*/\s*\d+(?:\.\d+)?)?")
_TEXT_WRAPPER_RE = re.compile(r"\\(?:text|textbf|mathrm|mbox)\s*\{([^{}]*)\}")
_FRAC_RE = re.compile(r"\\frac\s*\{([^{}]*)\}\s*\{([^{}]*)\}")
_THOUSANDS_RE = re.compile(r"(?<=\d),(?=\d{3}(?!\d))")
_RATIONAL_RE = re.compile(r"([-+]?)\(?([-+]?\d+(?:\.\d+)?)\)?/\(?([-+]?\d+(?:\.\d+)?)\)?")
_DECIMAL_RE = re.compile(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)")
_REL_TOL = Fraction(1, 10**6)


def extract_boxed(text: str) -> Optional[str]:
    """Content of the last \\boxed{...} with balanced braces, or None."""
    for m in reversed(list(re.finditer(r"\\boxed", text))):
        i = m.end()
        while i < len(text) and text[i].isspace():
            i += 1
        if i >= len(text) or text[i] != "{":
            continue
        depth, start = 1, i + 1
        for j in range(start, len(text)):
            if text[j] == "{":
                depth += 1
            elif text[j] == "}":
                depth -= 1
                if depth == 0:
                    return text[start:j].strip()
    return None


def extract_final_answer(text: str) -> Optional[str]:
    boxed = extract_boxed(text)
    if boxed is not None:
        return boxed

    markers = list(_MARKER_RE.finditer(text))
    if markers:
        tail = text[markers[-1].end():].lstrip(" \t:")
        tail = tail.split("\n", 1)[0].strip().rstrip(".").strip()
        if tail:
            return tail

    numbers = _NUMBER_RE.findall(text)
    return numbers[-1] if numbers else None


def normalize_answer(s: str) -> str:
    s = s.strip()
    s = re.sub(r"\\[dt]frac", r"\\frac", s)
    s = _TEXT_WRAPPER_RE.sub(r"\1", s)
    s = _FRAC_RE.sub(r"(\1)/(\2)", s)
    for token in ("\\left", "\\right", "\\!", "\\,", "\\;", "\\ ", "\\%", "\\$", "^\\circ", "^{\\circ}"):
        s = s.replace(token, "")
    s = re.sub(r"[$%€£¥]", "", s)
    s = _THOUSANDS_RE.sub("", s)
    s = re.sub(r"\s+", "", s).rstrip(".")
    return s.lower()


def to_rational(s: str) -> Optional[Fraction]:
    """Exact value of a decimal or a/b string, or None.

    Digit strings past the interpreter's int conversion limit read as None.
    """
    try:
        if _DECIMAL_RE.fullmatch(s):
            return Fraction(s)
        m = _RATIONAL_RE.fullmatch(s)
        if m:
            sign, num, den = m.groups()
            den_value = Fraction(den)
            if den_value == 0:
                return None
            value = Fraction(num) / den_value
            return -value if sign == "-" else value
    except ValueError:
        return None
    return None


def answers_equivalent(pred: str, gold: str) -> bool:
    a, b = normalize_answer(pred), normalize_answer(gold)
    ra, rb = to_rational(a), to_rational(b)
    if ra is not None and rb is not None:
        return abs(ra - rb) <= _REL_TOL * max(abs(ra), abs(rb))
    return a == b


def math_answer_reward(response_text: str, gold_answer: str) -> float:
    if not gold_answer.strip():
        raise ValueError("gold answer must be nonempty")
    pred = extract_final_answer(response_text)
    if pred is None:
        return 0.0
    return 1.0 if answers_equivalent(pred, gold_answer) else 0.0


@reward_kernel("math_answer", kinds=REASONING_KINDS, description="final-answer equivalence after normalization")
def score_math_answer(response_text: str, gold: AnswerGold) -> float:
    return math_answer_reward(response_text, gold.text)
