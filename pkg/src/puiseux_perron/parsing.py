"""Text form of Puiseux series and matrix documents.

Entry grammar (whitespace-insensitive)::

    entry := ["+"|"-"] term (("+"|"-") term)* ["+" "o(" tpow ")"]
    term  := coef ["*" tpow] | tpow
    coef  := decimal ["/" integer]
    tpow  := "t" ["^" (integer | "(" integer ["/" integer] ")")]

The trailing ``o(t^k)`` marks a truncated series: nothing is known about
exponents above k.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NotSubtractionFree, ParseError
from .series import INF, PuiseuxMatrix, PuiseuxSeries, Positivity, classify, is_inf

_NUMBER = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_INT = re.compile(r"\d+")


class _Scanner:
    def __init__(self, text: str, base: int = 0):
        self.text = text
        self.pos = 0
        self.base = base

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch: str):
        if not self.take(ch):
            self.fail(f"expected {ch!r}")

    def fail(self, msg: str):
        self.skip()
        offset = len(self.text[:self.pos].encode("utf-8")) + self.base
        raise ParseError(msg, offset)

    def match(self, pattern: re.Pattern) -> str | None:
        self.skip()
        m = pattern.match(self.text, self.pos)
        if not m:
            return None
        self.pos = m.end()
        return m.group(0)

    def signed_int(self) -> int:
        neg = self.take("-")
        if not neg:
            self.take("+")
        digits = self.match(_INT)
        if digits is None:
            self.fail("expected an integer")
        return -int(digits) if neg else int(digits)


def _coef(sc: _Scanner):
    num = sc.match(_NUMBER)
    if num is None:
        return None
    if sc.peek() == "/":
        sc.pos += 1
        den = sc.match(_INT)
        if den is None or "." in num or "e" in num.lower():
            sc.fail("rational coefficients need integer numerator and denominator")
        if int(den) == 0:
            sc.fail("zero denominator")
        return float(Fraction(int(num), int(den)))
    return float(num)


def _tpow(sc: _Scanner) -> Fraction:
    sc.expect("t")
    if not sc.take("^"):
        return Fraction(1)
    if sc.take("("):
        p = sc.signed_int()
        den = 1
        if sc.take("/"):
            d = sc.match(_INT)
            if d is None or int(d) == 0:
                sc.fail("expected a positive denominator")
            den = int(d)
        sc.expect(")")
        return Fraction(p, den)
    return Fraction(sc.signed_int())


def parse_entry(text: str, base: int = 0) -> PuiseuxSeries:
    """Parse one series; ``base`` shifts the byte offsets reported in errors."""
    sc = _Scanner(text, base)
    terms = []
    trunc = INF
    sign = 1.0
    if sc.take("-"):
        sign = -1.0
    else:
        sc.take("+")
    first = True
    while True:
        if sc.peek() == "o":
            if first:
                sc.fail("a series cannot start with o(...)")
            sc.pos += 1
            sc.expect("(")
            trunc = _tpow(sc)
            sc.expect(")")
            if sign < 0:
                sc.fail("o(...) must be added, not subtracted")
            break
        coef = _coef(sc)
        if coef is None:
            if sc.peek() != "t":
                sc.fail("expected a number or t")
            exp = _tpow(sc)
            terms.append((exp, sign))
        else:
            exp = Fraction(0)
            if sc.take("*"):
                exp = _tpow(sc)
            terms.append((exp, sign * coef))
        first = False
        if sc.take("+"):
            sign = 1.0
        elif sc.take("-"):
            sign = -1.0
        else:
            break
    if sc.peek():
        sc.fail(f"unexpected {sc.peek()!r}")
    return PuiseuxSeries(terms, trunc, tol=0.0)


def format_exponent(e) -> str:
    e = Fraction(e)
    if e.denominator == 1 and e >= 0:
        return str(e.numerator)
    return f"({e.numerator}/{e.denominator})" if e.denominator != 1 else f"({e.numerator})"


def format_power(e) -> str:
    """``t``, ``t^2`` or ``t^(1/2)``."""
    return "t" if e == 1 else f"t^{format_exponent(e)}"


def _format_coef(c: float, digits: int | None) -> str:
    if digits is not None:
        s = f"{c:.{digits}g}"
        return s
    if c == int(c) and abs(c) < 2 ** 53:
        return str(int(c))
    return repr(c)


def format_series(x: PuiseuxSeries, digits: int | None = None) -> str:
    """Inverse of ``parse_entry``; ``digits=None`` keeps every float bit."""
    parts = []
    for e, c in x.terms:
        mag = _format_coef(abs(c), digits)
        if e == 0:
            body = mag
        else:
            tp = format_power(e)
            body = tp if mag == "1" else f"{mag}*{tp}"
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    text = " ".join(parts) if parts else "0"
    if not is_inf(x.trunc):
        text += f" + o({format_power(x.trunc)})"
    return text


def format_matrix(y: PuiseuxMatrix, digits: int | None = None) -> str:
    rows = ["[" + ", ".join(format_series(x, digits) for x in row) + "]" for row in y]
    return "[" + ",\n ".join(rows) + "]"


def series_to_json(x: PuiseuxSeries) -> list:
    return [[e.numerator, e.denominator, c] for e, c in x.terms]


def series_from_json(data) -> PuiseuxSeries:
    return PuiseuxSeries(((Fraction(p, q), c) for p, q, c in data), tol=0.0)


# ---------------------------------------------------------------------------
# documents


@dataclass
class MatrixDocument:
    size: int
    entries: list
    options: dict = field(default_factory=dict)
    kind: str = "puiseux"
    matrix: object = None


_OPTION = re.compile(r"\s*([A-Za-z_]+)\s*=\s*(\S+)\s*$")
_KNOWN = {"depth", "tol", "delta", "seed", "class", "kind"}


def _strip_comments(text: str) -> str:
    return re.sub(r"#[^\n]*", lambda m: " " * len(m.group(0)), text)


def _split_rows(text: str, start: int) -> list:
    """Split ``[[a, b], [c, d]]`` into rows of (entry_text, char_offset)."""
    sc = _Scanner(text)
    sc.pos = start
    sc.expect("[")
    rows = []
    while True:
        sc.expect("[")
        row = []
        while True:
            sc.skip()
            begin = sc.pos
            depth = 0
            while sc.pos < len(text):
                ch = text[sc.pos]
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    depth -= 1
                elif depth == 0 and ch in ",]":
                    break
                sc.pos += 1
            if sc.pos >= len(text):
                sc.fail("unterminated row")
            row.append((text[begin:sc.pos], begin))
            if sc.take(","):
                continue
            sc.expect("]")
            break
        rows.append(row)
        if sc.take(","):
            continue
        sc.expect("]")
        break
    if sc.peek():
        sc.fail("trailing text after matrix")
    return rows


def parse_tropical_value(text: str, base: int = 0):
    s = text.strip()
    if s in ("inf", "+inf", "∞", "+∞"):
        return INF
    try:
        return Fraction(s)
    except ValueError:
        raise ParseError(f"bad tropical value {s!r}", base) from None


def parse_document(text: str) -> MatrixDocument:
    clean = _strip_comments(text)
    start = clean.find("[")
    if start < 0:
        raise ParseError("no matrix found", len(clean.encode()))
    options = {}
    offset = 0
    for line in clean[:start].splitlines(keepends=True):
        if line.strip():
            m = _OPTION.match(line)
            if not m or m.group(1) not in _KNOWN:
                raise ParseError(f"bad option line {line.strip()!r}", len(clean[:offset].encode()))
            options[m.group(1)] = m.group(2)
        offset += len(line)
    kind = options.pop("kind", "puiseux")
    rows = _split_rows(clean, start)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ParseError("matrix must be square", len(clean[:start].encode()))
    entries = [[t.strip() for t, _ in row] for row in rows]
    if kind == "tropical":
        matrix = [[parse_tropical_value(t, len(clean[:o].encode())) for t, o in row] for row in rows]
    elif kind == "puiseux":
        matrix = PuiseuxMatrix([[parse_entry(t, len(clean[:o].encode())) for t, o in row] for row in rows])
        declared = options.get("class")
        if declared is not None:
            _check_class(matrix, declared)
    else:
        raise ParseError(f"unknown kind {kind!r}", 0)
    return MatrixDocument(size=n, entries=entries, options=options, kind=kind, matrix=matrix)


def _check_class(y: PuiseuxMatrix, declared: str):
    try:
        want = Positivity(declared)
    except ValueError:
        raise ParseError(f"unknown positivity class {declared!r}", 0) from None
    got = classify(y)
    ok = {
        Positivity.GENERAL: True,
        Positivity.NONNEGATIVE: got is not Positivity.GENERAL,
        Positivity.POSITIVE: all(not x.is_zero and x.leading_coeff > 0 for row in y for x in row),
        Positivity.SUBTRACTION_FREE: got is Positivity.SUBTRACTION_FREE,
    }[want]
    if not ok:
        raise NotSubtractionFree(f"matrix does not belong to the declared class {declared}")
