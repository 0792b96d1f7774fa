"""Pythonic plan programs: AST, tolerant line parser and canonical renderer.

Surface syntax, one statement per line inside a ``def name():`` body::

    # grab salmon
    assert('close' to 'salmon') else: find('salmon')
    assert('microwave' is 'open') else: open('microwave')
    assert(not 'salmon' in 'fridge') else: find('salmon'), grab('salmon')
    grab('salmon')

Assertion keywords: ``to`` (only as ``'close' to '<obj>'``), ``is`` (object,
state word), ``in`` and ``on`` (object, container or surface). ``'hands'`` as
the target of ``in`` means "held by the agent". Negation is a leading
``not`` or the ``is not`` / ``not in`` / ``not on`` spellings.

The parser never rejects a body line: anything outside the grammar becomes an
``Unparseable`` statement carrying its source text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

IDENT_RE = re.compile(r"^[a-z][a-z0-9_]*$")

_HEADER_RE = re.compile(r"^def\s+([A-Za-z][A-Za-z0-9_]*)\s*\(\s*\)\s*:\s*(?:#.*)?$")
_CALL_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)$", re.S)
_ARG_RE = re.compile(r"""\s*(?:'([^']*)'|"([^"]*)")\s*""")
_QUOTED = r"""(?:'([^']*)'|"([^"]*)")"""
_ASSERT_RE = re.compile(
    rf"^assert\s*\(\s*(not\s+)?{_QUOTED}\s+(is\s+not|not\s+in|not\s+on|to|is|in|on)\s+{_QUOTED}\s*\)"
    rf"\s*(?:else\s*:\s*(.*))?$",
    re.I | re.S,
)

CONDITION_KINDS = ("close_to", "is", "in", "on")
HANDS = "hands"

# state word -> (fluent predicate, expected truth)
STATE_WORDS = {
    "closed": ("closed", True),
    "open": ("closed", False),
    "opened": ("closed", False),
    "switched_on": ("switched_on", True),
    "switchedon": ("switched_on", True),
    "on": ("switched_on", True),
    "switched_off": ("switched_on", False),
    "off": ("switched_on", False),
    "heated": ("heated", True),
    "washed": ("washed", True),
}


class PlanSyntaxError(ValueError):
    """Raised only when the source has no function header at all."""


@dataclass(frozen=True)
class Comment:
    text: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ActionCall:
    verb: str
    args: tuple[str, ...] = ()
    raw: str = field(default="", compare=False)
    line: int = field(default=0, compare=False)

    def render(self) -> str:
        return f"{self.verb}({', '.join(_quote(a) for a in self.args)})"


@dataclass(frozen=True)
class Condition:
    """``kind`` is close_to | is | in | on; ``arg`` is the state word or target."""

    kind: str
    obj: str
    arg: str | None = None
    negated: bool = False

    def render(self) -> str:
        if self.kind == "close_to":
            body = f"'close' to {_quote(self.obj)}"
        else:
            body = f"{_quote(self.obj)} {self.kind} {_quote(self.arg or '')}"
        return f"not {body}" if self.negated else body

    def objects(self) -> tuple[str, ...]:
        if self.kind in ("in", "on"):
            return (self.obj, self.arg)
        return (self.obj,)


@dataclass(frozen=True)
class AssertBlock:
    condition: Condition
    recovery: tuple[ActionCall, ...] = ()
    raw: str = field(default="", compare=False)
    line: int = field(default=0, compare=False)

    def render(self) -> str:
        text = f"assert({self.condition.render()})"
        if self.recovery:
            text += " else: " + ", ".join(call.render() for call in self.recovery)
        return text


@dataclass(frozen=True)
class Unparseable:
    raw: str
    diagnostic: str = field(default="", compare=False)
    line: int = field(default=0, compare=False)


Statement = Union[Comment, ActionCall, AssertBlock, Unparseable]


@dataclass(frozen=True)
class PlanProgram:
    name: str
    statements: tuple[Statement, ...] = ()

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise ValueError(f"bad program name {self.name!r}")

    def actions(self) -> list[ActionCall]:
        return [s for s in self.statements if isinstance(s, ActionCall)]


def _quote(text: str) -> str:
    return f'"{text}"' if "'" in text else f"'{text}'"


def _split_top_level(text: str) -> list[str] | None:
    """Split on commas outside quotes and parentheses."""
    parts, depth, quote, start = [], 0, None, 0
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return None
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    if quote or depth:
        return None
    parts.append(text[start:])
    return parts


def _parse_args(text: str) -> tuple[str, ...] | None:
    if not text.strip():
        return ()
    pieces = _split_top_level(text)
    if pieces is None:
        return None
    args = []
    for piece in pieces:
        m = _ARG_RE.fullmatch(piece)
        if not m:
            return None
        value = m.group(1) if m.group(1) is not None else m.group(2)
        args.append(value.strip().lower())
    return tuple(args)


def _strip_trailing_comment(text: str) -> str:
    quote = None
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return text[:i].rstrip()
    return text


def parse_call(text: str, line: int = 0) -> ActionCall | None:
    text = _strip_trailing_comment(text.strip())
    m = _CALL_RE.match(text)
    if not m:
        return None
    args = _parse_args(m.group(2))
    if args is None:
        return None
    return ActionCall(m.group(1).lower(), args, raw=text, line=line)


def _parse_assert(text: str, line: int) -> AssertBlock | str:
    m = _ASSERT_RE.match(_strip_trailing_comment(text))
    if not m:
        return "malformed assert; expected assert('<word>' <to|is|in|on> '<obj>') else: <action>"
    lead_not, a1, a2, keyword, b1, b2, recovery_src = m.groups()
    left = (a1 if a1 is not None else a2).strip().lower()
    right = (b1 if b1 is not None else b2).strip().lower()
    words = keyword.lower().split()
    negated = bool(lead_not) != ("not" in words)
    kind = "is" if "is" in words else "close_to" if "to" in words else words[-1]
    if kind == "close_to":
        if left != "close":
            return f"'to' assertions must read 'close' to '<obj>', got {left!r}"
        cond = Condition("close_to", right, None, negated)
    else:
        cond = Condition(kind, left, right, negated)
    recovery: list[ActionCall] = []
    if recovery_src is not None:
        pieces = _split_top_level(recovery_src)
        if pieces is None or not recovery_src.strip():
            return "malformed recovery after 'else:'"
        for piece in pieces:
            call = parse_call(piece, line)
            if call is None:
                return f"recovery is not an action call: {piece.strip()!r}"
            recovery.append(call)
    return AssertBlock(cond, tuple(recovery), raw=text, line=line)


def parse_statement(text: str, line: int = 0) -> Statement:
    """Classify one stripped, non-blank body line."""
    if text.startswith("#"):
        return Comment(text[1:].strip(), line=line)
    if re.match(r"assert\b", text, re.I):
        result = _parse_assert(text, line)
        if isinstance(result, str):
            return Unparseable(text, result, line=line)
        return result
    call = parse_call(text, line)
    if call is not None:
        return call
    return Unparseable(text, "line matches no plan production", line=line)


def _indent(line: str) -> int:
    return len(line) - len(line.lstrip())


def parse_program(source: str) -> PlanProgram:
    """Parse the first function in ``source``.

    The body ends at a ``return``, another ``def``, or the first non-blank line
    indented no deeper than the header. Lines before the header are ignored.
    """
    lines = source.split("\n")
    for start, line in enumerate(lines):
        m = _HEADER_RE.match(line.strip())
        if m:
            break
    else:
        raise PlanSyntaxError("no 'def <name>():' header found")
    name = m.group(1).lower()
    base = _indent(lines[start])
    statements: list[Statement] = []
    for lineno, line in enumerate(lines[start + 1:], start=start + 2):
        text = line.strip()
        if not text:
            continue
        if _indent(line) <= base:
            break
        if re.match(r"(return|def)\b", text):
            break
        statements.append(parse_statement(text, lineno))
    return PlanProgram(name, tuple(statements))


def render_statement(statement: Statement) -> str:
    if isinstance(statement, Comment):
        return f"# {statement.text}".rstrip()
    if isinstance(statement, (ActionCall, AssertBlock)):
        return statement.render()
    return statement.raw


def render_program(program: PlanProgram, include_comments: bool = True,
                   include_feedback: bool = True) -> str:
    """Canonical text, 4-space indented, optionally without comments/asserts."""
    out = [f"def {program.name}():"]
    for st in program.statements:
        if isinstance(st, Comment) and not include_comments:
            continue
        if isinstance(st, AssertBlock) and not include_feedback:
            continue
        out.append("    " + render_statement(st))
    return "\n".join(out) + "\n"
