"""Constrained animation-timeline DSL: parser, linter, canonical serializer, and patcher.

The accepted language is a closed subset of chained ``timeline.add({...}, offset?)``
calls over a fixed set of animatable properties. Anything outside the subset parses
into a diagnostic with a source span instead of crashing; value arrays longer than
two keep only the first two entries (from, to) and emit a FROM_TO_EXTRA lint, which
deliberately mirrors how the web runtime treats them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union

ANIMATABLE_PROPERTIES = (
    "translateX",
    "translateY",
    "scale",
    "scaleX",
    "scaleY",
    "rotate",
    "opacity",
    "left",
    "top",
    "width",
    "height",
)

EASING_NAMES = (
    "linear",
    "easeInQuad",
    "easeOutQuad",
    "easeInOutQuad",
    "easeInCubic",
    "easeOutCubic",
    "easeInOutCubic",
    "easeInSine",
    "easeOutSine",
    "easeInOutSine",
    "easeOutBack",
    "easeOutElastic",
)

DEFAULT_DURATION = 1000.0
DEFAULT_EASING = "easeOutQuad"

# Properties measured in canvas pixels; percent on translate* is relative to the
# element's own box, percent on box properties is relative to the canvas.
_PX_PROPERTIES = {"translateX", "translateY", "left", "top", "width", "height"}
_PERCENT_OK = _PX_PROPERTIES
_SCALAR_PROPERTIES = {"scale", "scaleX", "scaleY", "opacity"}


class Unit(Enum):
    PX = "px"
    PERCENT = "percent"
    DEG = "deg"
    SCALAR = "scalar"


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: tuple[int, int]
    line: int
    col: int

    def format(self) -> str:
        return f"{self.severity.value} {self.code} at {self.line}:{self.col}: {self.message}"


@dataclass(frozen=True)
class PropertySpec:
    to: float
    from_value: Optional[float] = None
    unit: Unit = Unit.PX


@dataclass(frozen=True)
class Stagger:
    step: float


@dataclass(frozen=True)
class Offset:
    kind: str  # 'sequential' | 'absolute' | 'relative'
    value: float = 0.0

    @classmethod
    def sequential(cls) -> "Offset":
        return cls("sequential")

    @classmethod
    def absolute(cls, ms: float) -> "Offset":
        return cls("absolute", ms)

    @classmethod
    def relative(cls, ms: float) -> "Offset":
        return cls("relative", ms)


SEQUENTIAL = Offset.sequential()


@dataclass(frozen=True)
class TimelineEntry:
    targets: str
    properties: dict[str, PropertySpec] = field(default_factory=dict)
    duration: float = DEFAULT_DURATION
    delay: Union[float, Stagger] = 0.0
    easing: str = DEFAULT_EASING
    loop: Union[bool, int] = False
    direction: str = "normal"
    offset: Offset = SEQUENTIAL

    @property
    def period(self) -> float:
        return self.duration * (2.0 if self.direction == "alternate" else 1.0)

    @property
    def is_infinite_loop(self) -> bool:
        return self.loop is True

    def repetitions(self) -> int:
        """Finite period count (1 for plain entries and for the infinite-loop cursor rule)."""
        if self.loop is True or self.loop is False:
            return 1
        return int(self.loop)

    def max_delay(self, n_matched: int) -> float:
        if isinstance(self.delay, Stagger):
            return self.delay.step * max(n_matched - 1, 0)
        return self.delay

    def extent(self, n_matched: int) -> float:
        """Cursor contribution: worst-case delay plus all finite periods."""
        return self.max_delay(n_matched) + self.period * self.repetitions()


@dataclass
class TimelineProgram:
    entries: list[TimelineEntry] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.WARNING]

    def structurally_equal(self, other: "TimelineProgram") -> bool:
        return self.entries == other.entries


class ParseError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.format() for d in diagnostics))


class NonCanonicalizable(Exception):
    pass


class NoMatchingEntries(Exception):
    pass


class SnippetTargetsOthers(Exception):
    pass


@dataclass
class SelectorEnv:
    """Resolves DSL selectors to element ids in document (z) order."""

    ids: list[str]
    roles: dict[str, str] = field(default_factory=dict)
    groups: dict[str, list[str]] = field(default_factory=dict)

    def resolve(self, selector: str) -> list[str]:
        wanted: set[str] = set()
        for part in selector.split(","):
            part = part.strip()
            if not part:
                continue
            if part.startswith("#"):
                name = part[1:]
                if name in self.groups:
                    wanted.update(self.groups[name])
                else:
                    wanted.add(name)
            elif part.startswith("."):
                role = part[1:]
                wanted.update(i for i in self.ids if self.roles.get(i) == role)
            elif part in self.groups:
                wanted.update(self.groups[part])
            else:
                wanted.add(part)
        return [i for i in self.ids if i in wanted]

    @classmethod
    def from_program(cls, program: TimelineProgram) -> "SelectorEnv":
        """Fallback env from the ids a program mentions directly; class and group
        selectors need a document-derived env to resolve."""
        ids: list[str] = []
        for entry in program.entries:
            for part in entry.targets.split(","):
                part = part.strip()
                if part.startswith("#") and part[1:] not in ids:
                    ids.append(part[1:])
        return cls(ids=ids)


# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<string>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<punct>[.(){}\[\],:;])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    start: int
    end: int
    line: int
    col: int


def _tokenize(source: str) -> tuple[list[_Token], list[Diagnostic]]:
    tokens: list[_Token] = []
    diagnostics: list[Diagnostic] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "PARSE_ERROR",
                    f"unexpected character {source[pos]!r}",
                    (pos, pos + 1),
                    line,
                    col,
                )
            )
            pos += 1
            continue
        kind = m.lastgroup or ""
        text = m.group()
        if kind not in ("ws", "line_comment", "block_comment"):
            tokens.append(_Token(kind, text, m.start(), m.end(), line, m.start() - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", n, n, line, n - line_start + 1))
    return tokens, diagnostics


_UNIT_VALUE_RE = re.compile(r"^\s*([-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)\s*(px|%|deg)?\s*$")
_RELATIVE_OFFSET_RE = re.compile(r"^\s*([-+])=\s*((?:\d+\.\d*|\.\d+|\d+))\s*$")


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens, self.diagnostics = _tokenize(source)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, tok: _Token, code: str, message: str, severity: Severity = Severity.ERROR):
        self.diagnostics.append(Diagnostic(severity, code, message, (tok.start, tok.end), tok.line, tok.col))

    def expect_punct(self, char: str) -> Optional[_Token]:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == char:
            return self.advance()
        self.error(tok, "PARSE_ERROR", f"expected {char!r}, found {tok.text or 'end of input'!r}")
        return None

    def skip_to_next_call(self):
        """Panic recovery: skip until a top-level '.' (next chain link) or eof."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if tok.kind == "punct":
                if tok.text in "({[":
                    depth += 1
                elif tok.text in ")}]":
                    depth = max(depth - 1, 0)
                elif tok.text in (".", ";") and depth == 0:
                    return
            self.advance()

    def parse_program(self) -> TimelineProgram:
        entries: list[TimelineEntry] = []
        head = self.peek()
        if head.kind == "ident" and head.text == "timeline":
            self.advance()
        else:
            self.error(head, "PARSE_ERROR", "program must start with 'timeline'")
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind == "punct" and tok.text == ";":
                self.advance()
                trailing = self.peek()
                if trailing.kind != "eof":
                    self.error(trailing, "PARSE_ERROR", "content after terminating ';'")
                break
            if tok.kind == "punct" and tok.text == ".":
                entry = self.parse_call()
                if entry is not None:
                    entries.append(entry)
                continue
            self.error(tok, "PARSE_ERROR", f"expected '.add' chain, found {tok.text!r}")
            self.skip_to_next_call()
            if self.peek().kind == "punct" and self.peek().text == ";":
                self.advance()
                break
        return TimelineProgram(entries=entries, diagnostics=self.diagnostics)

    def parse_call(self) -> Optional[TimelineEntry]:
        self.advance()  # '.'
        name = self.peek()
        if name.kind != "ident" or name.text != "add":
            self.error(name, "PARSE_ERROR", f"only '.add' calls are supported, found {name.text!r}")
            self.skip_to_next_call()
            return None
        self.advance()
        if self.expect_punct("(") is None:
            self.skip_to_next_call()
            return None
        pairs = self.parse_object()
        if pairs is None:
            self.skip_to_next_call()
            return None
        offset = SEQUENTIAL
        tok = self.peek()
        if tok.kind == "punct" and tok.text == ",":
            self.advance()
            offset = self.parse_offset()
        if self.expect_punct(")") is None:
            self.skip_to_next_call()
        entry = self.build_entry(pairs)
        if entry is None:
            return None
        return replace(entry, offset=offset)

    def parse_offset(self) -> Offset:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if value < 0:
                self.error(tok, "BAD_OFFSET", "absolute offsets must be >= 0 ms")
                return SEQUENTIAL
            return Offset.absolute(value)
        if tok.kind == "string":
            self.advance()
            m = _RELATIVE_OFFSET_RE.match(_unquote(tok.text))
            if m:
                sign = -1.0 if m.group(1) == "-" else 1.0
                return Offset.relative(sign * float(m.group(2)))
            self.error(tok, "BAD_OFFSET", f"offset string must look like '-=200' or '+=200', got {tok.text}")
            return SEQUENTIAL
        self.error(tok, "BAD_OFFSET", f"offset must be a number or '-='/'+=' string, found {tok.text!r}")
        return SEQUENTIAL

    def parse_object(self) -> Optional[list[tuple[_Token, object]]]:
        if self.expect_punct("{") is None:
            return None
        pairs: list[tuple[_Token, object]] = []
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "}":
                self.advance()
                return pairs
            if tok.kind == "eof":
                self.error(tok, "PARSE_ERROR", "unterminated object literal")
                return pairs
            key = self.parse_key()
            if key is None:
                return pairs
            if self.expect_punct(":") is None:
                return pairs
            value = self.parse_value()
            if value is None:
                return pairs
            pairs.append((key, value))
            tok = self.peek()
            if tok.kind == "punct" and tok.text == ",":
                self.advance()
            elif not (tok.kind == "punct" and tok.text == "}"):
                self.error(tok, "PARSE_ERROR", f"expected ',' or '}}' in object, found {tok.text or 'end of input'!r}")
                return pairs

    def parse_key(self) -> Optional[_Token]:
        tok = self.peek()
        if tok.kind == "ident":
            return self.advance()
        if tok.kind == "string":
            raw = self.advance()
            return _Token("ident", _unquote(raw.text), raw.start, raw.end, raw.line, raw.col)
        self.error(tok, "PARSE_ERROR", f"expected property name, found {tok.text or 'end of input'!r}")
        return None

    def parse_value(self) -> Optional[object]:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return float(tok.text)
        if tok.kind == "string":
            self.advance()
            return _unquote(tok.text)
        if tok.kind == "ident" and tok.text in ("true", "false"):
            self.advance()
            return tok.text == "true"
        if tok.kind == "ident" and tok.text in ("stagger", "anime"):
            return self.parse_stagger()
        if tok.kind == "punct" and tok.text == "[":
            return self.parse_array()
        self.error(tok, "PARSE_ERROR", f"unsupported value {tok.text or 'end of input'!r}")
        return None

    def parse_stagger(self) -> Optional[Stagger]:
        tok = self.advance()
        if tok.text == "anime":
            if self.expect_punct(".") is None:
                return None
            fn = self.peek()
            if fn.kind != "ident" or fn.text != "stagger":
                self.error(fn, "PARSE_ERROR", f"expected 'stagger', found {fn.text!r}")
                return None
            self.advance()
        if self.expect_punct("(") is None:
            return None
        num = self.peek()
        if num.kind != "number":
            self.error(num, "PARSE_ERROR", f"stagger needs a numeric step, found {num.text!r}")
            return None
        self.advance()
        if self.expect_punct(")") is None:
            return None
        step = float(num.text)
        if step < 0:
            self.error(num, "BAD_VALUE", "stagger step must be >= 0")
            step = 0.0
        return Stagger(step)

    def parse_array(self) -> Optional[list]:
        self.advance()  # '['
        items: list = []
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "]":
                self.advance()
                return items
            if tok.kind == "eof":
                self.error(tok, "PARSE_ERROR", "unterminated array")
                return items
            value = self.parse_value()
            if value is None:
                return items
            items.append(value)
            tok = self.peek()
            if tok.kind == "punct" and tok.text == ",":
                self.advance()
            elif not (tok.kind == "punct" and tok.text == "]"):
                self.error(tok, "PARSE_ERROR", f"expected ',' or ']' in array, found {tok.text or 'end of input'!r}")
                return items

    # --- entry construction ---

    def parse_unit_value(self, key: _Token, prop: str, raw: object) -> Optional[tuple[float, Unit]]:
        if isinstance(raw, bool) or isinstance(raw, (Stagger, list)):
            self.error(key, "BAD_VALUE", f"{prop} values must be numbers or unit strings")
            return None
        if isinstance(raw, float):
            if prop in _SCALAR_PROPERTIES:
                return raw, Unit.SCALAR
            if prop == "rotate":
                return raw, Unit.DEG
            return raw, Unit.PX
        m = _UNIT_VALUE_RE.match(str(raw))
        if not m:
            self.error(key, "BAD_VALUE", f"cannot read {prop} value {raw!r}")
            return None
        number = float(m.group(1))
        suffix = m.group(2)
        if suffix == "%":
            if prop not in _PERCENT_OK:
                self.error(key, "BAD_VALUE", f"percent values are not allowed on {prop}")
                return None
            return number, Unit.PERCENT
        if suffix == "deg":
            if prop != "rotate":
                self.error(key, "BAD_VALUE", f"'deg' only applies to rotate, not {prop}")
                return None
            return number, Unit.DEG
        if suffix == "px":
            if prop not in _PX_PROPERTIES:
                self.error(key, "BAD_VALUE", f"'px' does not apply to {prop}")
                return None
            return number, Unit.PX
        # bare numeric string: same defaulting as a bare number
        return self.parse_unit_value(key, prop, number)

    def parse_property(self, key: _Token, raw: object) -> Optional[PropertySpec]:
        prop = key.text
        if isinstance(raw, list):
            if len(raw) == 0:
                self.error(key, "BAD_VALUE", f"{prop} array needs at least one value")
                return None
            if len(raw) == 1:
                self.error(
                    key,
                    "FROM_TO_SINGLE",
                    f"{prop} single-element array treated as a bare 'to' value",
                    Severity.WARNING,
                )
                return self.parse_property(key, raw[0])
            if len(raw) > 2:
                self.error(
                    key,
                    "FROM_TO_EXTRA",
                    f"{prop} keyframe array has {len(raw)} values; from-to format keeps the first two "
                    f"and the element will not end at the final listed value",
                    Severity.WARNING,
                )
            first = self.parse_unit_value(key, prop, raw[0])
            second = self.parse_unit_value(key, prop, raw[1])
            if first is None or second is None:
                return None
            if first[1] is not second[1]:
                self.error(key, "UNIT_MISMATCH", f"{prop} mixes units {first[1].value} and {second[1].value}")
                return None
            return PropertySpec(to=second[0], from_value=first[0], unit=first[1])
        parsed = self.parse_unit_value(key, prop, raw)
        if parsed is None:
            return None
        return PropertySpec(to=parsed[0], from_value=None, unit=parsed[1])

    def build_entry(self, pairs: list[tuple[_Token, object]]) -> Optional[TimelineEntry]:
        targets: Optional[str] = None
        properties: dict[str, PropertySpec] = {}
        duration = DEFAULT_DURATION
        delay: Union[float, Stagger] = 0.0
        easing = DEFAULT_EASING
        loop: Union[bool, int] = False
        direction = "normal"
        anchor = pairs[0][0] if pairs else self.peek()

        for key, raw in pairs:
            name = key.text
            if name == "targets":
                if isinstance(raw, str) and raw.strip():
                    targets = raw.strip()
                else:
                    self.error(key, "BAD_TARGETS", "targets must be a non-empty selector string")
            elif name in ANIMATABLE_PROPERTIES:
                spec = self.parse_property(key, raw)
                if spec is not None:
                    properties[name] = spec
            elif name == "duration":
                if isinstance(raw, float) and raw > 0:
                    duration = raw
                else:
                    self.error(key, "BAD_VALUE", f"duration must be a positive number, got {raw!r}")
            elif name == "delay":
                if isinstance(raw, Stagger):
                    delay = raw
                elif isinstance(raw, float) and not isinstance(raw, bool) and raw >= 0:
                    delay = raw
                else:
                    self.error(key, "BAD_VALUE", f"delay must be >= 0 ms or stagger(step), got {raw!r}")
            elif name == "easing":
                if isinstance(raw, str) and raw in EASING_NAMES:
                    easing = raw
                else:
                    self.error(key, "UNKNOWN_EASING", f"unknown easing {raw!r}")
            elif name == "loop":
                if isinstance(raw, bool):
                    loop = raw
                elif isinstance(raw, float) and raw >= 1 and raw == int(raw):
                    loop = int(raw)
                else:
                    self.error(key, "BAD_VALUE", f"loop must be true/false or a positive count, got {raw!r}")
            elif name == "direction":
                if raw in ("normal", "alternate"):
                    direction = str(raw)
                else:
                    self.error(key, "BAD_VALUE", f"direction must be 'normal' or 'alternate', got {raw!r}")
            else:
                self.error(key, "UNSUPPORTED_PROPERTY", f"property {name!r} is outside the supported subset")

        if targets is None:
            self.error(anchor, "BAD_TARGETS", "entry is missing a 'targets' selector")
            return None
        if not properties:
            self.error(anchor, "NO_PROPERTIES", "entry animates no supported property")
            return None
        return TimelineEntry(
            targets=targets,
            properties=properties,
            duration=duration,
            delay=delay,
            easing=easing,
            loop=loop,
            direction=direction,
        )


def parse(source: str, strict: bool = False) -> TimelineProgram:
    """Parse DSL text. Total: always returns a program; with strict=True, raises
    ParseError when any severity=error diagnostic was produced."""
    try:
        program = _Parser(source).parse_program()
    except RecursionError:
        program = TimelineProgram(
            entries=[],
            diagnostics=[Diagnostic(Severity.ERROR, "PARSE_ERROR", "nesting too deep", (0, 0), 1, 1)],
        )
    if strict and program.errors:
        raise ParseError(program.errors)
    return program


# --- serializer ----------------------------------------------------------------


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _format_property_value(spec: PropertySpec) -> str:
    def one(v: float) -> str:
        if spec.unit is Unit.PERCENT:
            return f"'{_format_number(v)}%'"
        return _format_number(v)

    if spec.from_value is None:
        return one(spec.to)
    return f"[{one(spec.from_value)}, {one(spec.to)}]"


def serialize_entry(entry: TimelineEntry) -> str:
    lines = [f"  targets: '{entry.targets}'"]
    for name in ANIMATABLE_PROPERTIES:
        if name in entry.properties:
            lines.append(f"  {name}: {_format_property_value(entry.properties[name])}")
    lines.append(f"  duration: {_format_number(entry.duration)}")
    if isinstance(entry.delay, Stagger):
        lines.append(f"  delay: stagger({_format_number(entry.delay.step)})")
    elif entry.delay != 0:
        lines.append(f"  delay: {_format_number(entry.delay)}")
    lines.append(f"  easing: '{entry.easing}'")
    if entry.loop is True:
        lines.append("  loop: true")
    elif entry.loop is not False:
        lines.append(f"  loop: {entry.loop}")
    if entry.direction == "alternate":
        lines.append("  direction: 'alternate'")
    body = ",\n".join(lines)
    if entry.offset.kind == "absolute":
        return f".add({{\n{body}\n}}, {_format_number(entry.offset.value)})"
    if entry.offset.kind == "relative":
        sign = "-" if entry.offset.value < 0 else "+"
        return f".add({{\n{body}\n}}, '{sign}={_format_number(abs(entry.offset.value))}')"
    return f".add({{\n{body}\n}})"


def serialize(program: TimelineProgram) -> str:
    """Canonical text form; parse(serialize(p)) is structurally identical to p."""
    if program.errors:
        raise NonCanonicalizable(
            "program has error diagnostics: " + "; ".join(d.format() for d in program.errors)
        )
    parts = ["timeline"]
    parts.extend(serialize_entry(e) for e in program.entries)
    return "\n".join(parts) + ";\n"


# --- scheduling cursor (shared with the interpreter) -----------------------------


def entry_starts(
    program: TimelineProgram, env: SelectorEnv
) -> list[tuple[TimelineEntry, list[str], float]]:
    """Resolved (entry, matched ids, absolute start ms) triples in source order.

    Unmatched entries are skipped and contribute nothing to the cursor. The cursor
    after each entry is start + extent (worst-case delay plus finite periods).
    """
    out: list[tuple[TimelineEntry, list[str], float]] = []
    cursor = 0.0
    for entry in program.entries:
        matched = env.resolve(entry.targets)
        if not matched:
            continue
        if entry.offset.kind == "absolute":
            start = entry.offset.value
        elif entry.offset.kind == "relative":
            start = cursor + entry.offset.value
        else:
            start = cursor
        start = max(start, 0.0)
        out.append((entry, matched, start))
        cursor = start + entry.extent(len(matched))
    return out


# --- structured patch -------------------------------------------------------------


def merge_patch(
    program: TimelineProgram,
    element_id: str,
    snippet: TimelineProgram,
    env: Optional[SelectorEnv] = None,
) -> TimelineProgram:
    """Replace every entry animating ``element_id`` with the snippet's entries.

    Locality is the contract: every other element's sampled motion is unchanged at
    all t. Entries the edit would shift (sequential chains after a replacement whose
    extent changed) get pinned to their originally resolved absolute start; entries
    that need no pinning serialize byte-identically. Shared multi-element entries are
    split: a clone keeps the remaining members, the snippet covers element_id.
    """
    return merge_patch_multi(program, {element_id}, snippet, env)


def merge_patch_multi(
    program: TimelineProgram,
    element_ids: set[str],
    snippet: TimelineProgram,
    env: Optional[SelectorEnv] = None,
) -> TimelineProgram:
    """merge_patch generalized to a set of elements (interactive edits can touch
    several at once, e.g. every text letter). Snippet entries must resolve to a
    nonempty subset of element_ids."""
    if snippet.errors:
        raise ParseError(snippet.errors)
    if not snippet.entries:
        raise NoMatchingEntries("snippet has no entries")
    if not element_ids:
        raise NoMatchingEntries("no target elements given")
    if env is None:
        merged_ids = SelectorEnv.from_program(program)
        for element_id in sorted(element_ids):
            if element_id not in merged_ids.ids:
                merged_ids.ids.append(element_id)
        env = merged_ids

    for entry in snippet.entries:
        resolved = env.resolve(entry.targets)
        if not resolved or not set(resolved) <= element_ids:
            raise SnippetTargetsOthers(
                f"snippet entry targets {entry.targets!r} which resolves to {resolved}, "
                f"expected a nonempty subset of {sorted(element_ids)}"
            )

    starts = entry_starts(program, env)
    original_start = {id(entry): start for entry, _, start in starts}
    matched_ids = {id(entry): matched for entry, matched, _ in starts}

    match_indices = [
        i
        for i, entry in enumerate(program.entries)
        if element_ids & set(matched_ids.get(id(entry), []))
    ]
    if not match_indices:
        raise NoMatchingEntries(f"no entry targets any of {sorted(element_ids)}")

    first_index = match_indices[0]
    new_entries: list[TimelineEntry] = []
    kept_original: dict[int, float] = {}  # position in new_entries -> original start

    def clones_for_others(entry: TimelineEntry, pin_start: float, keep_offset: bool) -> list[TimelineEntry]:
        """Remaining members of a shared entry. Stagger delays are indexed by match
        order, so splitting must freeze each survivor's own delay in a per-member
        clone; plain delays keep one comma-selector clone."""
        matched = matched_ids[id(entry)]
        others = [i for i in matched if i not in element_ids]
        if not others:
            return []
        if isinstance(entry.delay, Stagger):
            clones = []
            for member in others:
                k = matched.index(member)
                offset = entry.offset if keep_offset and not clones else Offset.absolute(pin_start)
                clones.append(
                    replace(entry, targets=f"#{member}", delay=entry.delay.step * k, offset=offset)
                )
            return clones
        selector = ",".join(f"#{i}" for i in others)
        offset = entry.offset if keep_offset else Offset.absolute(pin_start)
        return [replace(entry, targets=selector, offset=offset)]

    for i, entry in enumerate(program.entries):
        if i not in match_indices:
            if id(entry) in original_start:
                kept_original[len(new_entries)] = original_start[id(entry)]
            new_entries.append(entry)
            continue
        start = original_start[id(entry)]
        if i == first_index:
            clones = clones_for_others(entry, start, keep_offset=True)
            for clone in clones:
                kept_original[len(new_entries)] = start
                new_entries.append(clone)
            lead_offset = Offset.absolute(start) if clones else entry.offset
            for j, patch_entry in enumerate(snippet.entries):
                if j == 0:
                    new_entries.append(replace(patch_entry, offset=lead_offset))
                else:
                    new_entries.append(patch_entry)
        else:
            for clone in clones_for_others(entry, start, keep_offset=False):
                kept_original[len(new_entries)] = start
                new_entries.append(clone)

    # pinning pass: recompute the new chain and pin any surviving original entry
    # whose start would drift from its pre-merge schedule
    cursor = 0.0
    pinned: list[TimelineEntry] = []
    for pos, entry in enumerate(new_entries):
        matched = env.resolve(entry.targets)
        if not matched:
            pinned.append(entry)
            continue
        if entry.offset.kind == "absolute":
            start = entry.offset.value
        elif entry.offset.kind == "relative":
            start = cursor + entry.offset.value
        else:
            start = cursor
        start = max(start, 0.0)
        if pos in kept_original and abs(start - kept_original[pos]) > 1e-9:
            start = kept_original[pos]
            entry = replace(entry, offset=Offset.absolute(start))
        pinned.append(entry)
        cursor = start + entry.extent(len(matched))

    return TimelineProgram(entries=pinned, diagnostics=[])
