"""Trace parsing and serialization.

Two line formats are accepted:

* simple: ``<thread> <op> <target> [@<location>]`` with ``T[0-9]+`` threads,
  ops r/w/acq/rel/fork/join, ``#`` comments, blank lines ignored.
* std: ``<thread>|<op>(<target>)|<location>`` with case-insensitive ops.

Parsed line numbers become code locations when no explicit location is given.
"""

from __future__ import annotations

import io
import re

from .model import (ACQUIRE, FORK, JOIN, KINDS, READ, RELEASE, RawEvent,
                    Trace, WRITE, build_trace)

SIMPLE = "simple"
STD = "std"

_THREAD_RE = re.compile(r"T[0-9]+\Z")
_STD_RE = re.compile(r"([^|]+)\|([A-Za-z]+)\(([^)]*)\)\|(.*)\Z")

_OP_ALIASES = {
    "r": READ, "read": READ,
    "w": WRITE, "write": WRITE,
    "acq": ACQUIRE, "acquire": ACQUIRE, "lock": ACQUIRE,
    "rel": RELEASE, "release": RELEASE, "unlock": RELEASE,
    "fork": FORK, "join": JOIN,
}


class ParseError(Exception):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}" if line else reason)


def _decode(data) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(None, f"input is not UTF-8: {exc}") from None
    return data


def parse_raw_events(text, fmt=SIMPLE) -> list[RawEvent]:
    raw = []
    for lineno, line in enumerate(_decode(text).splitlines(), 1):
        line = line.split("#", 1)[0].strip() if fmt == SIMPLE else line.strip()
        if not line:
            continue
        if fmt == SIMPLE:
            parts = line.split()
            if len(parts) not in (3, 4):
                raise ParseError(lineno, f"expected '<thread> <op> <target>', got {line!r}")
            tname, op, target = parts[:3]
            location = None
            if len(parts) == 4:
                if not parts[3].startswith("@"):
                    raise ParseError(lineno, f"expected '@<location>', got {parts[3]!r}")
                location = parts[3][1:]
            if not _THREAD_RE.match(tname):
                raise ParseError(lineno, f"bad thread name {tname!r}")
            op_l = op.lower()
            if op_l not in _OP_ALIASES:
                raise ParseError(lineno, f"unknown op {op!r}")
            raw.append(RawEvent(tname, _OP_ALIASES[op_l],
                                target, location or f"L{lineno}"))
        elif fmt == STD:
            m = _STD_RE.match(line)
            if not m:
                raise ParseError(lineno, f"expected '<thread>|<op>(<target>)|<loc>', got {line!r}")
            tname, op, target, location = (g.strip() for g in m.groups())
            op_l = op.lower()
            if op_l not in _OP_ALIASES:
                raise ParseError(lineno, f"unknown op {op!r}")
            raw.append(RawEvent(tname, _OP_ALIASES[op_l],
                                target, location or f"L{lineno}"))
        else:
            raise ValueError(f"unknown format {fmt!r}")
    if not raw:
        raise ParseError(None, "empty trace")
    return raw


def parse(source, fmt=SIMPLE, synthesize_init=True) -> Trace:
    """Parse a byte/str stream or value into a validated trace."""
    if hasattr(source, "read"):
        source = source.read()
    return build_trace(parse_raw_events(source, fmt), synthesize_init=synthesize_init)


def _event_line(trace, ev) -> str:
    loc = f" @{ev.location}" if ev.location else ""
    return f"{ev.thread_name} {ev.kind} {ev.target}{loc}"


def emit_witness(t_star, sink, trace: Trace | None = None) -> None:
    """One simple-format line per event, annotated with original indices.

    Synthesized init writes are emitted as comments so the output stays
    parseable as the real-event reordering.
    """
    out = io.StringIO()
    for ev in t_star:
        if trace is not None and trace.is_init(ev.pos):
            out.write(f"# (init) {ev.thread_name} {ev.kind} {ev.target}\n")
            continue
        label = trace.display_label(ev.pos) if trace is not None else f"e{ev.index}"
        out.write(f"{_event_line(trace, ev)} # {label}\n")
    data = out.getvalue()
    if hasattr(sink, "write"):
        try:
            sink.write(data)
        except TypeError:
            sink.write(data.encode("utf-8"))
    else:
        raise TypeError("sink must be a writable stream")


def emit_trace(trace: Trace, sink) -> None:
    """Serialize the real (non-init) events in simple format."""
    lines = []
    for ev in trace.events:
        if trace.is_init(ev.pos):
            continue
        lines.append(_event_line(trace, ev))
    data = "\n".join(lines) + "\n"
    try:
        sink.write(data)
    except TypeError:
        sink.write(data.encode("utf-8"))
