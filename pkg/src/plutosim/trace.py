"""Command records and the text trace format.

One command per line::

    <issue_time_ns> <KIND> <args...>

Blank lines and ``#`` comments are ignored. Issue times are written with
``repr`` so that parse -> serialize -> parse is the identity. Argument layout
per kind:

=========  ==========================================================
ACT        subarray row
PRE        subarray
RD         subarray row
WR         subarray row hexdata
RBM        src dst dst_row RB|OUT
ROW_SWEEP  lut first n src width mask tags stall   (``tags`` is ``-`` or
           a comma separated list of row comparands)
TRA        subarray row_a row_b row_c
AAP        subarray src dst COPY|NOT
SHIFT      subarray src dst amount L|R width
=========  ==========================================================

Any other command that was stretched by the scheduler carries a trailing
``stall=<ns>`` field.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import TraceFormatError

KINDS = ("ACT", "PRE", "RD", "WR", "AAP", "RBM", "ROW_SWEEP", "TRA", "SHIFT")


@dataclass(eq=True)
class Command:
    kind: str
    args: tuple
    issue_time: Optional[float] = None
    stall: float = 0.0
    data: Optional[bytes] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TraceFormatError(f"unknown command kind {self.kind!r}")
        if self.kind == "ROW_SWEEP" and self.args[2] < 1:
            raise TraceFormatError("ROW_SWEEP needs a row count >= 1")
        if self.kind == "TRA" and len(self.args) != 4:
            raise TraceFormatError("TRA carries exactly three row addresses")

    @property
    def subarrays(self) -> tuple[int, ...]:
        """Every subarray whose state this command touches."""
        if self.kind == "RBM":
            return (self.args[0], self.args[1])
        if self.kind == "ROW_SWEEP":
            return (self.args[0], self.args[3])
        return (self.args[0],)

    # ROW_SWEEP helpers
    @property
    def tags(self) -> Optional[tuple[int, ...]]:
        return self.args[6] if self.kind == "ROW_SWEEP" else None


def act(sub: int, row: int) -> Command:
    return Command("ACT", (sub, row))


def pre(sub: int) -> Command:
    return Command("PRE", (sub,))


def rd(sub: int, row: int) -> Command:
    return Command("RD", (sub, row))


def wr(sub: int, row: int, data: bytes) -> Command:
    return Command("WR", (sub, row), data=bytes(data))


def rbm(src: int, dst: int, dst_row: int, buf: str = "RB") -> Command:
    return Command("RBM", (src, dst, dst_row, buf))


def row_sweep(lut: int, first: int, n: int, src: int, width: int, mask: int,
              tags: Optional[Iterable[int]] = None) -> Command:
    return Command("ROW_SWEEP", (lut, first, n, src, width, mask,
                                 None if tags is None else tuple(int(t) for t in tags)))


def tra(sub: int, a: int, b: int, c: int) -> Command:
    return Command("TRA", (sub, a, b, c))


def aap(sub: int, src: int, dst: int, negate: bool = False) -> Command:
    return Command("AAP", (sub, src, dst, "NOT" if negate else "COPY"))


def shift(sub: int, src: int, dst: int, amount: int, left: bool, width: int) -> Command:
    return Command("SHIFT", (sub, src, dst, amount, "L" if left else "R", width))


# -- text form ---------------------------------------------------------------

def format_command(cmd: Command) -> str:
    t = "-" if cmd.issue_time is None else repr(float(cmd.issue_time))
    parts = [t, cmd.kind]
    if cmd.kind == "ROW_SWEEP":
        lut, first, n, src, width, mask, tags = cmd.args
        tag_text = "-" if tags is None else ",".join(str(x) for x in tags)
        parts += [str(lut), str(first), str(n), str(src), str(width), str(mask),
                  tag_text, repr(float(cmd.stall))]
    else:
        parts += [str(a) for a in cmd.args]
        if cmd.kind == "WR":
            parts.append(cmd.data.hex())
        if cmd.stall:
            parts.append("stall=" + repr(float(cmd.stall)))
    return " ".join(parts)


_INT_ARITY = {"ACT": 2, "PRE": 1, "RD": 2, "WR": 2, "RBM": 3, "TRA": 4, "AAP": 3, "SHIFT": 4}


def parse_command(line: str, lineno: int = 0) -> Command:
    fields = line.split()
    if len(fields) < 2:
        raise TraceFormatError(f"line {lineno}: expected '<time> <KIND> <args>'")
    t_text, kind, rest = fields[0], fields[1], fields[2:]
    try:
        issue = None if t_text == "-" else float(t_text)
        if kind == "ROW_SWEEP":
            if len(rest) != 8:
                raise ValueError("ROW_SWEEP takes 8 arguments")
            ints = tuple(int(x) for x in rest[:6])
            tags = None if rest[6] == "-" else tuple(int(x) for x in rest[6].split(","))
            return Command(kind, ints + (tags,), issue, float(rest[7]))
        if kind not in _INT_ARITY:
            raise ValueError(f"unknown kind {kind!r}")
        stall = 0.0
        if rest and rest[-1].startswith("stall="):
            stall = float(rest.pop()[6:])
        n_int = _INT_ARITY[kind]
        ints = tuple(int(x) for x in rest[:n_int])
        tail = rest[n_int:]
        if len(ints) != n_int:
            raise ValueError(f"{kind} needs {n_int} integer arguments")
        if kind == "WR":
            if len(tail) != 1:
                raise ValueError("WR needs a hex payload")
            return Command(kind, ints, issue, data=bytes.fromhex(tail[0]))
        if kind == "RBM":
            if tail not in (["RB"], ["OUT"]):
                raise ValueError("RBM buffer must be RB or OUT")
            return Command(kind, ints + (tail[0],), issue)
        if kind == "AAP":
            if tail not in (["COPY"], ["NOT"]):
                raise ValueError("AAP mode must be COPY or NOT")
            return Command(kind, ints + (tail[0],), issue, stall)
        if kind == "SHIFT":
            if len(tail) != 2 or tail[0] not in ("L", "R"):
                raise ValueError("SHIFT needs direction L|R and a lane width")
            return Command(kind, ints + (tail[0], int(tail[1])), issue, stall)
        if tail:
            raise ValueError(f"trailing fields {tail}")
        return Command(kind, ints, issue, stall)
    except (ValueError, TraceFormatError) as exc:
        raise TraceFormatError(f"line {lineno}: {exc}") from None


def dumps(commands: Iterable[Command]) -> str:
    return "".join(format_command(c) + "\n" for c in commands)


def loads(text: str) -> list[Command]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_command(line, lineno))
    return out


def write_trace(path, commands: Iterable[Command]) -> None:
    Path(path).write_text(dumps(commands), encoding="utf-8")


def read_trace(path) -> list[Command]:
    return loads(Path(path).read_text(encoding="utf-8"))
