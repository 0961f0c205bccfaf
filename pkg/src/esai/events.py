"""Event data types, validation and the plain-text event file format.

An event file is UTF-8 text with LF line endings::

    346 260
    100,5,7,1
    130,6,7,-1,OA

The header holds ``width height``. Each body line is ``t,x,y,p`` or
``t,x,y,p,label`` with ``t`` in integer microseconds and ``p`` in {1, -1}.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class FormatError(ValueError):
    """A file does not follow its declared text or binary layout."""


class ValidationError(ValueError):
    """Data parsed fine but breaks a domain invariant."""


class EventLabel(enum.IntEnum):
    """Provenance of a simulated event."""

    SignalOA = 0
    NoiseOO = 1
    NoiseAA = 2
    NoisePhysical = 3

    @property
    def code(self) -> str:
        return _LABEL_CODES[self]

    @classmethod
    def from_code(cls, code: str) -> "EventLabel":
        try:
            return _CODE_LABELS[code]
        except KeyError:
            raise FormatError(f"unknown event label {code!r}") from None


_LABEL_CODES = {
    EventLabel.SignalOA: "OA",
    EventLabel.NoiseOO: "OO",
    EventLabel.NoiseAA: "AA",
    EventLabel.NoisePhysical: "N",
}
_CODE_LABELS = {v: k for k, v in _LABEL_CODES.items()}


class Event(NamedTuple):
    t: int
    x: int
    y: int
    p: int


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype).reshape(-1)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-ordered events of one sensor, stored column-wise.

    Arrays are copied and made read-only on construction, so a stream can be
    shared between workers without copying.
    """

    width: int
    height: int
    t: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    x: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    p: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int8))
    labels: np.ndarray | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "t", _frozen(self.t, np.int64))
        object.__setattr__(self, "x", _frozen(self.x, np.int64))
        object.__setattr__(self, "y", _frozen(self.y, np.int64))
        object.__setattr__(self, "p", _frozen(self.p, np.int8))
        if self.labels is not None:
            object.__setattr__(self, "labels", _frozen(self.labels, np.int8))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event columns must have equal length")

    @classmethod
    def from_events(cls, width, height, events: Sequence[Event | tuple],
                    labels: Sequence[EventLabel] | None = None) -> "EventStream":
        arr = np.array([tuple(e) for e in events], dtype=np.int64).reshape(-1, 4)
        lab = None if labels is None else np.array([int(l) for l in labels], np.int8)
        return cls(width, height, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], lab)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for t, x, y, p in zip(self.t.tolist(), self.x.tolist(),
                              self.y.tolist(), self.p.tolist()):
            yield Event(t, x, y, p)

    def __getitem__(self, i) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        if (self.width, self.height) != (other.width, other.height):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        same = all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("t", "x", "y", "p"))
        if self.labels is not None:
            same = same and np.array_equal(self.labels, other.labels)
        return same

    __hash__ = None

    def label_of(self, i) -> EventLabel | None:
        return None if self.labels is None else EventLabel(int(self.labels[i]))

    def select(self, mask) -> "EventStream":
        """Sub-stream of the events where ``mask`` is true (order kept)."""
        mask = np.asarray(mask)
        labels = None if self.labels is None else self.labels[mask]
        return EventStream(self.width, self.height, self.t[mask], self.x[mask],
                           self.y[mask], self.p[mask], labels, self.warnings)

    def with_label(self, label: EventLabel) -> "EventStream":
        if self.labels is None:
            raise ValueError("stream carries no labels")
        return self.select(self.labels == int(label))


def validate_stream(stream: EventStream) -> list[str]:
    """Return one message per broken invariant; an empty list means valid."""
    out = []
    t, x, y, p = stream.t, stream.x, stream.y, stream.p
    for i in np.flatnonzero((p != 1) & (p != -1)):
        out.append(f"event {i}: polarity rule: p={int(p[i])} is not +1 or -1")
    for i in np.flatnonzero((x < 0) | (x >= stream.width)):
        out.append(f"event {i}: bounds rule: x={int(x[i])} outside [0, {stream.width})")
    for i in np.flatnonzero((y < 0) | (y >= stream.height)):
        out.append(f"event {i}: bounds rule: y={int(y[i])} outside [0, {stream.height})")
    for i in np.flatnonzero(t < 0):
        out.append(f"event {i}: timestamp rule: t={int(t[i])} is negative")
    if len(t) > 1:
        for i in np.flatnonzero(np.diff(t) < 0) + 1:
            out.append(f"event {i}: sortedness rule: t={int(t[i])} < previous t={int(t[i - 1])}")
    if stream.labels is not None:
        if len(stream.labels) != len(t):
            out.append(f"labels: length {len(stream.labels)} != {len(t)} events")
        else:
            bad = ~np.isin(stream.labels, [int(k) for k in EventLabel])
            for i in np.flatnonzero(bad):
                out.append(f"event {i}: label rule: unknown label {int(stream.labels[i])}")
    return sorted(out, key=_violation_index)


def _violation_index(msg: str):
    head = msg.split(":", 1)[0]
    return int(head.split()[1]) if head.startswith("event ") else -1


def load_events(path) -> EventStream:
    """Parse an event text file; raise on malformed or invalid content."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: missing header line")
    header = lines[0].split(" ")
    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise FormatError(f"{path}: line 1: header must be '<width> <height>', got {lines[0]!r}")
    width, height = int(header[0]), int(header[1])

    n = len(lines) - 1
    cols = np.zeros((n, 4), np.int64)
    labels = None
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        parts = line.split(",")
        if len(parts) not in (4, 5):
            raise FormatError(f"{path}: line {lineno}: expected 4 or 5 fields, got {len(parts)}")
        try:
            t, x, y, p = (int(v) for v in parts[:4])
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: non-integer field in {line!r}") from None
        if len(parts) == 5:
            if labels is None:
                if i > 0:
                    raise FormatError(f"{path}: line {lineno}: label column appears mid-file")
                labels = np.zeros(n, np.int8)
            labels[i] = EventLabel.from_code(parts[4])
        elif labels is not None:
            raise FormatError(f"{path}: line {lineno}: missing label column")
        if p not in (1, -1):
            raise ValidationError(f"{path}: line {lineno}: polarity must be 1 or -1, got {p}")
        if not (0 <= x < width and 0 <= y < height):
            raise ValidationError(
                f"{path}: line {lineno}: pixel ({x}, {y}) outside {width}x{height} sensor")
        if t < 0:
            raise ValidationError(f"{path}: line {lineno}: negative timestamp {t}")
        if i > 0 and t < cols[i - 1, 0]:
            raise ValidationError(
                f"{path}: line {lineno}: timestamp {t} precedes previous {cols[i - 1, 0]}")
        cols[i] = t, x, y, p
    return EventStream(width, height, cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3], labels)


def save_events(stream: EventStream, path) -> None:
    """Write ``stream`` in the event text format (round-trips with load_events)."""
    problems = validate_stream(stream)
    if problems:
        raise ValidationError(f"refusing to save invalid stream: {problems[0]}")
    out = [f"{stream.width} {stream.height}"]
    rows = zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist())
    if stream.labels is None:
        out.extend(f"{t},{x},{y},{p}" for t, x, y, p in rows)
    else:
        codes = [_LABEL_CODES[EventLabel(k)] for k in stream.labels.tolist()]
        out.extend(f"{t},{x},{y},{p},{c}" for (t, x, y, p), c in zip(rows, codes))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
