"""Problem specifications and local checkers.

Two kinds of problems are supported: grid problems, given by a finite label
alphabet together with the allowed ordered label pairs on horizontal and
vertical edges of an oriented torus, and cycle problems, given by the set of
allowed windows of length 2r+1 on a directed cycle.

Axis convention for grids: ``cells[y][x]``, axis 0 points north (increasing
y) and axis 1 points east (increasing x).  A horizontal pair is
(west_label, east_label), a vertical pair is (south_label, north_label).

All types are immutable after construction and the checkers are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

HALF_EDGE_ORDER = ("N", "E", "S", "W")
_TUPLE_SEP = ","


class ProblemSpecError(ValueError):
    """Raised for malformed or inconsistent problem specifications."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered, finite set of output label strings."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ProblemSpecError("alphabet must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ProblemSpecError("alphabet contains duplicate labels")
        if any(not isinstance(s, str) or not s for s in self.labels):
            raise ProblemSpecError("labels must be non-empty strings")

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _check_pairs(pairs, alphabet, axis):
    for pair in pairs:
        if len(pair) != 2:
            raise ProblemSpecError(f"{axis} entry {pair!r} is not a pair")
        for label in pair:
            if label not in alphabet:
                raise ProblemSpecError(f"unknown label {label!r} in {axis} pair {pair!r}")


@dataclass(frozen=True)
class GridLcl:
    """Radius-1 edge-checkable labelling problem on the oriented torus.

    A labelling is feasible iff every horizontally adjacent pair
    (west, east) is in ``horizontal`` and every vertically adjacent pair
    (south, north) is in ``vertical``.
    """

    alphabet: Alphabet
    horizontal: frozenset[tuple[str, str]]
    vertical: frozenset[tuple[str, str]]
    name: str = "grid-problem"

    def __post_init__(self):
        object.__setattr__(self, "horizontal", frozenset(tuple(p) for p in self.horizontal))
        object.__setattr__(self, "vertical", frozenset(tuple(p) for p in self.vertical))
        _check_pairs(self.horizontal, self.alphabet, "horizontal")
        _check_pairs(self.vertical, self.alphabet, "vertical")


@dataclass(frozen=True)
class CycleLcl:
    """Labelling problem on a directed cycle with checkability radius r.

    ``windows`` holds the feasible label sequences of length 2r+1, read in
    cycle direction and centred on the node being checked.
    """

    alphabet: Alphabet
    radius: int
    windows: frozenset[tuple[str, ...]]
    name: str = "cycle-problem"

    def __post_init__(self):
        if self.radius < 1:
            raise ProblemSpecError("radius must be >= 1")
        object.__setattr__(self, "windows", frozenset(tuple(w) for w in self.windows))
        width = 2 * self.radius + 1
        for w in self.windows:
            if len(w) != width:
                raise ProblemSpecError(f"window {w!r} does not have length {width}")
            for label in w:
                if label not in self.alphabet:
                    raise ProblemSpecError(f"unknown label {label!r} in window {w!r}")


@dataclass(frozen=True)
class LabelledGrid:
    """Complete output labelling of an n x n torus; indices wrap modulo n."""

    n: int
    cells: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if self.n < 3:
            raise ProblemSpecError("grid side must be >= 3")
        object.__setattr__(self, "cells", tuple(tuple(row) for row in self.cells))
        if len(self.cells) != self.n or any(len(row) != self.n for row in self.cells):
            raise ProblemSpecError("cells must form an n x n array")


@dataclass(frozen=True)
class Violation:
    """One local constraint failure: where, which axis, the offending labels."""

    location: tuple[int, int] | int
    axis: str  # "horizontal" | "vertical" | "window"
    detail: tuple[str, ...]


def check_grid(p: GridLcl, g: LabelledGrid) -> list[Violation]:
    """Return every violated edge constraint of g under p (empty iff feasible).

    Labels outside the alphabet are not an error; the pairs they form are
    simply not allowed, so they surface as ordinary violations.
    """
    violations = []
    n = g.n
    hz = p.horizontal
    vt = p.vertical
    cells = g.cells
    for y in range(n):
        row = cells[y]
        north = cells[(y + 1) % n]
        for x in range(n):
            a = row[x]
            east = row[(x + 1) % n]
            if (a, east) not in hz:
                violations.append(Violation((y, x), "horizontal", (a, east)))
            if (a, north[x]) not in vt:
                violations.append(Violation((y, x), "vertical", (a, north[x])))
    return violations


def check_cycle(p: CycleLcl, labels: Sequence[str]) -> list[Violation]:
    """Return one violation per index whose centred window is not allowed."""
    n = len(labels)
    r = p.radius
    if n <= 2 * r:
        raise ValueError(f"cycle of length {n} is too short for radius {r}")
    violations = []
    for i in range(n):
        window = tuple(labels[(i + d) % n] for d in range(-r, r + 1))
        if window not in p.windows:
            violations.append(Violation(i, "window", window))
    return violations


def format_half_edges(parts: Sequence[str]) -> str:
    """Render an (N, E, S, W) half-edge tuple as a single node label."""
    if all(len(s) == 1 for s in parts):
        return "".join(parts)
    return _TUPLE_SEP.join(parts)


def split_half_edges(label: str) -> tuple[str, str, str, str]:
    """Inverse of :func:`format_half_edges`."""
    parts = tuple(label.split(_TUPLE_SEP)) if _TUPLE_SEP in label else tuple(label)
    if len(parts) != 4:
        raise ProblemSpecError(f"label {label!r} is not a half-edge tuple")
    return parts  # type: ignore[return-value]


def encode_edge_lcl(
    edge_alphabet: Alphabet,
    node_rule: Callable[[tuple[str, str, str, str]], bool],
    agreement: str = "identity",
    name: str = "edge-problem",
) -> GridLcl:
    """Turn an edge-labelling problem into a node-labelling grid problem.

    Node labels are (N, E, S, W) tuples of half-edge labels accepted by
    ``node_rule``.  A horizontal pair is allowed when the west cell's E
    component agrees with the east cell's W component; vertical pairs relate
    the south cell's N component and the north cell's S component.
    Agreement is plain equality for ``"identity"`` (edge colourings: both
    endpoints name the same edge label) or in/out complement for
    ``"orientation"`` (one endpoint sees the edge incoming, the other
    outgoing).
    """
    if agreement not in ("identity", "orientation"):
        raise ProblemSpecError(f"unknown agreement mode {agreement!r}")
    tuples = [
        (a, b, c, d)
        for a in edge_alphabet.labels
        for b in edge_alphabet.labels
        for c in edge_alphabet.labels
        for d in edge_alphabet.labels
        if node_rule((a, b, c, d))
    ]
    if not tuples:
        raise ProblemSpecError("node rule rejects every half-edge tuple")
    labels = tuple(format_half_edges(t) for t in tuples)
    alphabet = Alphabet(labels)

    if agreement == "identity":
        agrees = lambda mine, theirs: mine == theirs
    else:
        if set(edge_alphabet.labels) != {"i", "o"}:
            raise ProblemSpecError("orientation agreement needs edge alphabet {'i','o'}")
        agrees = lambda mine, theirs: mine != theirs

    N, E, S, W = 0, 1, 2, 3
    horizontal = frozenset(
        (labels[i], labels[j])
        for i, ti in enumerate(tuples)
        for j, tj in enumerate(tuples)
        if agrees(ti[E], tj[W])
    )
    vertical = frozenset(
        (labels[i], labels[j])
        for i, ti in enumerate(tuples)
        for j, tj in enumerate(tuples)
        if agrees(ti[N], tj[S])
    )
    return GridLcl(alphabet=alphabet, horizontal=horizontal, vertical=vertical, name=name)


def decode_edge_labelling(g: LabelledGrid) -> dict[tuple[str, int, int], str]:
    """Recover per-edge labels from a grid labelled with half-edge tuples.

    Returns {("h", y, x): label} for the edge east of (y, x) and
    {("v", y, x): label} for the edge north of (y, x), taking each edge's
    label from the tuple component of its west/south endpoint.
    """
    out = {}
    n = g.n
    for y in range(n):
        for x in range(n):
            t = split_half_edges(g.cells[y][x])
            out[("v", y, x)] = t[0]
            out[("h", y, x)] = t[1]
    return out


# ---------------------------------------------------------------------------
# Built-in problem zoo


def _colour_labels(k: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(1, k + 1))


def _all_unequal_pairs(labels: Iterable[str]) -> frozenset[tuple[str, str]]:
    labels = tuple(labels)
    return frozenset((a, b) for a in labels for b in labels if a != b)


def _vertex_colouring(k: int) -> GridLcl:
    if k < 1:
        raise ProblemSpecError("colour count must be >= 1")
    labels = _colour_labels(k)
    pairs = _all_unequal_pairs(labels)
    return GridLcl(Alphabet(labels), pairs, pairs, name=f"vertex-{k}-colouring")


def _edge_colouring(k: int) -> GridLcl:
    if k < 4:
        raise ProblemSpecError("edge colouring on the torus needs >= 4 colours per node")
    return encode_edge_lcl(
        Alphabet(_colour_labels(k)),
        node_rule=lambda t: len(set(t)) == 4,
        agreement="identity",
        name=f"edge-{k}-colouring",
    )


def _x_orientation(degrees: Iterable[int]) -> GridLcl:
    xs = frozenset(degrees)
    if not xs or not xs <= {0, 1, 2, 3, 4}:
        raise ProblemSpecError("orientation in-degree set must be a non-empty subset of {0..4}")
    name = "orientation-" + "".join(str(d) for d in sorted(xs))
    return encode_edge_lcl(
        Alphabet(("i", "o")),
        node_rule=lambda t: t.count("i") in xs,
        agreement="orientation",
        name=name,
    )


def _grid_mis() -> GridLcl:
    # Maximal independent set, radius-1 normalised by enlarging the
    # alphabet: every out-of-set cell points at an in-set neighbour.
    labels = ("1", "0N", "0E", "0S", "0W")
    alphabet = Alphabet(labels)

    def h_ok(a, b):  # a west of b
        if a == "1" and b == "1":
            return False
        if a == "0E" and b != "1":
            return False
        if b == "0W" and a != "1":
            return False
        return True

    def v_ok(a, b):  # a south of b
        if a == "1" and b == "1":
            return False
        if a == "0N" and b != "1":
            return False
        if b == "0S" and a != "1":
            return False
        return True

    horizontal = frozenset((a, b) for a in labels for b in labels if h_ok(a, b))
    vertical = frozenset((a, b) for a in labels for b in labels if v_ok(a, b))
    return GridLcl(alphabet, horizontal, vertical, name="mis")


def _trivial_grid() -> GridLcl:
    a = Alphabet(("a",))
    pairs = frozenset({("a", "a")})
    return GridLcl(a, pairs, pairs, name="trivial")


def _cycle_colouring(k: int, name: str) -> CycleLcl:
    labels = _colour_labels(k)
    windows = frozenset(
        (a, b, c) for a in labels for b in labels for c in labels if a != b and b != c
    )
    return CycleLcl(Alphabet(labels), 1, windows, name=name)


def _mis_cycle() -> CycleLcl:
    labels = ("0", "1")
    windows = []
    for a in labels:
        for b in labels:
            for c in labels:
                independent = not (a == "1" and b == "1") and not (b == "1" and c == "1")
                maximal = (a, b, c) != ("0", "0", "0")
                if independent and maximal:
                    windows.append((a, b, c))
    return CycleLcl(Alphabet(labels), 1, frozenset(windows), name="mis-cycle")


def _trivial_cycle() -> CycleLcl:
    return CycleLcl(Alphabet(("0",)), 1, frozenset({("0", "0", "0")}), name="trivial-cycle")


def builtin(name: str, param=None) -> GridLcl | CycleLcl:
    """Instantiate a built-in problem by name.

    Parameterised names: ``vertex-colouring`` and ``edge-colouring`` take the
    colour count, ``x-orientation`` takes the set of allowed in-degrees.
    """
    if name == "vertex-colouring":
        return _vertex_colouring(int(param))
    if name == "edge-colouring":
        return _edge_colouring(int(param))
    if name == "x-orientation":
        return _x_orientation(param)
    if name == "mis":
        return _grid_mis()
    if name == "trivial":
        return _trivial_grid()
    if name == "two-colouring-cycle":
        return _cycle_colouring(2, "two-colouring-cycle")
    if name == "three-colouring-cycle":
        return _cycle_colouring(3, "three-colouring-cycle")
    if name == "mis-cycle":
        return _mis_cycle()
    if name == "trivial-cycle":
        return _trivial_cycle()
    raise ProblemSpecError(f"unknown builtin problem {name!r}")


# ---------------------------------------------------------------------------
# Serialization

# Document format: a JSON object with fields
#   {"kind": "grid", "name", "labels", "horizontal", "vertical"}  or
#   {"kind": "cycle", "name", "labels", "radius", "windows"}.
# Pairs are 2-element arrays.  Windows are plain strings when every label is
# a single character, arrays of labels otherwise.


def to_json_dict(p: GridLcl | CycleLcl) -> dict:
    if isinstance(p, GridLcl):
        return {
            "kind": "grid",
            "name": p.name,
            "labels": list(p.alphabet.labels),
            "horizontal": sorted([a, b] for a, b in p.horizontal),
            "vertical": sorted([a, b] for a, b in p.vertical),
        }
    if isinstance(p, CycleLcl):
        compact = all(len(s) == 1 for s in p.alphabet.labels)
        windows = sorted("".join(w) if compact else list(w) for w in p.windows)
        return {
            "kind": "cycle",
            "name": p.name,
            "labels": list(p.alphabet.labels),
            "radius": p.radius,
            "windows": windows,
        }
    raise TypeError(f"not a problem spec: {p!r}")


def serialize_problem(p: GridLcl | CycleLcl) -> str:
    return json.dumps(to_json_dict(p), indent=2, sort_keys=True) + "\n"


def _parse_window(raw, alphabet: Alphabet) -> tuple[str, ...]:
    if isinstance(raw, str):
        if not all(len(s) == 1 for s in alphabet.labels):
            raise ProblemSpecError(
                "string windows are only valid when every label is a single character"
            )
        return tuple(raw)
    if isinstance(raw, list):
        return tuple(raw)
    raise ProblemSpecError(f"window {raw!r} must be a string or an array of labels")


def parse_problem(text: str) -> GridLcl | CycleLcl:
    """Parse a problem-spec document; inverse of :func:`serialize_problem`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemSpecError(f"malformed problem document: {e}") from None
    if not isinstance(doc, dict):
        raise ProblemSpecError("problem document must be a JSON object")
    kind = doc.get("kind")
    name = doc.get("name", "unnamed")
    try:
        labels = tuple(doc["labels"])
    except KeyError:
        raise ProblemSpecError("missing field 'labels'") from None
    alphabet = Alphabet(labels)
    if kind == "grid":
        try:
            horizontal = frozenset(tuple(p) for p in doc["horizontal"])
            vertical = frozenset(tuple(p) for p in doc["vertical"])
        except KeyError as e:
            raise ProblemSpecError(f"missing field {e}") from None
        return GridLcl(alphabet, horizontal, vertical, name=name)
    if kind == "cycle":
        try:
            radius = int(doc["radius"])
            windows = frozenset(_parse_window(w, alphabet) for w in doc["windows"])
        except KeyError as e:
            raise ProblemSpecError(f"missing field {e}") from None
        return CycleLcl(alphabet, radius, windows, name=name)
    raise ProblemSpecError(f"unknown problem kind {kind!r}")
