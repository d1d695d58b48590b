"""Enumeration of anchor tiles and the tile neighbourhood graph.

A *tile* is an a x b binary window that can occur in the indicator matrix of
a maximal independent set of the k-th power of a large torus (distances are
L1).  Concretely a window is a tile iff

  1. independence: no two 1-cells within L1 distance k of each other, and
  2. extendability: some independent set of anchors placed outside the
     window can cover every window cell that the in-window anchors leave
     uncovered (a cell is covered when an anchor lies within distance k).

For the extendability check it suffices to search anchor positions in the
*frame* of outside cells within distance k of the window: an anchor farther
out covers no window cell, and on a large torus any independent choice of
frame anchors extends to a full maximal independent set by greedily adding
anchors outside the window (greedy completion never needs an in-window cell
because the window is already fully covered, and it never gets stuck because
every uncovered outside cell is itself a legal anchor).  The frame-local
backtracking below is therefore exact, not a heuristic.

Row/column convention matches the grid axes: ``bits[i][j]`` sits at grid
offset (y0 + i, x0 + j), i.e. row index grows northwards, column index grows
eastwards.  Enumeration order is deterministic (row-major bitstring order),
so results do not depend on any scheduling choices.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product


@dataclass(frozen=True)
class Tile:
    """Binary anchor window of a maximal independent set of the k-th power."""

    a: int
    b: int
    bits: tuple[tuple[int, ...], ...]
    k: int

    def bitstring(self) -> str:
        return "".join(str(v) for row in self.bits for v in row)

    def sub(self, r0: int, c0: int, a: int, b: int) -> "Tile":
        rows = tuple(tuple(self.bits[r0 + i][c0 + j] for j in range(b)) for i in range(a))
        return Tile(a, b, rows, self.k)

    def ones(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.a) for j in range(self.b) if self.bits[i][j]]


@dataclass(frozen=True)
class TileGraph:
    """Tiles plus the horizontal/vertical gluing relation between them.

    A horizontal edge (left, right) exists iff some valid a x (b+1) tile has
    ``left`` as its first b columns and ``right`` as its last b columns;
    vertical edges (down, up) arise from (a+1) x b tiles the same way.
    """

    k: int
    a: int
    b: int
    nodes: tuple[Tile, ...]
    horizontal_edges: tuple[tuple[Tile, Tile], ...]
    vertical_edges: tuple[tuple[Tile, Tile], ...]


def _validate_bits(bits) -> tuple[tuple[int, ...], ...]:
    rows = tuple(tuple(row) for row in bits)
    if not rows or not rows[0]:
        raise ValueError("tile matrix must be non-empty")
    b = len(rows[0])
    if any(len(row) != b for row in rows):
        raise ValueError("tile matrix must be rectangular")
    if any(v not in (0, 1) for row in rows for v in row):
        raise ValueError("tile entries must be 0 or 1")
    return rows


def _independent(ones, k) -> bool:
    for idx, (y1, x1) in enumerate(ones):
        for y2, x2 in ones[idx + 1 :]:
            if abs(y1 - y2) + abs(x1 - x2) <= k:
                return False
    return True


def _frame_cells(k, a, b):
    """Outside cells within L1 distance k of the a x b window at (0..a-1, 0..b-1)."""
    cells = []
    for y in range(-k, a + k):
        for x in range(-k, b + k):
            if 0 <= y < a and 0 <= x < b:
                continue
            dy = max(0, -y, y - (a - 1))
            dx = max(0, -x, x - (b - 1))
            if dy + dx <= k:
                cells.append((y, x))
    return cells


def _cover_search(uncovered, candidates, k):
    """Find an independent frame set covering all uncovered cells (backtracking).

    ``candidates`` maps each uncovered cell to the frame positions that could
    cover it.  Chosen positions must stay pairwise at distance > k.
    """
    if not uncovered:
        return True
    # branch on the most constrained cell
    cell = min(uncovered, key=lambda v: (len(candidates[v]), v))
    if not candidates[cell]:
        return False
    for pos in candidates[cell]:
        py, px = pos
        new_uncovered = [
            v for v in uncovered if abs(v[0] - py) + abs(v[1] - px) > k
        ]
        new_candidates = {
            v: [c for c in candidates[v] if abs(c[0] - py) + abs(c[1] - px) > k]
            for v in new_uncovered
        }
        if _cover_search(new_uncovered, new_candidates, k):
            return True
    return False


def is_tile(k: int, bits) -> bool:
    """Decide exactly whether a binary window is a valid anchor tile."""
    if k < 1:
        raise ValueError("power parameter k must be >= 1")
    rows = _validate_bits(bits)
    a, b = len(rows), len(rows[0])
    ones = [(i, j) for i in range(a) for j in range(b) if rows[i][j]]
    if not _independent(ones, k):
        return False
    uncovered = [
        (i, j)
        for i in range(a)
        for j in range(b)
        if all(abs(i - y) + abs(j - x) > k for y, x in ones)
    ]
    if not uncovered:
        return True
    frame = [
        f
        for f in _frame_cells(k, a, b)
        if all(abs(f[0] - y) + abs(f[1] - x) > k for y, x in ones)
    ]
    candidates = {
        v: [f for f in frame if abs(f[0] - v[0]) + abs(f[1] - v[1]) <= k]
        for v in uncovered
    }
    return _cover_search(uncovered, candidates, k)


def _independent_rows(k, b):
    """All width-b bit rows whose 1s are pairwise more than k apart."""
    rows = []
    for row in product((0, 1), repeat=b):
        xs = [j for j, v in enumerate(row) if v]
        if all(x2 - x1 > k for x1, x2 in zip(xs, xs[1:])):
            rows.append(row)
    return rows


def _rows_compatible(existing, new_row, k):
    """Check new_row against the rows within vertical distance k below it."""
    depth = len(existing)
    new_ones = [j for j, v in enumerate(new_row) if v]
    if not new_ones:
        return True
    for d in range(1, min(k, depth) + 1):
        other = existing[depth - d]
        for j in new_ones:
            for j2, v in enumerate(other):
                if v and d + abs(j - j2) <= k:
                    return False
    return True


def enumerate_tiles(k: int, a: int, b: int) -> list[Tile]:
    """All valid a x b tiles for power k, in row-major bitstring order.

    Partial windows are grown one row at a time and pruned by independence
    only; the full extendability test runs once per completed candidate.
    """
    if a < 1 or b < 1:
        raise ValueError("tile dimensions must be >= 1")
    row_options = _independent_rows(k, b)
    partials = [()]
    for _ in range(a):
        partials = [
            rows + (new,)
            for rows in partials
            for new in row_options
            if _rows_compatible(rows, new, k)
        ]
    tiles = [Tile(a, b, rows, k) for rows in partials if is_tile(k, rows)]
    tiles.sort(key=Tile.bitstring)
    return tiles


def build_tile_graph(k: int, a: int, b: int) -> TileGraph:
    """Tile graph whose edges are realised by (a)x(b+1) and (a+1)x(b) tiles."""
    nodes = enumerate_tiles(k, a, b)
    index = {t.bits: t for t in nodes}

    def node_for(sub: Tile) -> Tile:
        try:
            return index[sub.bits]
        except KeyError:
            # sub-windows of tiles are tiles, so this cannot happen
            raise AssertionError(f"sub-window {sub.bitstring()} missing from node set")

    horizontal = []
    for wide in enumerate_tiles(k, a, b + 1):
        left = node_for(wide.sub(0, 0, a, b))
        right = node_for(wide.sub(0, 1, a, b))
        horizontal.append((left, right))
    vertical = []
    for tall in enumerate_tiles(k, a + 1, b):
        down = node_for(tall.sub(0, 0, a, b))
        up = node_for(tall.sub(1, 0, a, b))
        vertical.append((down, up))
    return TileGraph(
        k=k,
        a=a,
        b=b,
        nodes=tuple(nodes),
        horizontal_edges=tuple(horizontal),
        vertical_edges=tuple(vertical),
    )
