"""2D tile fabric of STAR blocks: data tiles, ancilla tiles, boundary orientation.

Layout convention: row 0 is the top of the grid.  Each block row ("strip")
spans two tile rows.  An uncompressed 2x2 block is::

    A A        top-left, top-right ancilla
    D A        data (bottom-left), right ancilla

A compressed block keeps only its left column (ancilla above data).  The
rightmost block of every strip keeps its right column so that column W-1 is
an unbroken ancilla column, and strips are right-aligned so those columns
line up.  Tiles left of a short strip are ``ABSENT``.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

UP, DOWN, LEFT, RIGHT = "up", "down", "left", "right"
SIDES = (UP, DOWN, LEFT, RIGHT)
_STEP = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

ROTATION_CYCLES = 3


class Role(str, Enum):
    DATA = "data"
    ANCILLA = "ancilla"
    ABSENT = "absent"


@dataclass(frozen=True)
class EdgeOrientation:
    """Boundary labels of a data tile: the horizontal sides (top and bottom)
    carry one label, the vertical sides (left and right) the other."""

    horizontal: str = "Z"

    def __post_init__(self):
        if self.horizontal not in ("X", "Z"):
            raise ValueError("edge label must be 'X' or 'Z'")

    @property
    def vertical(self) -> str:
        return "X" if self.horizontal == "Z" else "Z"

    def label(self, side: str) -> str:
        return self.horizontal if side in (UP, DOWN) else self.vertical

    def swapped(self) -> "EdgeOrientation":
        return EdgeOrientation(self.vertical)


DEFAULT_ORIENTATION = EdgeOrientation("Z")


@dataclass(frozen=True)
class Tile:
    position: tuple[int, int]
    role: Role
    index: int = -1  # program qubit for data tiles, ancilla id for ancilla tiles


@dataclass(frozen=True)
class Block:
    qubit: int
    strip: int
    col: int           # leftmost tile column
    width: int         # 2 for a full block, 1 when compressed


@dataclass
class CompressionPlan:
    fraction: float
    seed: int
    compressed_set: tuple[int, ...]


@dataclass(frozen=True)
class RotationEffect:
    qubit: int
    duration_cycles: int
    ancilla_needed: int
    candidates: tuple[int, ...]
    orientation_after: EdgeOrientation


class LayoutError(RuntimeError):
    pass


@dataclass
class Fabric:
    roles: list[list[Role]]
    data_pos: list[tuple[int, int]]
    orientation: list[EdgeOrientation] = field(default_factory=list)
    blocks: list[Block] = field(default_factory=list)
    block_cols: int = 0
    compressed: frozenset[int] = frozenset()

    def __post_init__(self):
        self.rows = len(self.roles)
        self.cols = len(self.roles[0]) if self.roles else 0
        if not self.orientation:
            self.orientation = [DEFAULT_ORIENTATION] * len(self.data_pos)
        self.anc_pos: list[tuple[int, int]] = []
        self._index: dict[tuple[int, int], int] = {}
        for r in range(self.rows):
            for c in range(self.cols):
                if self.roles[r][c] is Role.ANCILLA:
                    self._index[(r, c)] = len(self.anc_pos)
                    self.anc_pos.append((r, c))
        self._data_at = {p: q for q, p in enumerate(self.data_pos)}
        for q, (r, c) in enumerate(self.data_pos):
            if self.roles[r][c] is not Role.DATA:
                raise LayoutError(f"qubit {q} placed on non-data tile {(r, c)}")
        self._anc_adj = [self._neighbour_ancillas(p) for p in self.anc_pos]
        self._edges = sorted(
            (u, v) for u, nb in enumerate(self._anc_adj) for v in nb if u < v
        )
        self._data_adj = [self._side_ancillas(q) for q in range(len(self.data_pos))]

    # -- construction helpers -------------------------------------------------
    @classmethod
    def from_layout(cls, rows: list[str]) -> "Fabric":
        """Build from strings of ``A`` (ancilla), ``.`` (absent) and ``D`` or
        digits (data).  ``D`` tiles are numbered in row-major order; digit
        tiles take that digit as their qubit id."""
        grid = [r.split() if " " in r else list(r) for r in rows]
        roles, placed, auto = [], {}, []
        for r, row in enumerate(grid):
            out = []
            for c, ch in enumerate(row):
                if ch == "A":
                    out.append(Role.ANCILLA)
                elif ch == ".":
                    out.append(Role.ABSENT)
                elif ch == "D":
                    out.append(Role.DATA)
                    auto.append((r, c))
                elif ch.isdigit():
                    out.append(Role.DATA)
                    placed[int(ch)] = (r, c)
                else:
                    raise LayoutError(f"unknown layout character {ch!r}")
            roles.append(out)
        if placed and auto:
            raise LayoutError("mix of numbered and unnumbered data tiles")
        data = [placed[q] for q in sorted(placed)] if placed else auto
        return cls(roles, data)

    # -- queries --------------------------------------------------------------
    @property
    def num_qubits(self) -> int:
        return len(self.data_pos)

    @property
    def num_ancillas(self) -> int:
        return len(self.anc_pos)

    def role(self, pos: tuple[int, int]) -> Role:
        r, c = pos
        if 0 <= r < self.rows and 0 <= c < self.cols:
            return self.roles[r][c]
        return Role.ABSENT

    def tile(self, pos: tuple[int, int]) -> Tile:
        role = self.role(pos)
        if role is Role.ANCILLA:
            return Tile(pos, role, self._index[pos])
        if role is Role.DATA:
            return Tile(pos, role, self._data_at[pos])
        return Tile(pos, role)

    def ancilla_at(self, pos: tuple[int, int]) -> int | None:
        return self._index.get(pos)

    def ancilla_neighbours(self, a: int) -> tuple[int, ...]:
        return self._anc_adj[a]

    def ancilla_edges(self) -> list[tuple[int, int]]:
        return self._edges

    def side_ancillas(self, q: int) -> list[tuple[str, int]]:
        """Adjacent ancillas of data qubit ``q`` as (side, id), in UP, DOWN,
        LEFT, RIGHT order."""
        return self._data_adj[q]

    def side_ancilla(self, q: int, side: str) -> int | None:
        for s, a in self._data_adj[q]:
            if s == side:
                return a
        return None

    def side_of(self, q: int, a: int) -> str | None:
        for s, b in self._data_adj[q]:
            if b == a:
                return s
        return None

    def diagonal_ancilla(self, q: int, vert: str, horiz: str) -> int | None:
        r, c = self.data_pos[q]
        dr, _ = _STEP[vert]
        _, dc = _STEP[horiz]
        return self._index.get((r + dr, c + dc))

    def ancilla_graph_connected(self) -> bool:
        n = self.num_ancillas
        if n == 0:
            return False
        seen = {0}
        todo = deque([0])
        while todo:
            u = todo.popleft()
            for v in self._anc_adj[u]:
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return len(seen) == n

    def prep_tile(self, q: int) -> int:
        """The block's designated preparation ancilla used by static schemes:
        top-right of a full block, the ancilla above the data otherwise."""
        r, c = self.data_pos[q]
        a = self._index.get((r - 1, c + 1))
        if a is not None and self.blocks and self.blocks[q].width == 2:
            return a
        if a is not None and not self.blocks:
            return a
        a = self._index.get((r - 1, c))
        if a is None:
            a = self.side_ancillas(q)[0][1]
        return a

    def copy(self) -> "Fabric":
        return Fabric([row[:] for row in self.roles], list(self.data_pos), list(self.orientation),
                      list(self.blocks), self.block_cols, self.compressed)

    def to_dict(self) -> dict:
        sym = {Role.ANCILLA: "A", Role.ABSENT: ".", Role.DATA: "D"}
        return {
            "rows": self.rows,
            "cols": self.cols,
            "layout": ["".join(sym[x] for x in row) for row in self.roles],
            "data": [
                {"qubit": q, "pos": list(p), "horizontal_edge": self.orientation[q].horizontal}
                for q, p in enumerate(self.data_pos)
            ],
            "ancillas": [list(p) for p in self.anc_pos],
            "compressed": sorted(self.compressed),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    # -- internals ------------------------------------------------------------
    def _neighbour_ancillas(self, pos):
        r, c = pos
        out = []
        for side in SIDES:
            dr, dc = _STEP[side]
            a = self._index.get((r + dr, c + dc))
            if a is not None:
                out.append(a)
        return tuple(sorted(out))

    def _side_ancillas(self, q):
        r, c = self.data_pos[q]
        out = []
        for side in SIDES:
            dr, dc = _STEP[side]
            a = self._index.get((r + dr, c + dc))
            if a is not None:
                out.append((side, a))
        return out


def _layout(n: int, compressed: frozenset[int]) -> Fabric:
    bcols = math.ceil(math.sqrt(n))
    strips = math.ceil(n / bcols)
    widths = []
    for s in range(strips):
        qs = list(range(s * bcols, min(n, (s + 1) * bcols)))
        widths.append([1 if (q in compressed and q != qs[-1]) else 2 for q in qs])
    W = max(sum(w) for w in widths)
    roles = [[Role.ABSENT] * W for _ in range(2 * strips)]
    data_pos: list[tuple[int, int]] = [None] * n  # type: ignore[list-item]
    blocks: list[Block] = [None] * n  # type: ignore[list-item]
    for s, ws in enumerate(widths):
        col = W - sum(ws)
        top, bot = 2 * s, 2 * s + 1
        for i, w in enumerate(ws):
            q = s * bcols + i
            roles[top][col] = Role.ANCILLA
            roles[bot][col] = Role.DATA
            if w == 2:
                roles[top][col + 1] = Role.ANCILLA
                roles[bot][col + 1] = Role.ANCILLA
            data_pos[q] = (bot, col)
            blocks[q] = Block(q, s, col, w)
            col += w
    return Fabric(roles, data_pos, blocks=blocks, block_cols=bcols, compressed=compressed)


def build_star_grid(num_qubits: int) -> Fabric:
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    return _layout(num_qubits, frozenset())


def compress(f: Fabric, fraction: float, seed: int = 0) -> tuple[Fabric, CompressionPlan]:
    """Shrink a random subset of blocks from 2x2 to 2x1 (ancilla above data)."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("compression fraction must lie in [0, 1]")
    if not f.blocks:
        raise LayoutError("fabric has no block structure to compress")
    n = f.num_qubits
    k = int(math.floor(fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    chosen = tuple(sorted(int(q) for q in rng.choice(n, size=k, replace=False))) if k else ()
    out = _layout(n, f.compressed | frozenset(chosen))
    out.orientation = list(f.orientation)
    assert out.ancilla_graph_connected(), "compression disconnected the ancilla grid"
    return out, CompressionPlan(fraction, seed, chosen)


def rotate_edges(f: Fabric, q: int, orientation: EdgeOrientation | None = None) -> RotationEffect:
    """Describe an edge rotation of data qubit ``q``; the caller applies the
    orientation change when the operation completes."""
    cands = tuple(a for _, a in f.side_ancillas(q))
    if not cands:
        raise LayoutError(f"data qubit {q} has no adjacent ancilla to rotate with")
    cur = orientation if orientation is not None else f.orientation[q]
    return RotationEffect(q, ROTATION_CYCLES, 1, cands, cur.swapped())
