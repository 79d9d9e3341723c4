"""Triangular-lattice geometry with periodic boundaries.

Conventions
-----------
Vertices ``(x, y)`` with ``0 <= x < l_x``, ``0 <= y < l_y``. Each vertex owns
three edges::

    d0: (x, y) -> (x+1, y)
    d1: (x, y) -> (x, y+1)
    d2: (x, y) -> (x+1, y+1)

with linear index ``3 * (y * l_x + x) + d``. Each cell has an up and a down
triangle::

    T_up(x, y)   = {d0(x, y), d1(x+1, y), d2(x, y)}
    T_down(x, y) = {d1(x, y), d0(x, y+1), d2(x, y)}

numbered ``2 * (y * l_x + x)`` and ``2 * (y * l_x + x) + 1``. A star is the six
edges touching a vertex, a plaquette the three edges of a triangle.

Zigzag strings run along a row: ``{d2(x0+k, y), d1(x0+k+1, y)}`` for
``k = 0..r-1`` joins vertices ``(x0, y)`` and ``(x0+r, y)``; on the dual
honeycomb lattice the same edges join ``T_down(x0, y)`` to ``T_down(x0+r, y)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tricode.errors import RegionGeometryError
from tricode.pauli import PauliOperator

Vertex = tuple[int, int]


@dataclass(frozen=True, eq=False)
class Lattice:
    l_x: int
    l_y: int

    def __post_init__(self):
        if self.l_x < 3 or self.l_y < 3:
            raise ValueError(f"invalid size ({self.l_x}, {self.l_y}): both sides must be >= 3")

    @property
    def n_vertices(self) -> int:
        return self.l_x * self.l_y

    @property
    def n_edges(self) -> int:
        return 3 * self.l_x * self.l_y

    @property
    def n_triangles(self) -> int:
        return 2 * self.l_x * self.l_y

    @property
    def n_qubits(self) -> int:
        return self.n_edges

    def vertex(self, x: int, y: int) -> int:
        return (y % self.l_y) * self.l_x + (x % self.l_x)

    def vertex_coords(self, v: int) -> Vertex:
        return v % self.l_x, v // self.l_x

    def edge(self, x: int, y: int, d: int) -> int:
        return 3 * self.vertex(x, y) + d

    def edge_coords(self, e: int) -> tuple[int, int, int]:
        v, d = divmod(e, 3)
        x, y = self.vertex_coords(v)
        return x, y, d

    def triangle(self, x: int, y: int, up: bool = True) -> int:
        return 2 * self.vertex(x, y) + (0 if up else 1)

    def _vertex_id(self, s) -> int:
        if isinstance(s, (tuple, list)):
            return self.vertex(*s)
        s = int(s)
        if not 0 <= s < self.n_vertices:
            raise IndexError(f"vertex {s} out of range")
        return s

    @cached_property
    def triangle_edges(self) -> np.ndarray:
        """``(n_triangles, 3)`` edge indices."""
        out = np.empty((self.n_triangles, 3), dtype=np.int64)
        for y in range(self.l_y):
            for x in range(self.l_x):
                t = 2 * self.vertex(x, y)
                out[t] = (self.edge(x, y, 0), self.edge(x + 1, y, 1), self.edge(x, y, 2))
                out[t + 1] = (self.edge(x, y, 1), self.edge(x, y + 1, 0), self.edge(x, y, 2))
        out.setflags(write=False)
        return out

    @cached_property
    def star_edges(self) -> np.ndarray:
        """``(n_vertices, 6)`` edge indices."""
        out = np.empty((self.n_vertices, 6), dtype=np.int64)
        for y in range(self.l_y):
            for x in range(self.l_x):
                out[self.vertex(x, y)] = (
                    self.edge(x, y, 0),
                    self.edge(x, y, 1),
                    self.edge(x, y, 2),
                    self.edge(x - 1, y, 0),
                    self.edge(x, y - 1, 1),
                    self.edge(x - 1, y - 1, 2),
                )
        out.setflags(write=False)
        return out

    @cached_property
    def triangle_vertices(self) -> np.ndarray:
        out = np.empty((self.n_triangles, 3), dtype=np.int64)
        for y in range(self.l_y):
            for x in range(self.l_x):
                t = 2 * self.vertex(x, y)
                out[t] = (self.vertex(x, y), self.vertex(x + 1, y), self.vertex(x + 1, y + 1))
                out[t + 1] = (self.vertex(x, y), self.vertex(x, y + 1), self.vertex(x + 1, y + 1))
        out.setflags(write=False)
        return out

    @cached_property
    def edge_triangles(self) -> np.ndarray:
        """``(n_edges, 2)`` triangles sharing each edge."""
        out = np.full((self.n_edges, 2), -1, dtype=np.int64)
        fill = np.zeros(self.n_edges, dtype=np.int64)
        for t, edges in enumerate(self.triangle_edges):
            for e in edges:
                out[e, fill[e]] = t
                fill[e] += 1
        out.setflags(write=False)
        return out

    @cached_property
    def vertex_triangles(self) -> np.ndarray:
        """``(n_vertices, 6)`` triangles incident to each vertex."""
        lists = [[] for _ in range(self.n_vertices)]
        for t, verts in enumerate(self.triangle_vertices):
            for v in verts:
                lists[v].append(t)
        out = np.array(lists, dtype=np.int64)
        out.setflags(write=False)
        return out

    def star_operator(self, s) -> PauliOperator:
        return PauliOperator.from_qubits(self.n_edges, x=self.star_edges[self._vertex_id(s)])

    def plaquette_operator(self, p: int) -> PauliOperator:
        p = int(p)
        if not 0 <= p < self.n_triangles:
            raise IndexError(f"triangle {p} out of range")
        return PauliOperator.from_qubits(self.n_edges, z=self.triangle_edges[p])

    def zigzag_edges(self, start: Vertex, r: int) -> np.ndarray:
        x0, y = start
        if not 1 <= r <= self.l_x - 1:
            raise ValueError(f"string length r={r} outside 1..{self.l_x - 1}")
        out = []
        for k in range(r):
            out.append(self.edge(x0 + k, y, 2))
            out.append(self.edge(x0 + k + 1, y, 1))
        return np.array(out, dtype=np.int64)

    def loop_edges(self, y: int) -> np.ndarray:
        if not 0 <= y < self.l_y:
            raise IndexError(f"row {y} out of range")
        out = []
        for x in range(self.l_x):
            out.append(self.edge(x, y, 2))
            out.append(self.edge(x + 1, y, 1))
        return np.array(out, dtype=np.int64)

    def zigzag_string(self, start: Vertex, r: int, kind: str) -> PauliOperator:
        return _pauli_on(self.n_edges, self.zigzag_edges(start, r), kind)

    def zigzag_loop(self, y: int, kind: str) -> PauliOperator:
        return _pauli_on(self.n_edges, self.loop_edges(y), kind)


def _normalize_kind(kind: str) -> str:
    k = kind.upper() if isinstance(kind, str) else kind
    aliases = {"Z": "Z", "WILSON": "Z", "W": "Z", "X": "X", "THOOFT": "X", "T": "X"}
    try:
        return aliases[k]
    except KeyError:
        raise ValueError(f"unknown string kind {kind!r}; use 'Z' (Wilson) or 'X' ('t Hooft)") from None


def _pauli_on(n: int, edges, kind: str) -> PauliOperator:
    if _normalize_kind(kind) == "Z":
        return PauliOperator.from_qubits(n, z=edges)
    return PauliOperator.from_qubits(n, x=edges)


@lru_cache(maxsize=32)
def build(l_x: int, l_y: int) -> Lattice:
    return Lattice(int(l_x), int(l_y))


def star_operator(lat: Lattice, s) -> PauliOperator:
    return lat.star_operator(s)


def plaquette_operator(lat: Lattice, p: int) -> PauliOperator:
    return lat.plaquette_operator(p)


def zigzag_string(lat: Lattice, start: Vertex, r: int, kind: str) -> PauliOperator:
    return lat.zigzag_string(start, r, kind)


def zigzag_loop(lat: Lattice, y: int, kind: str) -> PauliOperator:
    return lat.zigzag_loop(y, kind)


# --------------------------------------------------------------------------
# subsystems


@dataclass(frozen=True)
class Subsystem:
    edges: frozenset[int]
    triangles: frozenset[int]
    label: str = ""

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def size(self) -> float:
        """Linear size ``sqrt(A_h)`` with ``A_h`` the area in unit triangles."""
        return float(np.sqrt(self.n_triangles))

    def edge_array(self) -> np.ndarray:
        return np.array(sorted(self.edges), dtype=np.int64)

    def __or__(self, other: "Subsystem") -> "Subsystem":
        return Subsystem(self.edges | other.edges, self.triangles | other.triangles, self.label + other.label)


def _edges_of(lat: Lattice, triangles: Iterable[int]) -> frozenset[int]:
    tri = np.fromiter(triangles, dtype=np.int64)
    if tri.size == 0:
        return frozenset()
    return frozenset(lat.triangle_edges[tri].ravel().tolist())


def _components(lat: Lattice, triangles: set[int]) -> int:
    """Number of edge-connected components of a triangle set."""
    seen: set[int] = set()
    count = 0
    for t0 in triangles:
        if t0 in seen:
            continue
        count += 1
        stack = [t0]
        seen.add(t0)
        while stack:
            t = stack.pop()
            for e in lat.triangle_edges[t]:
                for u in lat.edge_triangles[e]:
                    u = int(u)
                    if u in triangles and u not in seen:
                        seen.add(u)
                        stack.append(u)
    return count


def _euler_characteristic(lat: Lattice, triangles: set[int]) -> int:
    tri = np.array(sorted(triangles), dtype=np.int64)
    n_e = len(set(lat.triangle_edges[tri].ravel().tolist()))
    n_v = len(set(lat.triangle_vertices[tri].ravel().tolist()))
    return n_v - n_e + len(tri)


def hexagon_triangles(lat: Lattice, centers: Sequence[Vertex]) -> set[int]:
    tri: set[int] = set()
    for c in centers:
        tri.update(int(t) for t in lat.vertex_triangles[lat.vertex(*c)])
    return tri


def hexagon_complex(lat: Lattice, centers: Sequence[Vertex], label: str = "") -> Subsystem:
    """Union of the hexagons (six incident triangles) around each center, rims included."""
    if not centers:
        raise ValueError("need at least one hexagon center")
    tri = hexagon_triangles(lat, centers)
    if _components(lat, tri) != 1:
        raise ValueError("hexagon complex is disconnected")
    return Subsystem(_edges_of(lat, tri), frozenset(tri), label)


@dataclass(frozen=True)
class KpRegions:
    a: Subsystem
    b: Subsystem
    c: Subsystem
    name: str = field(default="", compare=False)

    def unions(self) -> dict[str, Subsystem]:
        a, b, c = self.a, self.b, self.c
        return {"A": a, "B": b, "C": c, "AB": a | b, "BC": b | c, "CA": c | a, "ABC": a | b | c}

    @property
    def size(self) -> float:
        """``sqrt`` of the mean region area in unit triangles."""
        return float(np.sqrt((self.a.n_triangles + self.b.n_triangles + self.c.n_triangles) / 3))


def validate_regions(lat: Lattice, regions: KpRegions) -> None:
    """Raise RegionGeometryError naming the first violated condition."""
    parts = {"A": regions.a, "B": regions.b, "C": regions.c}
    for name, s in parts.items():
        if not s.triangles:
            raise RegionGeometryError(f"region {name} is empty")
        if _components(lat, set(s.triangles)) != 1:
            raise RegionGeometryError(f"region {name} is not connected")
    for (n1, s1), (n2, s2) in [(("A", regions.a), ("B", regions.b)), (("B", regions.b), ("C", regions.c)), (("C", regions.c), ("A", regions.a))]:
        if s1.edges & s2.edges:
            raise RegionGeometryError(f"regions {n1} and {n2} share edges")
        if s1.triangles & s2.triangles:
            raise RegionGeometryError(f"regions {n1} and {n2} share triangles")
        if _components(lat, set(s1.triangles | s2.triangles)) != 1:
            raise RegionGeometryError(f"regions {n1} and {n2} are not adjacent")
    union = set(regions.a.triangles | regions.b.triangles | regions.c.triangles)
    chi = _euler_characteristic(lat, union)
    rest = set(range(lat.n_triangles)) - union
    if chi != 1 or (rest and _components(lat, rest) != 1):
        raise RegionGeometryError(f"union ABC is not simply connected (Euler characteristic {chi})")


def regions_from_triangles(lat: Lattice, tri_a, tri_b, tri_c, name: str = "") -> KpRegions:
    """Disjoint regions from triangle lists; overlaps go to the earlier region (A < B < C)."""
    ta = set(int(t) for t in tri_a)
    tb = set(int(t) for t in tri_b) - ta
    tc = set(int(t) for t in tri_c) - ta - tb
    ea = _edges_of(lat, ta)
    eb = _edges_of(lat, tb) - ea
    ec = _edges_of(lat, tc) - ea - eb
    regions = KpRegions(
        Subsystem(ea, frozenset(ta), "A"),
        Subsystem(eb, frozenset(tb), "B"),
        Subsystem(ec, frozenset(tc), "C"),
        name,
    )
    validate_regions(lat, regions)
    return regions


def regions_from_centers(lat: Lattice, centers_a, centers_b, centers_c, name: str = "") -> KpRegions:
    return regions_from_triangles(
        lat,
        hexagon_triangles(lat, centers_a),
        hexagon_triangles(lat, centers_b),
        hexagon_triangles(lat, centers_c),
        name,
    )


def sector_centers(radius: int, center: Vertex) -> tuple[list[Vertex], list[Vertex], list[Vertex]]:
    """Hexagon centers of three 120-degree sectors around ``center``.

    In lattice coordinates the directions (1, 0), (0, 1) and (-1, -1) are 120
    degrees apart; sector k collects ``center + i*u_k + j*u_{k+1}`` for
    ``i >= 1, j >= 0, i + j <= radius``.
    """
    cx, cy = center
    dirs = [(1, 0), (0, 1), (-1, -1)]
    out = []
    for k in range(3):
        u, v = dirs[k], dirs[(k + 1) % 3]
        pts = []
        for i in range(1, radius + 1):
            for j in range(0, radius + 1 - i):
                pts.append((cx + i * u[0] + j * v[0], cy + i * u[1] + j * v[1]))
        out.append(pts)
    return out[0], out[1], out[2]


def auto_radius(lat: Lattice) -> int:
    return max(1, min(lat.l_x, lat.l_y) // 4)


PRESETS = ("auto", "tri1", "tri2", "tri3", "tri4", "tri5", "tri6")


def kp_regions(lat: Lattice, preset="auto", center: Vertex | None = None) -> KpRegions:
    """Kitaev-Preskill regions A, B, C.

    ``preset`` is a name (``"auto"`` scales the sector radius as
    ``min(l_x, l_y) // 4``; ``"triR"`` fixes radius R), a path to a region
    file, or a sequence of three hexagon-center lists.
    """
    if center is None:
        center = (lat.l_x // 2, lat.l_y // 2)
    if isinstance(preset, (list, tuple)):
        if len(preset) != 3:
            raise RegionGeometryError("explicit regions need exactly three center lists")
        return regions_from_centers(lat, *preset, name="explicit")
    if isinstance(preset, Path) or (isinstance(preset, str) and preset not in PRESETS and Path(preset).exists()):
        return load_region_file(lat, preset)
    if preset == "auto":
        radius = auto_radius(lat)
    else:
        m = re.fullmatch(r"tri(\d+)", str(preset))
        if not m:
            raise RegionGeometryError(f"unknown region preset {preset!r}")
        radius = int(m.group(1))
    if 2 * radius + 3 > min(lat.l_x, lat.l_y):
        raise RegionGeometryError(f"preset radius {radius} does not fit a {lat.l_x}x{lat.l_y} torus")
    a, b, c = sector_centers(radius, center)
    return regions_from_centers(lat, a, b, c, name=f"tri{radius}")


_CENTER_RE = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")


def parse_region_text(text: str) -> dict[str, list[Vertex]]:
    """Parse ``A: (x,y) (x,y) ...`` lines; ``#`` starts a comment."""
    out: dict[str, list[Vertex]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise RegionGeometryError(f"line {lineno}: expected 'NAME: (x,y) ...'")
        name, rest = line.split(":", 1)
        name = name.strip().upper()
        if name not in ("A", "B", "C"):
            raise RegionGeometryError(f"line {lineno}: region name must be A, B or C, got {name!r}")
        pts = [(int(x), int(y)) for x, y in _CENTER_RE.findall(rest)]
        if not pts:
            raise RegionGeometryError(f"line {lineno}: region {name} lists no centers")
        out.setdefault(name, []).extend(pts)
    missing = {"A", "B", "C"} - set(out)
    if missing:
        raise RegionGeometryError(f"missing regions: {sorted(missing)}")
    return out


def format_region_text(centers: dict[str, Sequence[Vertex]]) -> str:
    return "".join(f"{k}: " + " ".join(f"({x},{y})" for x, y in centers[k]) + "\n" for k in ("A", "B", "C"))


def load_region_file(lat: Lattice, path) -> KpRegions:
    spec = parse_region_text(Path(path).read_text())
    return regions_from_centers(lat, spec["A"], spec["B"], spec["C"], name=str(path))
