"""Walkable-map graph: parsing, shortest paths and the synthetic stadium.

Coordinates are double-precision meters in a flat plane.  A map file is
UTF-8 text with one ``LINESTRING (x1 y1, x2 y2, ...)`` per line; vertices
are deduplicated by exact coordinate match and edges come from consecutive
linestring points.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class Path:
    vertices: tuple[int, ...]
    total_length: float


@dataclass
class MapGraph:
    """Immutable after construction; concurrent readers are safe."""

    vertices: list[tuple[float, float]]
    edges: list[tuple[int, int]]                       # (i, j) with i < j
    adjacency: list[list[tuple[int, float]]] = field(default_factory=list)
    ring_vertices: tuple[int, ...] = ()                # synthetic maps only
    exit_vertices: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.adjacency:
            adj: list[list[tuple[int, float]]] = [[] for _ in self.vertices]
            for i, j in self.edges:
                w = edge_length(self.vertices[i], self.vertices[j])
                adj[i].append((j, w))
                adj[j].append((i, w))
            for lst in adj:
                lst.sort()
            self.adjacency = adj

    def vertex_count(self) -> int:
        return len(self.vertices)


def edge_length(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _check_connected(vertices, adjacency) -> bool:
    if not vertices:
        return False
    seen = [False] * len(vertices)
    stack = [0]
    seen[0] = True
    found = 1
    while stack:
        u = stack.pop()
        for v, _ in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                found += 1
                stack.append(v)
    return found == len(vertices)


def build_graph(vertices, edges, *, ring=(), exits=()) -> MapGraph:
    """Assemble and validate a graph: positive edge lengths, no loops, connected."""
    uniq: set[tuple[int, int]] = set()
    clean: list[tuple[int, int]] = []
    for i, j in edges:
        if i == j:
            raise MapError(f"self-loop at vertex {i}")
        key = (i, j) if i < j else (j, i)
        if key in uniq:
            continue
        if edge_length(vertices[key[0]], vertices[key[1]]) <= 0.0:
            raise MapError(f"zero-length edge between vertices {key[0]} and {key[1]}")
        uniq.add(key)
        clean.append(key)
    g = MapGraph(list(vertices), clean, ring_vertices=tuple(ring),
                 exit_vertices=tuple(exits))
    if not _check_connected(g.vertices, g.adjacency):
        raise MapError("map graph is not connected")
    return g


# --- LINESTRING subset parsing --------------------------------------------

def parse_map(text: str) -> MapGraph:
    """Parse LINESTRING lines into a connected MapGraph."""
    vertex_index: dict[tuple[float, float], int] = {}
    vertices: list[tuple[float, float]] = []
    edges: list[tuple[int, int]] = []

    def intern(pt: tuple[float, float]) -> int:
        idx = vertex_index.get(pt)
        if idx is None:
            idx = len(vertices)
            vertex_index[pt] = idx
            vertices.append(pt)
        return idx

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not line.startswith("LINESTRING"):
            raise MapError(f"line {lineno}: expected LINESTRING, got {line[:30]!r}")
        body = line[len("LINESTRING"):].strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise MapError(f"line {lineno}: missing parentheses")
        points: list[tuple[float, float]] = []
        for part in body[1:-1].split(","):
            coords = part.split()
            if len(coords) != 2:
                raise MapError(f"line {lineno}: expected 'x y' pair, got {part.strip()!r}")
            try:
                points.append((float(coords[0]), float(coords[1])))
            except ValueError:
                raise MapError(f"line {lineno}: bad coordinate in {part.strip()!r}") from None
        if len(points) < 2:
            raise MapError(f"line {lineno}: linestring needs at least 2 points")
        idxs = [intern(p) for p in points]
        for a, b in zip(idxs, idxs[1:]):
            if a == b:
                raise MapError(f"line {lineno}: repeated consecutive point")
            edges.append((a, b))

    if not vertices:
        raise MapError("empty map")
    return build_graph(vertices, edges)


def serialize_map(g: MapGraph) -> str:
    """One LINESTRING per edge; parse_map round-trips the edge set."""
    lines = []
    for i, j in g.edges:
        (x1, y1), (x2, y2) = g.vertices[i], g.vertices[j]
        lines.append(f"LINESTRING ({x1!r} {y1!r}, {x2!r} {y2!r})")
    return "\n".join(lines) + "\n"


# --- queries ----------------------------------------------------------------

def shortest_path(g: MapGraph, src: int, dst: int) -> Path:
    """Minimum-length path; ties broken toward the lexicographically
    smallest vertex sequence (smaller next-vertex index first)."""
    n = g.vertex_count()
    if not (0 <= src < n and 0 <= dst < n):
        raise MapError(f"vertex out of range: {src} or {dst}")
    if src == dst:
        return Path((src,), 0.0)

    # distances to dst, then a greedy forward walk choosing the smallest
    # neighbor index that stays on a shortest path
    INF = math.inf
    dist = [INF] * n
    dist[dst] = 0.0
    heap = [(0.0, dst)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in g.adjacency[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    if dist[src] == INF:
        raise MapError(f"vertex {dst} unreachable from {src}")

    seq = [src]
    u = src
    while u != dst:
        for v, w in g.adjacency[u]:        # sorted by index
            if dist[u] == w + dist[v]:
                seq.append(v)
                u = v
                break
        else:
            raise MapError("shortest-path reconstruction failed")

    total = 0.0
    for a, b in zip(seq, seq[1:]):
        total += edge_length(g.vertices[a], g.vertices[b])
    return Path(tuple(seq), total)


def nearest_vertex(g: MapGraph, point: tuple[float, float]) -> int:
    """Index of the vertex closest to point; ties go to the smaller index."""
    if not g.vertices:
        raise MapError("empty map")
    px, py = point
    best, best_d = 0, math.inf
    for idx, (x, y) in enumerate(g.vertices):
        d = (x - px) * (x - px) + (y - py) * (y - py)
        if d < best_d:
            best, best_d = idx, d
    return best


# --- synthetic stadium -------------------------------------------------------

def generate_stadium_map(ring_radius: float, exit_count: int, road_length: float,
                         rng: random.Random, ring_segments: int | None = None) -> MapGraph:
    """Concourse ring, radial corridors to exits, and exit roads outward.

    Deterministic for fixed parameters and rng seed.  The ring is a jittered
    polygon; each exit sits past the ring on a radial corridor and continues
    outward along a road.
    """
    if ring_radius <= 0:
        raise MapError("ring_radius must be > 0")
    if exit_count < 2:
        raise MapError("exit_count must be >= 2")
    if road_length <= 0:
        raise MapError("road_length must be > 0")
    if ring_segments is None:
        ring_segments = max(16, 2 * exit_count)

    corridor = max(10.0, 0.2 * ring_radius)
    span = ring_radius * 1.05 + corridor + road_length + 10.0
    cx = cy = span

    vertices: list[tuple[float, float]] = []
    edges: list[tuple[int, int]] = []

    ring_idx = []
    for k in range(ring_segments):
        angle = 2.0 * math.pi * k / ring_segments
        r = ring_radius * (1.0 + rng.uniform(-0.03, 0.03))
        vertices.append((cx + r * math.cos(angle), cy + r * math.sin(angle)))
        ring_idx.append(k)
    for k in range(ring_segments):
        edges.append((k, (k + 1) % ring_segments))

    exit_idx = []
    for j in range(exit_count):
        angle = 2.0 * math.pi * j / exit_count
        anchor = ring_idx[round(j * ring_segments / exit_count) % ring_segments]
        ex = len(vertices)
        vertices.append((cx + (ring_radius + corridor) * math.cos(angle),
                         cy + (ring_radius + corridor) * math.sin(angle)))
        edges.append((anchor, ex))
        road_end = len(vertices)
        vertices.append((cx + (ring_radius + corridor + road_length) * math.cos(angle),
                         cy + (ring_radius + corridor + road_length) * math.sin(angle)))
        edges.append((ex, road_end))
        exit_idx.append(ex)

    return build_graph(vertices, edges, ring=ring_idx, exits=exit_idx)
