"""Combinatorics of ideal triangulations of compact 3-manifolds with boundary.

A gluing is a finite set of tetrahedra, labelled 0..N-1, whose 4N faces are
identified in pairs by simplicial maps.  Local labelling conventions used by
every file format and error message in this package:

* vertices of a tetrahedron are 0..3;
* face f (0..3) is the face opposite vertex f, carrying the other three
  vertices;
* edges 0..5 enumerate the vertex pairs in lexicographic order
  01, 02, 03, 12, 13, 23, so opposite edge pairs are (0,5), (1,4), (2,3).

A face pairing sends (tet t, face f) to (t', f') through a permutation s of
{0,1,2,3} with s(f) = f'; it carries edge {a, b} of face f to edge
{s(a), s(b)}.  Truncating a neighbourhood of every vertex and taking the
quotient yields a compact 3-manifold whose boundary is triangulated by the
corner triangles of the tetrahedra, one boundary component per vertex class.
The geometric modules require every boundary component to have negative
Euler characteristic; `build` enforces that hypothesis unless asked not to.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .errors import BoundaryHypothesisError, GluingError

EDGE_VERTEX_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
OPPOSITE_EDGE = (5, 4, 3, 2, 1, 0)
VERTEX_EDGES = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 4, 5))

_EDGE_INDEX = {}
for _e, (_a, _b) in enumerate(EDGE_VERTEX_PAIRS):
    _EDGE_INDEX[(_a, _b)] = _e
    _EDGE_INDEX[(_b, _a)] = _e

_PERMS4 = tuple(permutations(range(4)))


def edge_index(a: int, b: int) -> int:
    """Local edge index of the vertex pair {a, b}."""
    return _EDGE_INDEX[(a, b)]


def perm_inverse(s):
    inv = [0, 0, 0, 0]
    for i, si in enumerate(s):
        inv[si] = i
    return tuple(inv)


def perm_sign(s) -> int:
    """+1 for even permutations of {0,1,2,3}, -1 for odd."""
    sign = 1
    for i in range(4):
        for j in range(i + 1, 4):
            if s[i] > s[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class GluingSpec:
    """Raw face-pairing data: entry 4*t + f is (t', f', s) for face (t, f)."""

    tet_count: int
    pairings: tuple

    def pairing(self, t: int, f: int):
        return self.pairings[4 * t + f]

    def validate(self) -> None:
        """Check structural sanity; raises GluingError with a located message."""
        n = self.tet_count
        if not isinstance(n, int) or n < 1:
            raise GluingError(f"tet_count must be a positive integer, got {n!r}")
        if len(self.pairings) != 4 * n:
            raise GluingError(
                f"expected {4 * n} face pairings, got {len(self.pairings)}")
        for t in range(n):
            for f in range(4):
                entry = self.pairings[4 * t + f]
                try:
                    t2, f2, s = entry
                except (TypeError, ValueError):
                    raise GluingError(f"malformed pairing entry for face ({t},{f})")
                if not (0 <= t2 < n and 0 <= f2 < 4):
                    raise GluingError(
                        f"face ({t},{f}) glued to out-of-range face ({t2},{f2})")
                if tuple(sorted(s)) != (0, 1, 2, 3):
                    raise GluingError(
                        f"face ({t},{f}) carries an invalid permutation {s}")
                if s[f] != f2:
                    raise GluingError(
                        f"permutation of face ({t},{f}) sends {f} to {s[f]}, "
                        f"not to the target face {f2}")
                if (t2, f2) == (t, f):
                    raise GluingError(
                        f"face ({t},{f}) is glued to itself; the induced "
                        "involution fixes a corner and the quotient is not a "
                        "manifold")
                bt, bf, bs = self.pairings[4 * t2 + f2]
                if (bt, bf) != (t, f) or tuple(bs) != perm_inverse(s):
                    raise GluingError(
                        f"pairing is not involutive at face ({t},{f}): the "
                        f"back map from ({t2},{f2}) does not invert it")

    def to_json_obj(self) -> dict:
        out = []
        for t in range(self.tet_count):
            for f in range(4):
                t2, f2, s = self.pairings[4 * t + f]
                out.append([t, f, t2, f2, list(s)])
        return {"tet_count": self.tet_count, "pairings": out}

    @classmethod
    def from_json_obj(cls, obj) -> "GluingSpec":
        if not isinstance(obj, dict):
            raise GluingError("gluing JSON must be an object")
        n = obj.get("tet_count")
        rows = obj.get("pairings")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise GluingError("tet_count must be a positive integer")
        if not isinstance(rows, list) or len(rows) != 4 * n:
            raise GluingError(f"pairings must list exactly {4 * n} entries")
        table = [None] * (4 * n)
        for row in rows:
            if (not isinstance(row, list) or len(row) != 5
                    or not all(isinstance(v, int) and not isinstance(v, bool)
                               for v in row[:4])
                    or not isinstance(row[4], list) or len(row[4]) != 4
                    or not all(isinstance(v, int) and not isinstance(v, bool)
                               for v in row[4])):
                raise GluingError(f"malformed pairing row {row!r}")
            t, f, t2, f2, s = row
            if not (0 <= t < n and 0 <= f < 4):
                raise GluingError(f"pairing row for out-of-range face ({t},{f})")
            if table[4 * t + f] is not None:
                raise GluingError(f"duplicate pairing row for face ({t},{f})")
            table[4 * t + f] = (t2, f2, tuple(s))
        for i, entry in enumerate(table):
            if entry is None:
                raise GluingError(f"face ({i // 4},{i % 4}) has no pairing row")
        spec = cls(tet_count=n, pairings=tuple(table))
        spec.validate()
        return spec


@dataclass(frozen=True)
class EdgeClass:
    """An edge of the quotient manifold: an orbit of (tet, local edge) corners."""

    index: int
    corners: tuple

    @property
    def valence(self) -> int:
        return len(self.corners)


@dataclass(frozen=True)
class BoundaryLink:
    """Census data of one boundary component (the link of a vertex class)."""

    vertex_class: int
    chi: int
    triangles: int
    sides: int
    corners: int


@dataclass(frozen=True)
class Triangulation:
    """A validated gluing together with its derived combinatorics.

    edge_class_of[t][e] is the index of the edge class containing local edge
    e of tetrahedron t; this is the quotient map every metric quantity is
    scattered through.
    """

    spec: GluingSpec
    edge_classes: tuple
    vertex_classes: tuple
    boundary_links: tuple
    edge_class_of: tuple

    @property
    def tet_count(self) -> int:
        return self.spec.tet_count

    @property
    def n_edges(self) -> int:
        return len(self.edge_classes)


class _DSU:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def orbits(self):
        groups = {}
        for x in self.parent:
            groups.setdefault(self.find(x), []).append(x)
        return [sorted(g) for g in groups.values()]


def _check_orientable(spec: GluingSpec) -> None:
    # Two-colouring of tetrahedra: a pairing with odd permutation preserves a
    # coherent orientation, an even one reverses it.  Any odd cycle of
    # constraints means the quotient is non-orientable.
    n = spec.tet_count
    eps = [0] * n
    for start in range(n):
        if eps[start] != 0:
            continue
        eps[start] = 1
        stack = [start]
        while stack:
            t = stack.pop()
            for f in range(4):
                t2, _f2, s = spec.pairing(t, f)
                want = eps[t] if perm_sign(s) == -1 else -eps[t]
                if eps[t2] == 0:
                    eps[t2] = want
                    stack.append(t2)
                elif eps[t2] != want:
                    raise GluingError(
                        f"gluing is non-orientable (inconsistent orientation "
                        f"across face ({t},{f}))")


def build(spec: GluingSpec, *, enforce_link_hypothesis: bool = True) -> Triangulation:
    """Validate a gluing and derive its edge/vertex classes and boundary links.

    With enforce_link_hypothesis (the default), raises BoundaryHypothesisError
    unless every boundary link has Euler characteristic < 0, the standing
    hypothesis of the geometric modules.  Search predicates and purely
    combinatorial diagnostics may disable it.
    """
    spec.validate()
    _check_orientable(spec)
    n = spec.tet_count

    edges = _DSU([(t, e) for t in range(n) for e in range(6)])
    verts = _DSU([(t, v) for t in range(n) for v in range(4)])
    # Vertices of corner triangles: (t, v, w) is the point of the triangle at
    # vertex v that lies on edge {v, w}.
    tri_pts = _DSU([(t, v, w) for t in range(n)
                    for v in range(4) for w in range(4) if v != w])

    for t in range(n):
        for f in range(4):
            t2, _f2, s = spec.pairing(t, f)
            others = [v for v in range(4) if v != f]
            for i in range(3):
                a = others[i]
                verts.union((t, a), (t2, s[a]))
                for j in range(i + 1, 3):
                    b = others[j]
                    edges.union((t, edge_index(a, b)),
                                (t2, edge_index(s[a], s[b])))
                for b in others:
                    if b != a:
                        tri_pts.union((t, a, b), (t2, s[a], s[b]))

    edge_orbits = sorted(edges.orbits(), key=lambda g: g[0])
    edge_classes = tuple(EdgeClass(index=i, corners=tuple(g))
                         for i, g in enumerate(edge_orbits))
    class_of = [[-1] * 6 for _ in range(n)]
    for ec in edge_classes:
        for (t, e) in ec.corners:
            class_of[t][e] = ec.index

    vertex_orbits = sorted(verts.orbits(), key=lambda g: g[0])
    vertex_classes = tuple(tuple(g) for g in vertex_orbits)

    pt_root_class = {}
    for j, vc in enumerate(vertex_classes):
        members = set(vc)
        for (t, v, w) in tri_pts.parent:
            if (t, v) in members:
                pt_root_class[tri_pts.find((t, v, w))] = j

    links = []
    for j, vc in enumerate(vertex_classes):
        faces = len(vc)
        sides = 3 * faces // 2
        points = sum(1 for root, cls in pt_root_class.items() if cls == j)
        links.append(BoundaryLink(vertex_class=j, chi=points - sides + faces,
                                  triangles=faces, sides=sides, corners=points))
    links = tuple(links)

    if enforce_link_hypothesis:
        bad = [l for l in links if l.chi >= 0]
        if bad:
            raise BoundaryHypothesisError(
                "boundary link(s) "
                + ", ".join(f"{l.vertex_class} (chi = {l.chi})" for l in bad)
                + " violate the negative Euler characteristic hypothesis",
                chi_by_class=[l.chi for l in links])

    return Triangulation(spec=spec, edge_classes=edge_classes,
                         vertex_classes=vertex_classes, boundary_links=links,
                         edge_class_of=tuple(tuple(r) for r in class_of))


def single_hyperbolic_class(tri: Triangulation) -> bool:
    """One edge class and every boundary link of negative Euler characteristic."""
    return (len(tri.edge_classes) == 1
            and all(l.chi < 0 for l in tri.boundary_links))


def any_gluing(tri: Triangulation) -> bool:
    return True


def all_torus_links(tri: Triangulation) -> bool:
    return all(l.chi == 0 for l in tri.boundary_links)


def search_gluings(tet_count: int, predicate) -> list:
    """Exhaustively enumerate closed orientable gluings of 1 or 2 tetrahedra.

    Faces are paired in lexicographic order (the lowest unpaired face is
    matched against every strictly later face under all six compatible
    permutations plus, for each, the inverse written at the partner), so the
    result list is deterministic and order-stable.  Gluings whose tetrahedra
    split into independent components describe disjoint unions rather than a
    single manifold and are skipped.  Each survivor is analysed with the link
    hypothesis disabled and kept iff predicate(tri) holds.
    """
    if tet_count not in (1, 2):
        raise ValueError("search supports 1 or 2 tetrahedra")
    faces = [(t, f) for t in range(tet_count) for f in range(4)]
    table = {}
    found = []

    def connected() -> bool:
        seen = {0}
        queue = [0]
        while queue:
            t = queue.pop()
            for f in range(4):
                t2 = table[(t, f)][0]
                if t2 not in seen:
                    seen.add(t2)
                    queue.append(t2)
        return len(seen) == tet_count

    def place(i):
        while i < len(faces) and faces[i] in table:
            i += 1
        if i == len(faces):
            if not connected():
                return
            spec = GluingSpec(
                tet_count=tet_count,
                pairings=tuple(table[fc] for fc in faces))
            try:
                tri = build(spec, enforce_link_hypothesis=False)
            except GluingError:
                return
            if predicate(tri):
                found.append(spec)
            return
        t, f = faces[i]
        for j in range(i + 1, len(faces)):
            t2, f2 = faces[j]
            if (t2, f2) in table:
                continue
            for s in _PERMS4:
                if s[f] != f2:
                    continue
                table[(t, f)] = (t2, f2, s)
                table[(t2, f2)] = (t, f, perm_inverse(s))
                place(i + 1)
                del table[(t, f)]
                del table[(t2, f2)]

    place(0)
    return found
