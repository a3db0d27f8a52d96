"""Bordered sutured diagrams and generator counts for curve systems on a track.

The ambient surface is the closed model of a filling generic track: every
complementary region is a disk carrying one marked point, and the marked
points span the dual triangulation (one triangle per switch, one edge per
branch).  A curve system is given in normal coordinates with respect to
that triangulation.  This module draws a canonical picture of the system
together with the track, extracts the reduced dual graph of the complement,
assembles the bordered sutured diagram obtained by cutting along the system,
counts the diagram's generators exactly, and compares the end result against
the closed-form ceiling from :mod:`splitseq.bounds`.

Drawing conventions.  Every count below depends on these and nothing else:

* Crossing points on the dual edge of branch ``b`` are numbered 0..n-1 from
  the region at arrival ``(b, 0)`` toward the region at ``(b, 1)``.
* Inside a triangle, the k-th arc from a corner occupies the k-th point
  from that corner on both adjacent sides (arcs are nested, innermost k=1).
* Branch ``b`` crosses its dual edge once, in the gap after ``cut[b]``
  points; the cut minimises the system crossings of the two branch halves,
  ties resolved toward the low end.
* Between two consecutive arc crossings, a branch half crosses exactly one
  dual-graph wall: the one running through its own dual edge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .arcdiagram import SpecialMark
from .bounds import (
    BoundReport,
    DimensionMismatch,
    IncompatibleCoordinates,
    NormalCurve,
)
from .traintrack import BranchEnd, TrainTrack, regions


class NotDisjoint(ValueError):
    """The curves cannot be realised simultaneously without crossings."""


class EmptyCurve(ValueError):
    """A curve with no essential content: zero coordinates, or a component
    parallel to the boundary of a single complementary region."""


class ComponentWithoutSwitch(ValueError):
    """A complementary piece of the dual graph carries no switch.  Happens
    exactly when the system contains parallel copies of one curve."""


class HallViolation(ValueError):
    """No injective assignment of boundary switches to graph regions."""


# Per tube-cutting piece: extensions of the first kind, the cap on how often
# one beta arc meets the cut circle, and the cap on crossings between the
# distinguished beta arc of the piece and the alpha arcs.
FIRST_KIND_EXTENSIONS = 2
BETA_ARC_PIECE_CAP = 2
BETA_ONE_PIECE_CAP = 5

Corner = tuple  # (switch name, corner index 0..2)
Seg = tuple  # (branch name, gap index 0..n)


# ---------------------------------------------------------------------------
# triangle-by-triangle geometry of a curve system


class _Tri:
    """The three branch ends around one switch, in rotation order."""

    def __init__(self, sw) -> None:
        self.switch: str = sw.name
        self.word: tuple[BranchEnd, ...] = sw.ccw()
        self.cusp = None
        for i in range(3):
            if (
                self.word[i] == sw.small_right
                and self.word[(i + 1) % 3] == sw.small_left
            ):
                self.cusp = i  # corner between the two small ends
        if self.cusp is None:
            raise AssertionError(f"switch {sw.name} has no small-small corner")


def _check_compatibility(t: TrainTrack, tris: dict, coords: dict) -> None:
    for w, tri in tris.items():
        ns = [coords[e.branch] for e in tri.word]
        if sum(ns) % 2:
            raise IncompatibleCoordinates(
                f"odd crossing total at switch {w}: {ns}"
            )
        for c in range(3):
            if ns[c] + ns[(c + 1) % 3] - ns[(c + 2) % 3] < 0:
                raise IncompatibleCoordinates(
                    f"triangle inequality fails at switch {w}, corner {c}"
                )


class _Geom:
    """Canonical realisation of a compatible coordinate vector."""

    def __init__(self, t: TrainTrack, n: dict) -> None:
        self.t = t
        self.n = n
        self.regs = regions(t)
        self.side_of: dict[BranchEnd, int] = {}
        for ri, reg in enumerate(self.regs):
            for h in reg.boundary:
                self.side_of[h] = ri
        self.tris = {sw.name: _Tri(sw) for sw in t.switches}
        _check_compatibility(t, self.tris, n)

        # corner arc counts
        self.a: dict[Corner, int] = {}
        for w, tri in self.tris.items():
            ns = [n[e.branch] for e in tri.word]
            for c in range(3):
                self.a[(w, c)] = (ns[c] + ns[(c + 1) % 3] - ns[(c + 2) % 3]) // 2
            for c in range(3):
                assert self.a[(w, c)] + self.a[(w, (c - 1) % 3)] == ns[c]

        # corner cycle and crossed arrivals around every region point
        self.region_corners: list[tuple[Corner, ...]] = []
        self.region_gaps: list[tuple[BranchEnd, ...]] = []
        for reg in self.regs:
            corners = []
            gaps = []
            T = len(reg.boundary)
            for pos, h in enumerate(reg.boundary):
                w = t.switch_of(h).name
                corners.append((w, self.tris[w].word.index(h)))
                gaps.append(reg.boundary[(pos + 1) % T])
            self.region_corners.append(tuple(corners))
            self.region_gaps.append(tuple(gaps))

        self._fill_points()
        self._choose_cuts()
        self._trace()

    def side_corners(self, e: BranchEnd) -> tuple[Corner, Corner]:
        """Corners adjacent to this triangle side: (at low end, at high end)."""
        tri = self.tris[self.t.switch_of(e).name]
        i = tri.word.index(e)
        nxt = (tri.switch, i)
        prv = (tri.switch, (i - 1) % 3)
        return (nxt, prv) if e.end == 0 else (prv, nxt)

    def _fill_points(self) -> None:
        self.point_arc: dict[tuple[BranchEnd, int], tuple[Corner, int]] = {}
        self.arc_ends: dict[tuple[Corner, int], tuple] = {}
        for w, tri in self.tris.items():
            for c in range(3):
                e1 = tri.word[c]
                e2 = tri.word[(c + 1) % 3]
                n1, n2 = self.n[e1.branch], self.n[e2.branch]
                for k in range(1, self.a[(w, c)] + 1):
                    q1 = k - 1 if e1.end == 0 else n1 - k
                    q2 = n2 - k if e2.end == 0 else k - 1
                    arc = ((w, c), k)
                    for key in ((e1, q1), (e2, q2)):
                        if key in self.point_arc:
                            raise AssertionError(f"point {key} claimed twice")
                        self.point_arc[key] = arc
                    self.arc_ends[arc] = ((e1, q1), (e2, q2))
        expected = 2 * sum(self.n.values())
        assert len(self.point_arc) == expected

    def _choose_cuts(self) -> None:
        self.cut: dict[str, int] = {}
        for b in self.t.branches:
            n = self.n[b]

            def cost(p: int) -> int:
                tot = 0
                for e in (BranchEnd(b, 0), BranchEnd(b, 1)):
                    lo, hi = self.side_corners(e)
                    tot += max(0, self.a[lo] - p) + max(0, self.a[hi] - (n - p))
                return tot

            self.cut[b] = min(range(n + 1), key=lambda p: (cost(p), p))

    def corner_depth(self, e: BranchEnd, corner: Corner) -> int:
        """Points left between the cut of branch e.branch and this corner."""
        lo, hi = self.side_corners(e)
        if corner == lo:
            return self.cut[e.branch]
        if corner == hi:
            return self.n[e.branch] - self.cut[e.branch]
        raise AssertionError(f"{corner} is not adjacent to side {e}")

    def leg_items(self, e: BranchEnd) -> tuple:
        """Arc and wall crossings of the branch half at this switch, ordered
        from the switch outward to the cut."""
        b = e.branch
        n, p = self.n[b], self.cut[b]
        lo, hi = self.side_corners(e)
        out = []
        if p < self.a[lo]:
            for k in range(self.a[lo], p, -1):
                out.append(("arc", lo, k))
                if k - 1 > p:
                    out.append(("wall", (b, k - 1)))
        elif n - p < self.a[hi]:
            for k in range(self.a[hi], n - p, -1):
                out.append(("arc", hi, k))
                if k - 1 > n - p:
                    out.append(("wall", (b, n - (k - 1))))
        return tuple(out)

    def _trace(self) -> None:
        self.comps: list[list] = []
        self.comp_of_arc: dict[tuple[Corner, int], int] = {}
        visited: set[tuple[BranchEnd, int]] = set()
        starts = sorted(self.point_arc, key=lambda key: (key[0], key[1]))
        for start in starts:
            if start in visited:
                continue
            steps = []
            state = start
            while True:
                e, q = state
                arc = self.point_arc[(e, q)]
                end1, end2 = self.arc_ends[arc]
                exit_pt = end2 if end1 == (e, q) else end1
                corner, k = arc
                legs = []
                for side in (e, exit_pt[0]):
                    if k > self.corner_depth(side, corner):
                        legs.append(side)
                steps.append((arc, (e, q), exit_pt, tuple(legs)))
                visited.add((e, q))
                state = (BranchEnd(exit_pt[0].branch, 1 - exit_pt[0].end), exit_pt[1])
                if state == start:
                    break
            for _arc, _ent, ext, _legs in steps:
                visited.add(ext)
            ci = len(self.comps)
            for arc, _ent, _ext, _legs in steps:
                self.comp_of_arc[arc] = ci
            self.comps.append(steps)

    def comp_coords(self, ci: int) -> tuple[int, ...]:
        tally = {b: 0 for b in self.t.branches}
        for _arc, (e, _q), _ext, _legs in self.comps[ci]:
            tally[e.branch] += 1
        return tuple(tally[b] for b in self.t.branches)

    def comp_word(self, ci: int) -> tuple[BranchEnd, ...]:
        out: list[BranchEnd] = []
        for _arc, _ent, _ext, legs in self.comps[ci]:
            out.extend(legs)
        return tuple(out)

    def linking_region(self, ci: int) -> Optional[int]:
        """Region whose boundary this component is parallel to, if any."""
        arcs = [step[0] for step in self.comps[ci]]
        verts = set()
        for (w, c), _k in arcs:
            verts.add(self.side_of[self.tris[w].word[c]])
        if len(verts) != 1:
            return None
        (v,) = verts
        ring = set(self.region_corners[v])
        used = [corner for corner, _k in arcs]
        if (
            all(k == 1 for _corner, k in arcs)
            and len(used) == len(ring)
            and set(used) == ring
        ):
            return v
        return None


# ---------------------------------------------------------------------------
# normalised systems


@dataclass(frozen=True)
class TracedCurve:
    """One component of the realised system."""

    coords: tuple[int, ...]
    crossings: tuple[tuple[str, int], ...]  # branch halves met, in travel order


@dataclass(frozen=True)
class NormalBasis:
    """A disjoint curve system in canonical position against the track."""

    curves: tuple[NormalCurve, ...]
    union: tuple[int, ...]
    cuts: tuple[int, ...]
    corner_arcs: tuple[tuple[str, tuple[int, int, int]], ...]
    components: tuple[TracedCurve, ...]
    assignment: tuple[tuple[int, ...], ...]  # curve index -> component indices
    tau_crossings: int
    length: int

    @property
    def m(self) -> int:
        return len(self.components)


def _assign_components(
    curves: Sequence[NormalCurve], comp_coords: Sequence[tuple[int, ...]]
) -> tuple[tuple[int, ...], ...]:
    used = [False] * len(comp_coords)
    picks: list[tuple[int, ...]] = []

    def fit(ci: int) -> bool:
        if ci == len(curves):
            return all(used)
        want = curves[ci]
        pool = [i for i in range(len(comp_coords)) if not used[i]]
        for combo in itertools.combinations(pool, want.components):
            total = [0] * len(want.coords)
            for i in combo:
                for j, x in enumerate(comp_coords[i]):
                    total[j] += x
            if tuple(total) != want.coords:
                continue
            for i in combo:
                used[i] = True
            picks.append(combo)
            if fit(ci + 1):
                return True
            picks.pop()
            for i in combo:
                used[i] = False
        return False

    if not fit(0):
        raise NotDisjoint(
            "curves cannot be partitioned into the components of their union; "
            "they intersect, or a component count is wrong"
        )
    return tuple(picks)


def normalize_basis(t: TrainTrack, curves: Iterable) -> NormalBasis:
    """Put a disjoint curve system into canonical position.

    Raises DimensionMismatch, IncompatibleCoordinates, EmptyCurve,
    NotDisjoint, or ComponentWithoutSwitch accordingly.
    """
    fixed: list[NormalCurve] = []
    for cur in curves:
        if not isinstance(cur, NormalCurve):
            cur = NormalCurve(tuple(cur))
        if len(cur.coords) != t.l:
            raise DimensionMismatch(
                f"curve has {len(cur.coords)} coordinates, track has {t.l} branches"
            )
        if sum(cur.coords) == 0:
            raise EmptyCurve("curve crosses no dual edge")
        fixed.append(cur)
    if not fixed:
        raise EmptyCurve("empty curve system")

    branches = t.branches
    tris = {sw.name: _Tri(sw) for sw in t.switches}
    for cur in fixed:
        _check_compatibility(t, tris, dict(zip(branches, cur.coords)))
    union = {b: sum(cur.coords[i] for cur in fixed) for i, b in enumerate(branches)}
    geom = _Geom(t, union)

    for ci in range(len(geom.comps)):
        v = geom.linking_region(ci)
        if v is not None:
            raise EmptyCurve(
                f"a component is parallel to the boundary of region {v}"
            )

    comp_coords = [geom.comp_coords(ci) for ci in range(len(geom.comps))]
    assignment = _assign_components(fixed, comp_coords)

    components = tuple(
        TracedCurve(
            coords=comp_coords[ci],
            crossings=tuple((e.branch, e.end) for e in geom.comp_word(ci)),
        )
        for ci in range(len(geom.comps))
    )
    tau = sum(len(c.crossings) for c in components)
    length = sum(union.values())
    assert tau <= 2 * length
    return NormalBasis(
        curves=tuple(fixed),
        union=tuple(union[b] for b in branches),
        cuts=tuple(geom.cut[b] for b in branches),
        corner_arcs=tuple(
            (w, (geom.a[(w, 0)], geom.a[(w, 1)], geom.a[(w, 2)]))
            for w in sorted(geom.tris)
        ),
        components=components,
        assignment=assignment,
        tau_crossings=tau,
        length=length,
    )


# ---------------------------------------------------------------------------
# the dual graph of the cut surface


@dataclass(frozen=True)
class GraphEdge:
    name: str
    ends: tuple[tuple[str, int], tuple[str, int]]  # (switch, side index)
    segments: tuple[tuple[Seg, int], ...]  # (segment, triangle side met first)


@dataclass(frozen=True)
class GraphFace:
    walk: tuple[tuple[str, int], ...]  # (edge name, direction) boundary visits
    corners: tuple[str, ...]  # switch met after each visit
    inside_regions: tuple[int, ...]
    inside_sides: tuple[tuple[int, int], ...]  # (component, 0 left / 1 right)


@dataclass(frozen=True)
class ReducedGraph:
    basis: NormalBasis
    vertices: tuple[str, ...]
    edges: tuple[GraphEdge, ...]
    faces: tuple[GraphFace, ...]


def _seg_node(geom: _Geom, seg: Seg, e: BranchEnd):
    b, g = seg
    lo, hi = geom.side_corners(e)
    if g < geom.a[lo]:
        return ("R", lo[0], lo[1], g)
    if g > geom.n[b] - geom.a[hi]:
        return ("R", hi[0], hi[1], geom.n[b] - g)
    assert g == geom.a[lo] == geom.n[b] - geom.a[hi]
    return ("C", geom.t.switch_of(e).name)


def _check_spine_connected(geom: _Geom) -> None:
    adj: dict = {}
    for b in geom.t.branches:
        for g in range(geom.n[b] + 1):
            n0 = _seg_node(geom, (b, g), BranchEnd(b, 0))
            n1 = _seg_node(geom, (b, g), BranchEnd(b, 1))
            adj.setdefault(n0, set()).add(n1)
            adj.setdefault(n1, set()).add(n0)
    seen: set = set()
    for start in sorted(adj, key=repr):
        if start in seen:
            continue
        stack, piece = [start], {start}
        while stack:
            node = stack.pop()
            for nb in adj[node]:
                if nb not in piece:
                    piece.add(nb)
                    stack.append(nb)
        seen |= piece
        if not any(node[0] == "C" for node in piece):
            raise ComponentWithoutSwitch(
                "a band of the cut surface avoids every switch; "
                "the system contains parallel copies of a curve"
            )


def _central_seg(geom: _Geom, e: BranchEnd) -> Seg:
    lo, _hi = geom.side_corners(e)
    return (e.branch, geom.a[lo])


def _build_edges(geom: _Geom) -> dict[str, GraphEdge]:
    node_segs: dict = {}
    for b in geom.t.branches:
        for g in range(geom.n[b] + 1):
            for eps in (0, 1):
                e = BranchEnd(b, eps)
                node = _seg_node(geom, (b, g), e)
                node_segs.setdefault(node, []).append(((b, g), e))

    claimed: set[Seg] = set()
    raw = []
    for sw in geom.t.switches:
        tri = geom.tris[sw.name]
        for i in range(3):
            e = tri.word[i]
            first = _central_seg(geom, e)
            if first in claimed:
                continue
            run: list[tuple[Seg, int]] = []
            cur, side = first, e
            while True:
                run.append((cur, side.end))
                claimed.add(cur)
                far = BranchEnd(cur[0], 1 - side.end)
                node = _seg_node(geom, cur, far)
                if node[0] == "C":
                    w2 = node[1]
                    tri2 = geom.tris[w2]
                    i2 = tri2.word.index(far)
                    raw.append(((sw.name, i), (w2, i2), tuple(run)))
                    break
                pair = [item for item in node_segs[node] if item[0] != cur]
                assert len(pair) == 1, f"stack node {node} is not a corridor"
                cur, side = pair[0]
    edges = {}
    for k, (end_a, end_b, segs) in enumerate(sorted(raw)):
        edges[f"g{k}"] = GraphEdge(name=f"g{k}", ends=(end_a, end_b), segments=segs)
    return edges


def _trace_faces(edges: dict[str, GraphEdge], alive: set) -> list:
    """Boundary walks of the complement.  Each is a list of (name, dir)."""
    slots: dict[tuple[str, int], tuple[str, int]] = {}
    for name in sorted(alive):
        for d, end in enumerate(edges[name].ends):
            assert end not in slots
            slots[end] = (name, d)

    def next_half(half: tuple[str, int]) -> tuple[str, int]:
        name, d = half
        w, i = edges[name].ends[1 - d]  # head of the half
        for step in (1, 2, 3):
            slot = (w, (i + step) % 3)
            if slot in slots:
                name2, d2 = slots[slot]
                return (name2, d2)
        raise AssertionError("unreachable: head switch has no departing slot")

    todo = {(name, d) for name in alive for d in (0, 1)}
    faces = []
    while todo:
        start = min(todo)
        walk = []
        half = start
        while True:
            walk.append(half)
            todo.discard(half)
            half = next_half(half)
            if half == start:
                break
        faces.append(walk)
    return faces


def _cyclic_key(seq: Sequence) -> tuple:
    tup = tuple(seq)
    return min(tuple(tup[i:] + tup[:i]) for i in range(len(tup)))


def _group_runs(edges, seg_home, items):
    """Collapse an alternating (segment / node) cycle into edge visits.

    items: cyclic list of ("seg", Seg, entry side) and ("C", switch).  The
    entry side is the triangle side facing the node the walk came from; it
    pins down the traversal direction even for one-segment corridors.
    Returns the visit walk [(edge name, dir)] and corner list [switch].
    """
    cs = [i for i, it in enumerate(items) if it[0] == "C"]
    assert cs, "walk without a switch must have been caught as a circle"
    walk, corners = [], []
    for a, b in zip(cs, cs[1:] + [cs[0] + len(items)]):
        corners.append(items[a % len(items)][1])
        run = [items[i % len(items)][1:] for i in range(a + 1, b)]
        assert run, "two switch visits with no wall between them"
        name = seg_home[run[0][0]]
        segs = edges[name].segments
        fwd = len(run) == len(segs) and all(
            r[0] == s and r[1].end == eps for r, (s, eps) in zip(run, segs)
        )
        rev = len(run) == len(segs) and all(
            r[0] == s and r[1].end == 1 - eps
            for r, (s, eps) in zip(run, reversed(segs))
        )
        assert fwd != rev, f"run {run} does not traverse corridor {name} cleanly"
        walk.append((name, 0 if fwd else 1))
    # corners trail the visit they follow
    return tuple(walk), tuple(corners[1:] + corners[:1])


def _type1_items(geom: _Geom, ri: int):
    items = []
    corners = geom.region_corners[ri]
    gaps = geom.region_gaps[ri]
    for pos, corner in enumerate(corners):
        if geom.a[corner] == 0:
            items.append(("C", corner[0]))
        h = gaps[pos]
        g = 0 if h.end == 0 else geom.n[h.branch]
        items.append(("seg", (h.branch, g), BranchEnd(h.branch, 1 - h.end)))
    return items


def _type2_items(geom: _Geom, ci: int, side: int):
    """side 0: left of the travel direction, side 1: right."""
    steps = geom.comps[ci]
    segs: list[Seg] = []
    entries: list[BranchEnd] = []
    for _arc, (e, q), _ext, _legs in steps:
        if side == 0:
            g = q + 1 if e.end == 0 else q
        else:
            g = q if e.end == 0 else q + 1
        segs.append((e.branch, g))
        entries.append(BranchEnd(e.branch, 1 - e.end))
    items = []
    for idx, (_arc, (e, _q), ext, _legs) in enumerate(steps):
        nxt = segs[(idx + 1) % len(segs)]
        node = _seg_node(geom, segs[idx], e)
        node2 = _seg_node(geom, nxt, ext[0])
        assert node == node2, f"side walk breaks inside triangle: {node} vs {node2}"
        items.append(("seg", segs[idx], entries[idx]))
        if node[0] == "C":
            items.append(("C", node[1]))
    return items


def _initial_contents(geom: _Geom, edges: dict[str, GraphEdge], faces: list):
    """Match the constructed region and curve-side walks onto the traced
    faces.  The bijection doubles as a consistency audit of every drawing
    convention above."""
    seg_home = {}
    for name, edge in edges.items():
        seg_home[edge.segments[0][0]] = name
        seg_home[edge.segments[-1][0]] = name

    lookup = {}
    for fi, face in enumerate(faces):
        lookup[_cyclic_key(face)] = fi

    def locate(walk: tuple) -> int:
        key = _cyclic_key(walk)
        if key in lookup:
            return lookup[key]
        flipped = tuple((name, 1 - d) for name, d in reversed(walk))
        key = _cyclic_key(flipped)
        if key in lookup:
            return lookup[key]
        raise AssertionError(f"no traced face matches walk {walk}")

    contents: dict[int, dict] = {
        fi: {"regions": [], "sides": []} for fi in range(len(faces))
    }
    for ri in range(len(geom.regs)):
        walk, _corners = _group_runs(edges, seg_home, _type1_items(geom, ri))
        contents[locate(walk)]["regions"].append(ri)
    for ci in range(len(geom.comps)):
        for side in (0, 1):
            walk, _corners = _group_runs(
                edges, seg_home, _type2_items(geom, ci, side)
            )
            contents[locate(walk)]["sides"].append((ci, side))
    total = sum(len(v["regions"]) + len(v["sides"]) for v in contents.values())
    assert total == len(geom.regs) + 2 * len(geom.comps)
    assert all(
        len(v["regions"]) + len(v["sides"]) == 1 for v in contents.values()
    ), "initial faces must carry exactly one region point or curve side each"
    return contents


def _find_type1_bigon(geom: _Geom) -> Optional[tuple[int, int, int]]:
    for ri, corners in enumerate(geom.region_corners):
        free = [pos for pos, corner in enumerate(corners) if geom.a[corner] == 0]
        assert free, "fully encircled region point must have been rejected"
        if len(free) == 1:
            if len(corners) == 1:
                raise ValueError(
                    f"region {ri} meets the track along a single corner; "
                    "the closed model does not admit the construction"
                )
            raise ValueError(
                f"the system leaves a single free corner at region {ri}; "
                "its length is not minimal"
            )
        if len(free) == 2:
            return (ri, free[0], free[1])
    return None


def _push_across(t: TrainTrack, geom: _Geom, basis: NormalBasis, hit) -> NormalBasis:
    """Slide the arc bundle hugging one side of a two-cornered face across
    the region point.  Total length must be unchanged."""
    ri, i, j = hit
    corners = geom.region_corners[ri]
    gaps = geom.region_gaps[ri]
    T = len(corners)

    def span(a: int, b: int):
        mids, crossed = [], []
        pos = a
        while pos != b:
            crossed.append(gaps[pos])
            pos = (pos + 1) % T
            if pos != b:
                mids.append(corners[pos])
        return mids, crossed

    mids_a, gaps_a = span(i, j)
    mids_b, gaps_b = span(j, i)
    if len(gaps_a) != len(gaps_b):
        raise ValueError(
            f"sliding across region {ri} changes the total length; "
            "the system is not of minimal length"
        )
    mids, minus, plus = (mids_a, gaps_a, gaps_b) if mids_a else (mids_b, gaps_b, gaps_a)
    if not mids:
        raise ValueError(f"region {ri} is a two-cornered disk; cannot reduce")
    q0 = min(geom.a[c] for c in mids)
    assert q0 >= 1

    curve_of_comp = {}
    for ci, comps in enumerate(basis.assignment):
        for comp in comps:
            curve_of_comp[comp] = ci
    branches = t.branches
    deltas = [[0] * len(branches) for _ in basis.curves]
    bindex = {b: k for k, b in enumerate(branches)}
    for depth in range(1, q0 + 1):
        comp = geom.comp_of_arc[(mids[0], depth)]
        ci = curve_of_comp[comp]
        for h in minus:
            deltas[ci][bindex[h.branch]] -= 1
        for h in plus:
            deltas[ci][bindex[h.branch]] += 1
    new_curves = []
    for ci, cur in enumerate(basis.curves):
        coords = tuple(x + d for x, d in zip(cur.coords, deltas[ci]))
        if any(x < 0 for x in coords):
            raise AssertionError("slide drove a coordinate negative")
        new_curves.append(NormalCurve(coords, cur.components))
    out = normalize_basis(t, new_curves)
    assert out.length == basis.length, "slide must preserve total length"
    return out


class _UnionFind:
    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        self.parent[self.find(x)] = self.find(y)


def dual_graph(t: TrainTrack, basis: NormalBasis) -> ReducedGraph:
    """Reduced dual graph of the surface cut along the system.

    Slides length-neutral arc bundles off two-cornered faces, then deletes
    walls of one-visit and two-visit faces until every face is combinatorially
    at least a triangle or is bounded by a single wall.
    """
    geom = None
    for _round in range(64 + 8 * t.l):
        geom = _Geom(t, dict(zip(t.branches, basis.union)))
        _check_spine_connected(geom)
        hit = _find_type1_bigon(geom)
        if hit is None:
            break
        basis = _push_across(t, geom, basis, hit)
    else:
        raise ValueError("corner slides did not converge")

    edges = _build_edges(geom)
    alive = set(edges)
    walks0 = _trace_faces(edges, alive)
    contents0 = _initial_contents(geom, edges, walks0)
    half_home = {}
    for fi, walk in enumerate(walks0):
        for half in walk:
            half_home[half] = fi
    uf = _UnionFind(len(walks0))

    def class_sides(name: str) -> int:
        root = uf.find(half_home[(name, 0)])
        tally = 0
        for fi in range(len(walks0)):
            if uf.find(fi) == root:
                tally += len(contents0[fi]["sides"])
        return tally

    while True:
        walks = _trace_faces(edges, alive)
        target = None
        monos = sorted(w[0][0] for w in walks if len(w) == 1)
        if monos:
            target = monos[0]
            if class_sides(target) == 0:
                raise ValueError(
                    "a region point sits in a one-wall face; "
                    "the system is not of minimal length"
                )
        else:
            bigs = sorted(
                tuple(sorted(name for name, _d in w))
                for w in walks
                if len(w) == 2 and w[0][0] != w[1][0]
            )
            if not bigs:
                break
            target = bigs[0][0]
        uf.union(half_home[(target, 0)], half_home[(target, 1)])
        alive.remove(target)

    if not alive:
        raise ValueError("reduction deleted every wall; system too small")

    final_walks = _trace_faces(edges, alive)
    seen_roots: dict[int, int] = {}
    faces = []
    for walk in sorted(final_walks, key=_cyclic_key):
        roots = {uf.find(half_home[half]) for half in walk}
        assert len(roots) == 1, "face walk spans several merged zones"
        (root,) = roots
        if root in seen_roots:
            raise ValueError(
                "reduction produced a face with disconnected boundary"
            )
        seen_roots[root] = 1
        regions_in, sides_in = [], []
        for fi in range(len(walks0)):
            if uf.find(fi) == root:
                regions_in.extend(contents0[fi]["regions"])
                sides_in.extend(contents0[fi]["sides"])
        corners = []
        for half in walk:
            name, d = half
            corners.append(edges[name].ends[1 - d][0])
        faces.append(
            GraphFace(
                walk=tuple(walk),
                corners=tuple(corners),
                inside_regions=tuple(sorted(regions_in)),
                inside_sides=tuple(sorted(sides_in)),
            )
        )

    euler = (
        t.s
        - len(alive)
        + sum(1 - len(f.inside_sides) for f in faces)
    )
    if euler != 2 - 2 * t.genus:
        raise ValueError(
            f"face census is inconsistent: chi {euler} != {2 - 2 * t.genus}"
        )
    for f in faces:
        assert len(f.walk) >= 3 or len({name for name, _d in f.walk}) == 1

    kept = tuple(edges[name] for name in sorted(alive))
    return ReducedGraph(
        basis=basis,
        vertices=tuple(sw.name for sw in t.switches),
        edges=kept,
        faces=tuple(faces),
    )


# ---------------------------------------------------------------------------
# face-to-switch assignment


@dataclass(frozen=True)
class SigmaPrime:
    graph: ReducedGraph
    choice: tuple[str, ...]  # one switch per face, injective


def sigma_prime(graph: ReducedGraph) -> SigmaPrime:
    """Injective choice of a boundary switch for every face, by augmenting
    paths over the face walks in a fixed order."""
    cand = [sorted(set(f.corners)) for f in graph.faces]
    owner: dict[str, int] = {}

    def claim(fi: int, blocked: set) -> bool:
        for w in cand[fi]:
            if w in blocked:
                continue
            blocked.add(w)
            if w not in owner or claim(owner[w], blocked):
                owner[w] = fi
                return True
        return False

    for fi in range(len(graph.faces)):
        if not claim(fi, set()):
            raise HallViolation(
                f"faces {sorted(set(sum((cand[j] for j in range(fi + 1)), [])))} "
                f"cannot host face {fi} injectively"
            )
    choice = [""] * len(graph.faces)
    for w, fi in owner.items():
        choice[fi] = w
    return SigmaPrime(graph=graph, choice=tuple(choice))


# ---------------------------------------------------------------------------
# the diagram


@dataclass(frozen=True)
class CircleInfo:
    switch: str
    sutures: int
    starred: bool
    chosen: bool  # lies in the image of the face assignment


@dataclass(frozen=True)
class TubePiece:
    switch: str
    first_kind: int
    arc_meetings: int  # crossings of beta arcs with the cut circle
    one_meetings: int  # crossings of the distinguished beta arc with alphas
    factor: int


@dataclass(frozen=True)
class BorderedSuturedDiagram:
    genus: int
    circles: tuple[CircleInfo, ...]
    alpha_arcs: tuple[str, ...]
    beta_circles: tuple[str, ...]
    beta_arcs: tuple[str, ...]
    beta_arc_ends: tuple[tuple[str, tuple[str, str]], ...]  # arc -> end switches
    intersections: tuple[tuple[str, str, int], ...]
    beta_orders: tuple[tuple[str, tuple[str, ...]], ...]
    basis_length: int
    m: int
    pieces: tuple[TubePiece, ...] = ()

    def crossing(self, alpha: str, beta: str) -> int:
        for a, b, n in self.intersections:
            if a == alpha and b == beta:
                return n
        return 0


def _ring_items(geom: _Geom, w: str):
    """Cyclic boundary order around a switch: corner marks, wall exits and
    branch legs, rotating with the triangle."""
    tri = geom.tris[w]
    ring = []
    for i in range(3):
        ring.append(("corner", (i - 1) % 3))
        e = tri.word[i]
        lo, _hi = geom.side_corners(e)
        p_wall = geom.a[lo]
        p_leg = geom.cut[e.branch]
        wall = ("wall", i)
        leg = ("leg", e)
        if p_wall == p_leg:
            pair = [wall, leg]
        elif e.end == 0:
            pair = [wall, leg] if p_wall > p_leg else [leg, wall]
        else:
            pair = [wall, leg] if p_wall < p_leg else [leg, wall]
        ring.extend(pair)
    return ring


def _detach_legs(geom: _Geom, w: str, slot: int) -> list[BranchEnd]:
    """Branch legs crossed between the plain suture arc and a wall exit,
    taking the shorter way around the circle; returned from the suture
    outward to the exit."""
    tri = geom.tris[w]
    ring = _ring_items(geom, w)
    start = ring.index(("wall", slot))
    cusp = ("corner", tri.cusp)
    paths = []
    for step in (1, -1):
        legs = []
        pos = start
        while True:
            pos = (pos + step) % len(ring)
            item = ring[pos]
            if item == cusp:
                break
            if item[0] == "leg":
                legs.append(item[1])
        paths.append(legs)
    fwd, back = paths
    best = fwd if len(fwd) <= len(back) else back
    return list(reversed(best))


def _long_way_legs(geom: _Geom, w: str) -> list[BranchEnd]:
    """All three branch legs in circle order, starting after the cusp."""
    ring = _ring_items(geom, w)
    tri = geom.tris[w]
    start = ring.index(("corner", tri.cusp))
    legs = []
    for off in range(1, len(ring) + 1):
        item = ring[(start + off) % len(ring)]
        if item[0] == "leg":
            legs.append(item[1])
    return legs


def build_diagram(
    t: TrainTrack, basis: NormalBasis, sigma: SpecialMark, assign: SigmaPrime
) -> BorderedSuturedDiagram:
    """Assemble the bordered sutured diagram for the cut-open surface.

    `basis` must be the one carried by `assign.graph` (corner slides during
    reduction may have replaced the input system by an equivalent one).
    """
    graph = assign.graph
    if graph.basis.union != basis.union or graph.basis.curves != basis.curves:
        raise ValueError("basis does not match the reduced graph; pass graph.basis")
    geom = _Geom(t, dict(zip(t.branches, basis.union)))
    rmap = sigma.region_map(t)
    starred = set(rmap.values())
    names = [sw.name for sw in t.switches]
    hug = {w: w not in starred for w in names}

    g = t.genus
    s, l, kappa = t.s, t.l, len(geom.regs)
    m = basis.m
    alpha1 = [f"a1.{b}" for b in t.branches]
    alpha2 = [f"a2.{w}" for w in names if hug[w]]
    assert len(alpha2) == s - kappa
    assert len(alpha1) + len(alpha2) == 2 * (g + s - 1)

    chosen = set(assign.choice)
    beta_c = [f"bc{ci}" for ci in range(m)]
    beta1 = [f"b1.{edge.name}" for edge in graph.edges]
    beta2 = [f"b2.{w}" for w in names if w not in chosen]
    assert len(beta1) + len(beta2) == 2 * (g + s - m - 1), (
        "wall and spare-circle count must match the cut-surface rank"
    )

    cross: dict[tuple[str, str], int] = {}
    orders: list[tuple[str, tuple[str, ...]]] = []

    def add(a: str, b: str, k: int = 1) -> None:
        cross[(a, b)] = cross.get((a, b), 0) + k

    # curve components against the branch arcs
    circle_total = 0
    for ci, comp in enumerate(basis.components):
        order = []
        for b, _eps in comp.crossings:
            add(f"a1.{b}", f"bc{ci}", 1)
            order.append(f"a1.{b}")
        circle_total += len(order)
        orders.append((f"bc{ci}", tuple(order)))
    assert circle_total == basis.tau_crossings <= 2 * basis.length

    # wall arcs: interior crossings plus detachment at both ends
    wall_legs: dict[Seg, set[BranchEnd]] = {}
    for b in t.branches:
        for eps in (0, 1):
            e = BranchEnd(b, eps)
            for item in geom.leg_items(e):
                if item[0] == "wall":
                    wall_legs.setdefault(item[1], set()).add(e)

    arc_ends: list[tuple[str, tuple[str, str]]] = []
    for edge in graph.edges:
        label = f"b1.{edge.name}"
        parts: list[list[str]] = []
        for w, slot in edge.ends:
            part: list[str] = []
            if hug[w]:
                part.append(f"a2.{w}")
                add(f"a2.{w}", label, 1)
            for e in _detach_legs(geom, w, slot):
                part.append(f"a1.{e.branch}")
                add(f"a1.{e.branch}", label, 1)
            parts.append(part)
        head, tail = parts
        assert len(head) + len(tail) <= 8, "wall arc end adjustments exceed the cap"
        interior: list[str] = []
        for seg, first in edge.segments:
            for eps in (first, 1 - first):
                e = BranchEnd(seg[0], eps)
                if e in wall_legs.get(seg, ()):
                    interior.append(f"a1.{seg[0]}")
                    add(f"a1.{seg[0]}", label, 1)
        orders.append((label, tuple(head + interior + list(reversed(tail)))))
        arc_ends.append((label, (edge.ends[0][0], edge.ends[1][0])))

    # spare circles: the long way around, once per switch off the image
    for w in names:
        if w in chosen:
            continue
        label = f"b2.{w}"
        order = []
        if hug[w]:
            order.append(f"a2.{w}")
            add(f"a2.{w}", label, 1)
        for e in _long_way_legs(geom, w):
            order.append(f"a1.{e.branch}")
            add(f"a1.{e.branch}", label, 1)
        if hug[w]:
            order.append(f"a2.{w}")
            add(f"a2.{w}", label, 1)
        orders.append((label, tuple(order)))
        arc_ends.append((label, (w, w)))

    circles = tuple(
        CircleInfo(switch=w, sutures=2, starred=(w in starred), chosen=(w in chosen))
        for w in names
    )
    intersections = tuple(sorted((a, b, n) for (a, b), n in cross.items()))
    return BorderedSuturedDiagram(
        genus=g,
        circles=circles,
        alpha_arcs=tuple(alpha1 + alpha2),
        beta_circles=tuple(beta_c),
        beta_arcs=tuple(beta1 + beta2),
        beta_arc_ends=tuple(sorted(arc_ends)),
        intersections=intersections,
        beta_orders=tuple(sorted(orders)),
        basis_length=basis.length,
        m=m,
    )


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class GeneratorSet:
    count: int
    generators: Optional[tuple] = None  # tuples of (alpha, beta, point index)


def count_generators(
    d: BorderedSuturedDiagram, enumerate_all: bool = False
) -> GeneratorSet:
    """Count sets of crossing points that occupy every beta circle exactly
    once and every arc at most once, alphas pairwise distinct.

    The count runs a subset-mask sweep over the beta objects and stays
    polynomial in the crossing data for a fixed beta count; explicit
    enumeration is for small diagrams only.
    """
    betas = list(d.beta_circles) + list(d.beta_arcs)
    bindex = {b: i for i, b in enumerate(betas)}
    need = 0
    for b in d.beta_circles:
        need |= 1 << bindex[b]
    options: dict[str, list[tuple[int, str, int]]] = {a: [] for a in d.alpha_arcs}
    for a, b, n in d.intersections:
        if n > 0:
            options[a].append((bindex[b], b, n))

    dp: dict[int, int] = {0: 1}
    for a in d.alpha_arcs:
        ndp = dict(dp)
        for mask, ways in dp.items():
            for bi, _b, n in options[a]:
                if mask >> bi & 1:
                    continue
                key = mask | 1 << bi
                ndp[key] = ndp.get(key, 0) + ways * n
        dp = ndp
    total = sum(ways for mask, ways in dp.items() if mask & need == need)

    gens = None
    if enumerate_all:
        if total > 200000:
            raise ValueError(f"refusing to enumerate {total} generators")
        found: list[tuple] = []

        def walk(idx: int, mask: int, picked: tuple) -> None:
            if idx == len(d.alpha_arcs):
                if mask & need == need:
                    found.append(tuple(sorted(picked)))
                return
            a = d.alpha_arcs[idx]
            walk(idx + 1, mask, picked)
            for bi, b, n in options[a]:
                if mask >> bi & 1:
                    continue
                for pt in range(1, n + 1):
                    walk(idx + 1, mask | 1 << bi, picked + ((a, b, pt),))

        walk(0, 0, ())
        assert len(found) == total
        gens = tuple(sorted(found))
    return GeneratorSet(count=total, generators=gens)


# ---------------------------------------------------------------------------
# tube cutting and the final check


def attach_tube_cutting(
    d: BorderedSuturedDiagram, gens: GeneratorSet
) -> tuple[BorderedSuturedDiagram, GeneratorSet]:
    """Cut the boundary circles open along tubes; every piece multiplies the
    generator count by a bounded factor.

    Per piece the factor is ``FIRST_KIND_EXTENSIONS + a_w * b_w`` where a_w
    caps the crossings of the incident beta arcs with the cut circle and b_w
    the crossings of the distinguished arc with the alphas near the circle:
    three branch legs plus two for the suture-hugging arc when present.
    """
    if d.pieces:
        raise ValueError("tube cutting was already attached")
    arcs_at: dict[str, int] = {c.switch: 0 for c in d.circles}
    for _label, ends in d.beta_arc_ends:
        for w in set(ends):
            arcs_at[w] += 1

    pieces = []
    factor_total = 1
    g, s, m = d.genus, len(d.circles), d.m
    cap = 20 * (g + s - m) - 18
    for c in d.circles:
        a_w = BETA_ARC_PIECE_CAP * arcs_at[c.switch]
        b_w = 3 + (0 if c.starred else 2)
        assert b_w <= BETA_ONE_PIECE_CAP
        factor = FIRST_KIND_EXTENSIONS + a_w * b_w
        assert factor <= cap, f"piece factor {factor} breaks the cap {cap}"
        pieces.append(
            TubePiece(
                switch=c.switch,
                first_kind=FIRST_KIND_EXTENSIONS,
                arc_meetings=a_w,
                one_meetings=b_w,
                factor=factor,
            )
        )
        factor_total *= factor
    d2 = replace(d, pieces=tuple(pieces))
    return d2, GeneratorSet(count=gens.count * factor_total, generators=None)


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    count: int
    bound: int
    notes: tuple[str, ...]


def verify_bound(d: BorderedSuturedDiagram, report: BoundReport) -> BoundCheck:
    """Compare the end-to-end generator count of a tube-cut diagram with the
    closed-form ceiling of the report."""
    notes = []
    count = count_generators(d).count
    for piece in d.pieces:
        count *= piece.factor
    if not d.pieces:
        notes.append("no tube pieces attached; raw diagram count")
    if d.basis_length > report.M_psi:
        notes.append(
            f"system length {d.basis_length} exceeds the cap {report.M_psi}"
        )
    if d.m > 2 * report.g:
        notes.append(f"{d.m} components exceed 2g = {2 * report.g}")
    if report.g != d.genus:
        notes.append(f"genus mismatch: diagram {d.genus}, report {report.g}")
    if count > report.dd:
        notes.append(f"count {count} exceeds the ceiling {report.dd}")
    return BoundCheck(
        passed=not notes, count=count, bound=report.dd, notes=tuple(notes)
    )


def serialize_diagram(d: BorderedSuturedDiagram) -> str:
    """Stable text form; equal diagrams serialise byte-identically."""
    lines = [
        f"diagram genus {d.genus} circles {len(d.circles)}",
        f"basis length {d.basis_length} components {d.m}",
    ]
    for c in d.circles:
        lines.append(
            f"circle {c.switch} sutures {c.sutures} "
            f"starred {int(c.starred)} chosen {int(c.chosen)}"
        )
    for a in d.alpha_arcs:
        lines.append(f"alpha {a}")
    for b in d.beta_circles:
        lines.append(f"beta circle {b}")
    for b in d.beta_arcs:
        lines.append(f"beta arc {b}")
    for label, (w1, w2) in d.beta_arc_ends:
        lines.append(f"ends {label} {w1} {w2}")
    for a, b, n in d.intersections:
        lines.append(f"x {a} {b} {n}")
    for label, order in d.beta_orders:
        lines.append(f"order {label}: {' '.join(order)}")
    for p in d.pieces:
        lines.append(
            f"piece {p.switch} first {p.first_kind} arcs {p.arc_meetings} "
            f"one {p.one_meetings} factor {p.factor}"
        )
    return "\n".join(lines) + "\n"
