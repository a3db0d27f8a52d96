"""Random track and measure generation shared by the property-based tests."""

import random
from fractions import Fraction

from splitseq.numberfield import field_create, nf_element
from splitseq.traintrack import (
    BranchEnd,
    Measure,
    Switch,
    TrainTrack,
    _connected,
    feasible_point,
    regions,
    switch_coefficients,
)

RATIONALS = field_create([-1, 1], (Fraction(0), Fraction(2)))


def build_track(branches, switches, marks=()) -> TrainTrack:
    """Attach the derived genus so the header is consistent."""
    t = TrainTrack(tuple(branches), tuple(switches), genus=0, puncture_marks=tuple(marks))
    chi = t.s - t.l + len(regions(t))
    if chi % 2:
        raise ValueError("inconsistent ribbon data")
    return TrainTrack(t.branches, t.switches, (2 - chi) // 2, t.puncture_marks)


def _kernel_basis(rows: list[list[int]], n: int) -> list[list[Fraction]]:
    a = [[Fraction(x) for x in row] for row in rows]
    pivots = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        a[r] = [x / a[r][c] for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for row, pc in zip(a, pivots):
            v[pc] = -row[fc]
        basis.append(v)
    return basis


def switch_matrix(t: TrainTrack) -> list[list[int]]:
    return switch_coefficients(t)


def random_measure(t: TrainTrack, rng: random.Random, positive=False, attempts=40):
    """Random rational measure satisfying the switch conditions, or None."""
    basis = _kernel_basis(switch_matrix(t), t.l)
    if not basis:
        return None
    for _ in range(attempts):
        coeffs = [Fraction(rng.randint(-2, 4)) for _ in basis]
        v = [sum(c * b[j] for c, b in zip(coeffs, basis)) for j in range(t.l)]
        if positive and all(x > 0 for x in v):
            break
        if not positive and all(x >= 0 for x in v) and any(x > 0 for x in v):
            break
    else:
        return None
    return Measure.of(
        RATIONALS, {b: nf_element(RATIONALS, [v[j]]) for j, b in enumerate(t.branches)}
    )


def positive_measure(t: TrainTrack, extra_rows=()) -> Measure | None:
    """Exact all->=1 rational measure, or None when only 0 works."""
    rows = switch_matrix(t) + [list(r) for r in extra_rows]
    x = feasible_point(rows, t.l)
    if x is None:
        return None
    return Measure.of(
        RATIONALS,
        {b: nf_element(RATIONALS, [x[j]]) for j, b in enumerate(t.branches)},
    )


def random_track(s: int, rng: random.Random) -> TrainTrack | None:
    """Random connected trivalent track with s switches, or None."""
    l = 3 * s // 2
    branches = [f"b{i}" for i in range(l)]
    ends = [BranchEnd(b, e) for b in branches for e in (0, 1)]
    rng.shuffle(ends)
    switches = []
    for i in range(s):
        a, sl, sr = ends[3 * i : 3 * i + 3]
        switches.append(Switch.trivalent(f"s{i}", a, sl, sr))
    try:
        t = TrainTrack(tuple(branches), tuple(switches), genus=0)
    except Exception:
        return None
    if not _connected(t):
        return None
    chi = t.s - t.l + len(regions(t))
    if chi % 2:
        return None
    return TrainTrack(t.branches, t.switches, genus=(2 - chi) // 2)


def some_track(seed: int, sizes=(2, 4, 6, 8)) -> TrainTrack:
    rng = random.Random(seed)
    while True:
        t = random_track(rng.choice(sizes), rng)
        if t is not None:
            return t


def rename_track(t: TrainTrack, seed: int) -> TrainTrack:
    """Shuffle branch/switch names and list order; same ribbon graph."""
    rng = random.Random(seed)
    bperm = list(range(t.l))
    rng.shuffle(bperm)
    bmap = {b: f"r{j}" for b, j in zip(t.branches, bperm)}
    switches = []
    for i, sw in enumerate(t.switches):
        sides = tuple(
            tuple(BranchEnd(bmap[e.branch], e.end) for e in side) for side in sw.sides
        )
        switches.append(Switch(f"w{i}", sides))
    rng.shuffle(switches)
    marks = tuple(f"w{i}" for i, sw in enumerate(t.switches) if sw.name in t.puncture_marks)
    branches = sorted(bmap.values())
    return TrainTrack(tuple(branches), tuple(switches), t.genus, marks)
