"""Exact arithmetic in a real algebraic number field Q(lambda).

Elements are rational coordinate vectors in the power basis 1, lambda, ...,
lambda^(d-1) for a monic integer minimal polynomial with a designated real
root, pinned down by a rational isolating interval.  Signs of elements are
decided exactly: the zero test is canonical-form comparison after reduction,
and nonzero signs come from Sturm counts plus interval bisection, so weight
comparisons (the consumers are branch-weight ties) never depend on floating
point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class NonMonic(ValueError):
    """Minimal polynomial is not monic (or not an integer polynomial)."""


class NotIsolating(ValueError):
    """Interval does not isolate exactly one real root of the minimal polynomial."""


class DivisionByZero(ZeroDivisionError):
    """Division by the zero element of the field."""


class NotPerronFrobenius(ValueError):
    """No power of the matrix up to dimension**2 is entrywise positive."""


# ---------------------------------------------------------------------------
# dense polynomials over Fraction, low-to-high coefficient tuples


def _trim(p: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    n = len(p)
    while n > 0 and p[n - 1] == 0:
        n -= 1
    return p[:n]


def _poly_eval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _poly_deriv(p: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return _trim(tuple(Fraction(i) * p[i] for i in range(1, len(p))))


def _poly_neg(p: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(-c for c in p)


def _poly_rem(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[Fraction, ...]:
    a = list(a)
    db, lb = len(b) - 1, b[-1]
    while len(a) - 1 >= db and _trim(tuple(a)):
        a = list(_trim(tuple(a)))
        if len(a) - 1 < db:
            break
        q = a[-1] / lb
        shift = len(a) - 1 - db
        for i in range(len(b)):
            a[shift + i] -= q * b[i]
        a = a[:-1]
    return _trim(tuple(a))


def _sturm_chain(p: tuple[Fraction, ...]) -> list[tuple[Fraction, ...]]:
    chain = [_trim(p), _poly_deriv(p)]
    while chain[-1]:
        r = _poly_rem(chain[-2], chain[-1])
        if not r:
            break
        chain.append(_poly_neg(r))
    return [q for q in chain if q]


def _sign_changes(chain: list[tuple[Fraction, ...]], x: Fraction) -> int:
    signs = []
    for q in chain:
        v = _poly_eval(q, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def sturm_count(p: Sequence[Fraction], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots of p in the half-open interval (lo, hi]."""
    chain = _sturm_chain(_trim(tuple(p)))
    if not chain:
        raise ValueError("zero polynomial has no root count")
    return _sign_changes(chain, lo) - _sign_changes(chain, hi)


# ---------------------------------------------------------------------------
# fields and elements


@dataclass(frozen=True, eq=False)
class NumberField:
    """Q(lambda) for the single real root of `minpoly` inside `root_interval`."""

    minpoly: tuple[int, ...]  # low-to-high, monic
    root_interval: tuple[Fraction, Fraction]

    @property
    def degree(self) -> int:
        return len(self.minpoly) - 1

    def __eq__(self, other) -> bool:
        # identity of the root, not of the isolating interval
        if not isinstance(other, NumberField):
            return NotImplemented
        if self.minpoly != other.minpoly:
            return False
        if self.root_interval == other.root_interval or self.degree == 1:
            return True
        lo = max(self.root_interval[0], other.root_interval[0])
        hi = min(self.root_interval[1], other.root_interval[1])
        if not lo < hi:
            return False
        p = tuple(Fraction(c) for c in self.minpoly)
        if _poly_eval(p, lo) == 0:  # root sits on the shared endpoint
            return False
        return sturm_count(p, lo, hi) == 1

    def __hash__(self) -> int:
        return hash(self.minpoly)

    def refine(self, steps: int = 1) -> "NumberField":
        """Halve the isolating interval `steps` times (sign queries are stable)."""
        lo, hi = self.root_interval
        p = tuple(Fraction(c) for c in self.minpoly)
        for _ in range(steps):
            if self.degree == 1:
                root = Fraction(-self.minpoly[0], self.minpoly[1])
                quarter = (hi - lo) / 4
                lo, hi = root - quarter, root + quarter
                continue
            mid = (lo + hi) / 2
            vm = _poly_eval(p, mid)
            if vm == 0:  # rational root of an irreducible poly: degree 1 only
                raise NotIsolating("midpoint is a rational root; declare degree 1")
            if _poly_eval(p, lo) * vm < 0:
                hi = mid
            else:
                lo = mid
        return NumberField(self.minpoly, (lo, hi))

    def root_float(self, bits: int = 60) -> float:
        """Float approximation of lambda, for display only."""
        f = self
        while f.root_interval[1] - f.root_interval[0] > Fraction(1, 2**bits):
            f = f.refine()
        lo, hi = f.root_interval
        return float((lo + hi) / 2)


def field_create(minpoly: Sequence[int], interval: tuple) -> NumberField:
    """Build the field handle after checking monicity and root isolation."""
    coeffs = tuple(int(c) for c in minpoly)
    if tuple(coeffs) != tuple(minpoly) or any(c != int(c) for c in minpoly):
        raise NonMonic("minimal polynomial must have integer coefficients")
    if len(coeffs) < 2:
        raise NonMonic("degree must be at least 1")
    if coeffs[-1] != 1:
        raise NonMonic("minimal polynomial must be monic")
    lo, hi = Fraction(interval[0]), Fraction(interval[1])
    if not lo < hi:
        raise NotIsolating("interval endpoints must satisfy lo < hi")
    p = tuple(Fraction(c) for c in coeffs)
    if len(coeffs) == 2:
        root = Fraction(-coeffs[0], coeffs[1])
        if not lo <= root <= hi:
            raise NotIsolating("interval misses the rational root")
        return NumberField(coeffs, (lo, hi))
    if _poly_eval(p, lo) == 0 or _poly_eval(p, hi) == 0:
        raise NotIsolating("interval endpoint is a root; shrink the interval")
    if sturm_count(p, lo, hi) != 1:
        raise NotIsolating("interval must contain exactly one real root")
    return NumberField(coeffs, (lo, hi))


@dataclass(frozen=True)
class NFElement:
    """Element of Q(lambda) as rational coordinates in the power basis."""

    field: NumberField
    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        d = self.field.degree
        if len(self.coeffs) != d:
            raise ValueError(f"coordinate vector must have length {d}")

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    # operator sugar; all arithmetic funnels through nf_arith
    def __add__(self, other):
        return nf_arith("add", self, _coerce(self.field, other))

    def __radd__(self, other):
        return nf_arith("add", _coerce(self.field, other), self)

    def __sub__(self, other):
        return nf_arith("sub", self, _coerce(self.field, other))

    def __rsub__(self, other):
        return nf_arith("sub", _coerce(self.field, other), self)

    def __mul__(self, other):
        return nf_arith("mul", self, _coerce(self.field, other))

    def __rmul__(self, other):
        return nf_arith("mul", _coerce(self.field, other), self)

    def __truediv__(self, other):
        return nf_arith("div", self, _coerce(self.field, other))

    def __rtruediv__(self, other):
        return nf_arith("div", _coerce(self.field, other), self)

    def __neg__(self):
        return NFElement(self.field, tuple(-c for c in self.coeffs))

    def to_float(self, bits: int = 60) -> float:
        x = self.field.root_float(bits)
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc


def nf_const(field: NumberField, value) -> NFElement:
    """Embed a rational constant."""
    v = Fraction(value)
    return NFElement(field, (v,) + (Fraction(0),) * (field.degree - 1))


def nf_element(field: NumberField, coeffs: Sequence) -> NFElement:
    """Element from a raw coordinate sequence (entries coerced to Fraction)."""
    return NFElement(field, tuple(Fraction(c) for c in coeffs))


def nf_gen(field: NumberField) -> NFElement:
    """The generator lambda itself (equals the constant root when degree is 1)."""
    if field.degree == 1:
        return nf_const(field, Fraction(-field.minpoly[0], field.minpoly[1]))
    return NFElement(
        field,
        (Fraction(0), Fraction(1)) + (Fraction(0),) * (field.degree - 2),
    )


def _coerce(field: NumberField, value) -> NFElement:
    if isinstance(value, NFElement):
        if value.field != field:
            raise ValueError("elements belong to different fields")
        return value
    return nf_const(field, value)


def _reduce(field: NumberField, raw: list[Fraction]) -> tuple[Fraction, ...]:
    # kill degrees >= d using x^d = -(m_0 + ... + m_{d-1} x^{d-1})
    d = field.degree
    m = field.minpoly
    for k in range(len(raw) - 1, d - 1, -1):
        c = raw[k]
        if c == 0:
            continue
        raw[k] = Fraction(0)
        for i in range(d):
            raw[k - d + i] -= c * m[i]
    return tuple(raw[:d]) if len(raw) >= d else tuple(raw) + (Fraction(0),) * (d - len(raw))


def nf_arith(op: str, a: NFElement, b: NFElement) -> NFElement:
    """Exact field arithmetic; results are reduced to canonical coordinates."""
    if a.field != b.field:
        raise ValueError("elements belong to different fields")
    f = a.field
    d = f.degree
    if op == "add":
        return NFElement(f, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))
    if op == "sub":
        return NFElement(f, tuple(x - y for x, y in zip(a.coeffs, b.coeffs)))
    if op == "mul":
        raw = [Fraction(0)] * (2 * d - 1)
        for i, x in enumerate(a.coeffs):
            if x == 0:
                continue
            for j, y in enumerate(b.coeffs):
                if y == 0:
                    continue
                raw[i + j] += x * y
        return NFElement(f, _reduce(f, raw))
    if op == "div":
        return nf_arith("mul", a, _invert(b))
    raise ValueError(f"unknown operation {op!r}")


def _invert(b: NFElement) -> NFElement:
    if b.is_zero():
        raise DivisionByZero("division by zero element")
    f = b.field
    # extended Euclid on (b, minpoly) over Q; gcd is 1 since minpoly is irreducible
    r0 = _trim(tuple(b.coeffs))
    r1 = tuple(Fraction(c) for c in f.minpoly)
    s0: tuple[Fraction, ...] = (Fraction(1),)
    s1: tuple[Fraction, ...] = ()
    while r1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
    # r0 = gcd (a nonzero constant); s0 * b = r0 (mod minpoly)
    scale = r0[0]
    inv = [c / scale for c in s0]
    return NFElement(f, _reduce(f, inv + [Fraction(0)] * max(0, f.degree - len(inv))))


def _poly_mul(a: tuple[Fraction, ...], b: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim(tuple(out))


def _poly_sub(a: tuple[Fraction, ...], b: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    n = max(len(a), len(b))
    aa = tuple(a) + (Fraction(0),) * (n - len(a))
    bb = tuple(b) + (Fraction(0),) * (n - len(b))
    return _trim(tuple(x - y for x, y in zip(aa, bb)))


def _poly_divmod(a, b):
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    r = list(a)
    db, lb = len(b) - 1, b[-1]
    while _trim(tuple(r)) and len(_trim(tuple(r))) - 1 >= db:
        r = list(_trim(tuple(r)))
        k = len(r) - 1 - db
        c = r[-1] / lb
        q[k] = c
        for i in range(len(b)):
            r[k + i] -= c * b[i]
        r = r[:-1]
    return _trim(tuple(q)), _trim(tuple(r))


def nf_sign(a: NFElement) -> int:
    """Sign of the real number a(lambda): -1, 0, or +1, decided exactly."""
    if a.is_zero():
        return 0
    f = a.field
    if f.degree == 1:
        v = _poly_eval(a.coeffs, Fraction(-f.minpoly[0], f.minpoly[1]))
        return 0 if v == 0 else (1 if v > 0 else -1)
    p = _trim(tuple(a.coeffs))
    lo, hi = f.root_interval
    while True:
        vlo, vhi = _poly_eval(p, lo), _poly_eval(p, hi)
        if vlo != 0 and vhi != 0 and sturm_count(p, lo, hi) == 0:
            return 1 if vlo > 0 else -1
        f = NumberField(f.minpoly, (lo, hi)).refine()
        lo, hi = f.root_interval


# ---------------------------------------------------------------------------
# Perron eigendata


def _is_primitive(M: Sequence[Sequence[int]], cap: int) -> bool:
    n = len(M)
    reach = [[bool(M[i][j]) for j in range(n)] for i in range(n)]
    step = [row[:] for row in reach]
    for _ in range(cap):
        if all(all(row) for row in step):
            return True
        step = [
            [any(step[i][k] and reach[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)
        ]
    return all(all(row) for row in step)


def _charpoly(M: Sequence[Sequence[int]]) -> tuple[int, ...]:
    import sympy

    poly = sympy.Matrix([[int(x) for x in row] for row in M]).charpoly()
    cs = [int(c) for c in poly.all_coeffs()]  # high-to-low, monic
    return tuple(reversed(cs))


def _irreducible_factors(p: tuple[int, ...]) -> list[tuple[int, ...]]:
    import sympy

    x = sympy.symbols("x")
    expr = sum(c * x**i for i, c in enumerate(p))
    _, factors = sympy.factor_list(sympy.Poly(expr, x, domain="ZZ"))
    out = []
    for fac, mult in factors:
        cs = [int(c) for c in fac.all_coeffs()]
        if cs[0] < 0:
            cs = [-c for c in cs]
        out.extend([tuple(reversed(cs))] * mult)
    return out


def _largest_root_interval(p: tuple[int, ...]) -> tuple[Fraction, Fraction] | None:
    """Isolating interval for the largest real root of p, or None if no real root."""
    pf = tuple(Fraction(c) for c in p)
    bound = Fraction(1) + max(abs(Fraction(c, p[-1])) for c in p[:-1]) if len(p) > 1 else Fraction(1)
    lo, hi = -bound, bound
    if sturm_count(pf, lo, hi) == 0:
        return None
    # push lo up until exactly one root remains in (lo, hi]
    while sturm_count(pf, lo, hi) > 1:
        mid = (lo + hi) / 2
        if sturm_count(pf, mid, hi) >= 1:
            lo = mid
        else:
            hi = mid
    # make endpoints non-roots so downstream sign logic is clean
    while _poly_eval(pf, lo) == 0 or _poly_eval(pf, hi) == 0:
        if _poly_eval(pf, hi) == 0:
            hi += Fraction(1, 7)  # root stays the largest in (lo, hi]
        if _poly_eval(pf, lo) == 0:
            width = hi - lo
            lo += width / 3
            if sturm_count(pf, lo, hi) != 1:
                lo -= width / 3 + Fraction(1, 10**6)
    return lo, hi


def _refine_root(p: tuple[Fraction, ...], lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    mid = (lo + hi) / 2
    if _poly_eval(p, mid) == 0:
        eps = (hi - lo) / 8
        return mid - eps, mid + eps
    if sturm_count(p, lo, mid) == 1:
        return lo, mid
    return mid, hi


def _root_greater(p1, iv1, p2, iv2) -> bool:
    """Compare distinct real algebraic numbers given isolating data."""
    f1 = tuple(Fraction(c) for c in p1)
    f2 = tuple(Fraction(c) for c in p2)
    (a1, b1), (a2, b2) = iv1, iv2
    while not (a1 > b2 or a2 > b1):
        a1, b1 = _refine_root(f1, a1, b1)
        a2, b2 = _refine_root(f2, a2, b2)
    return a1 > b2


def _interval_eval(
    coeffs: Sequence[Fraction], lo: Fraction, hi: Fraction
) -> tuple[Fraction, Fraction]:
    """Horner evaluation of a polynomial over the interval [lo, hi]."""
    alo = ahi = Fraction(0)
    for c in reversed(tuple(coeffs)):
        prods = (alo * lo, alo * hi, ahi * lo, ahi * hi)
        alo, ahi = min(prods) + c, max(prods) + c
    return alo, ahi


def nf_minpoly(x: NFElement) -> tuple[tuple[Fraction, ...], tuple[Fraction, Fraction]]:
    """Monic minimal polynomial of x over Q plus an isolating interval.

    Computed from the characteristic polynomial of multiplication by x on
    the power basis; its unique irreducible factor is the answer.
    """
    import sympy

    f = x.field
    d = f.degree
    cols = []
    for j in range(d):
        unit = NFElement(f, tuple(Fraction(int(i == j)) for i in range(d)))
        cols.append((x * unit).coeffs)
    M = sympy.Matrix([[sympy.Rational(cols[j][i]) for j in range(d)] for i in range(d)])
    t = sympy.Symbol("_t")
    poly = sympy.Poly(M.charpoly(t).as_expr(), t, domain="QQ")
    fac = sympy.factor_list(poly)[1][0][0]
    cs = [Fraction(int(c.p), int(c.q)) for c in fac.all_coeffs()]
    mono = tuple(reversed([c / cs[0] for c in cs]))  # low-to-high, monic

    if len(mono) == 2:  # x is rational
        q = -mono[0]
        return mono, (q - Fraction(1, 2), q + Fraction(1, 2))
    p = _trim(tuple(x.coeffs))
    g = NumberField(f.minpoly, f.root_interval)
    while True:
        lo, hi = _interval_eval(p, *g.root_interval)
        if (
            lo < hi
            and _poly_eval(mono, lo) != 0
            and _poly_eval(mono, hi) != 0
            and sturm_count(mono, lo, hi) == 1
        ):
            return mono, (lo, hi)
        g = g.refine()


def pf_eigendata(M: Sequence[Sequence[int]]):
    """Field of the dominant eigenvalue plus an exact positive eigenvector.

    The eigenvector is normalized so its first entry is 1; M v = lambda v
    holds coordinatewise in Q(lambda).
    """
    n = len(M)
    if n == 0 or any(len(row) != n for row in M):
        raise ValueError("matrix must be square and nonempty")
    if any(int(x) != x or x < 0 for row in M for x in row):
        raise ValueError("matrix entries must be nonnegative integers")
    if not _is_primitive(M, cap=n * n):
        raise NotPerronFrobenius("no power up to dimension**2 is positive")

    factors = sorted(set(_irreducible_factors(_charpoly(M))))
    best = None
    for fac in factors:
        iv = _largest_root_interval(fac)
        if iv is None:
            continue
        if best is None or _root_greater(fac, iv, best[0], best[1]):
            best = (fac, iv)
    assert best is not None, "a primitive matrix has a real dominant eigenvalue"
    minpoly, interval = best
    field = field_create(list(minpoly), interval)

    lam = nf_gen(field)
    zero, one = nf_const(field, 0), nf_const(field, 1)
    # kernel of (M - lambda I) by Gaussian elimination over Q(lambda)
    A = [
        [nf_const(field, M[i][j]) - (lam if i == j else zero) for j in range(n)]
        for i in range(n)
    ]
    pivots: list[tuple[int, int]] = []
    row = 0
    for col in range(n):
        pr = next((r for r in range(row, n) if not A[r][col].is_zero()), None)
        if pr is None:
            continue
        A[row], A[pr] = A[pr], A[row]
        inv = one / A[row][col]
        A[row] = [inv * x for x in A[row]]
        for r in range(n):
            if r != row and not A[r][col].is_zero():
                c = A[r][col]
                A[r] = [x - c * y for x, y in zip(A[r], A[row])]
        pivots.append((row, col))
        row += 1
    free = [c for c in range(n) if c not in {c0 for _, c0 in pivots}]
    if len(free) != 1:
        raise NotPerronFrobenius("dominant eigenvalue is not simple")
    fc = free[0]
    v = [zero] * n
    v[fc] = one
    for r, c in pivots:
        v[c] = -A[r][fc]
    inv0 = one / v[0]
    v = [inv0 * x for x in v]
    if any(nf_sign(x) != 1 for x in v):
        raise NotPerronFrobenius("eigenvector is not strictly positive")
    return field, v
