"""Interval domain over 32-bit machine words.

A Range carries a signedness view: Signed bounds live in [-2^31, 2^31-1],
Unsigned bounds in [0, 2^32-1]; a singleton concretizes to exactly one
machine word.  All operations over-approximate the concrete image; any
result whose exact bounds would leave the representable range of the
operation's view becomes Top (wrap-to-Top), and re-viewing a Range across
signedness that would split the wraparound also yields Top.  Bottom
propagates through every operation.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

_U32 = 0xFFFFFFFF
_SMIN = -(1 << 31)
_SMAX = (1 << 31) - 1


class Kind(enum.Enum):
    BOTTOM = 0
    RANGE = 1
    TOP = 2


class View(enum.Enum):
    SIGNED = "signed"
    UNSIGNED = "unsigned"


class Interval(NamedTuple):
    kind: Kind
    lo: int = 0
    hi: int = 0
    view: View = View.SIGNED

    def is_bottom(self) -> bool:
        return self.kind is Kind.BOTTOM

    def is_top(self) -> bool:
        return self.kind is Kind.TOP

    def is_singleton(self) -> bool:
        return self.kind is Kind.RANGE and self.lo == self.hi

    @property
    def cardinality(self) -> int:
        if self.kind is Kind.BOTTOM:
            return 0
        if self.kind is Kind.TOP:
            return 1 << 32
        return self.hi - self.lo + 1

    def __str__(self) -> str:
        if self.kind is Kind.BOTTOM:
            return "bottom"
        if self.kind is Kind.TOP:
            return "top"
        suffix = "" if self.view is View.SIGNED else "u"
        if self.lo == self.hi:
            return f"[{self.lo}]{suffix}"
        return f"[{self.lo}, {self.hi}]{suffix}"


BOTTOM = Interval(Kind.BOTTOM)
TOP = Interval(Kind.TOP)


def signed(lo: int, hi: int) -> Interval:
    if lo > hi:
        return BOTTOM
    if lo < _SMIN or hi > _SMAX:
        return TOP
    return Interval(Kind.RANGE, lo, hi, View.SIGNED)


def unsigned(lo: int, hi: int) -> Interval:
    if lo > hi:
        return BOTTOM
    if lo < 0 or hi > _U32:
        return TOP
    return Interval(Kind.RANGE, lo, hi, View.UNSIGNED)


def singleton(word: int, view: View = View.SIGNED) -> Interval:
    """Singleton holding the 32-bit pattern ``word`` (given as any int)."""
    word &= _U32
    if view is View.SIGNED:
        v = word - 0x100000000 if word & 0x80000000 else word
        return Interval(Kind.RANGE, v, v, View.SIGNED)
    return Interval(Kind.RANGE, word, word, View.UNSIGNED)


ZERO = singleton(0)


def contains_word(iv: Interval, word: int) -> bool:
    """Membership of a 32-bit pattern in the concretization."""
    word &= _U32
    if iv.kind is Kind.TOP:
        return True
    if iv.kind is Kind.BOTTOM:
        return False
    if iv.view is View.SIGNED:
        v = word - 0x100000000 if word & 0x80000000 else word
    else:
        v = word
    return iv.lo <= v <= iv.hi


def as_view(iv: Interval, view: View) -> Interval:
    """Re-view across signedness; a range split by the wraparound becomes Top."""
    if iv.kind is not Kind.RANGE or iv.view is view:
        return iv
    if view is View.UNSIGNED:
        if iv.lo >= 0:
            return Interval(Kind.RANGE, iv.lo, iv.hi, View.UNSIGNED)
        if iv.hi < 0:
            return Interval(Kind.RANGE, iv.lo + 0x100000000, iv.hi + 0x100000000,
                            View.UNSIGNED)
        return TOP
    if iv.hi <= _SMAX:
        return Interval(Kind.RANGE, iv.lo, iv.hi, View.SIGNED)
    if iv.lo > _SMAX:
        return Interval(Kind.RANGE, iv.lo - 0x100000000, iv.hi - 0x100000000,
                        View.SIGNED)
    return TOP


def _common_view(a: Interval, b: Interval) -> tuple[Interval, Interval] | None:
    """Bring two Ranges to one view, preferring a's; None if impossible."""
    if a.view is b.view:
        return a, b
    b2 = as_view(b, a.view)
    if b2.kind is Kind.RANGE:
        return a, b2
    a2 = as_view(a, b.view)
    if a2.kind is Kind.RANGE:
        return a2, b
    return None


def _bounds_of(iv: Interval, view: View) -> tuple[int, int]:
    """Bounds of ``iv`` seen in ``view``, widening to the full range if needed."""
    full = (_SMIN, _SMAX) if view is View.SIGNED else (0, _U32)
    if iv.kind is Kind.TOP:
        return full
    v = as_view(iv, view)
    if v.kind is Kind.RANGE:
        return v.lo, v.hi
    return full


def _clamp(lo: int, hi: int, view: View) -> Interval:
    vmin, vmax = (_SMIN, _SMAX) if view is View.SIGNED else (0, _U32)
    if lo < vmin or hi > vmax:
        return TOP
    return Interval(Kind.RANGE, lo, hi, view)


def _umax(iv: Interval) -> int:
    """Largest unsigned pattern in the concretization."""
    if iv.kind is Kind.TOP:
        return _U32
    if iv.view is View.UNSIGNED:
        return iv.hi
    if iv.lo >= 0:
        return iv.hi
    if iv.hi < 0:
        return iv.hi + 0x100000000
    return _U32  # spans the wraparound when viewed unsigned


def _umin(iv: Interval) -> int:
    if iv.kind is Kind.TOP:
        return 0
    if iv.view is View.UNSIGNED:
        return iv.lo
    if iv.lo >= 0:
        return iv.lo
    return 0


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------

def iv_join(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM:
        return b
    if b.kind is Kind.BOTTOM:
        return a
    if a.kind is Kind.TOP or b.kind is Kind.TOP:
        return TOP
    pair = _common_view(a, b)
    if pair is None:
        return TOP
    a, b = pair
    return Interval(Kind.RANGE, min(a.lo, b.lo), max(a.hi, b.hi), a.view)


def iv_meet(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    if a.kind is Kind.TOP:
        return b
    if b.kind is Kind.TOP:
        return a
    pair = _common_view(a, b)
    if pair is None:
        # intersection exists but is not representable in either view;
        # either operand over-approximates it soundly
        return a if a.cardinality <= b.cardinality else b
    a, b = pair
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo > hi:
        return BOTTOM
    return Interval(Kind.RANGE, lo, hi, a.view)


def iv_le(a: Interval, b: Interval) -> bool:
    """Concretization inclusion (approximate across views)."""
    if a.kind is Kind.BOTTOM or b.kind is Kind.TOP:
        return True
    if a.kind is Kind.TOP or b.kind is Kind.BOTTOM:
        return False
    pair = _common_view(a, b)
    if pair is None:
        return False
    a, b = pair
    return b.lo <= a.lo and a.hi <= b.hi


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def iv_add(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    if a.kind is Kind.TOP or b.kind is Kind.TOP:
        return TOP
    pair = _common_view(a, b)
    if pair is None:
        return TOP
    a, b = pair
    return _clamp(a.lo + b.lo, a.hi + b.hi, a.view)


def iv_sub(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    if a.kind is Kind.TOP or b.kind is Kind.TOP:
        return TOP
    pair = _common_view(a, b)
    if pair is None:
        return TOP
    a, b = pair
    return _clamp(a.lo - b.hi, a.hi - b.lo, a.view)


def _exact_binop(a: Interval, b: Interval, fn) -> Interval | None:
    """Singleton operands behave concretely; None when ranges are involved."""
    if a.is_singleton() and b.is_singleton():
        wa = a.lo & _U32
        wb = b.lo & _U32
        return singleton(fn(wa, wb) & _U32, View.UNSIGNED
                         if a.view is View.UNSIGNED else View.SIGNED)
    return None


def iv_and(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    exact = _exact_binop(a, b, lambda x, y: x & y)
    if exact is not None:
        return exact
    cap = min(_umax(a), _umax(b))
    if cap >= _U32:
        return TOP
    return Interval(Kind.RANGE, 0, cap, View.UNSIGNED)


def _or_bounds(a: Interval, b: Interval) -> tuple[int, int]:
    lo = max(_umin(a), _umin(b))
    hi = (1 << (_umax(a) | _umax(b)).bit_length()) - 1
    return lo, min(hi, _U32)


def iv_or(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    exact = _exact_binop(a, b, lambda x, y: x | y)
    if exact is not None:
        return exact
    lo, hi = _or_bounds(a, b)
    if lo == 0 and hi >= _U32:
        return TOP
    return Interval(Kind.RANGE, lo, hi, View.UNSIGNED)


def iv_xor(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    exact = _exact_binop(a, b, lambda x, y: x ^ y)
    if exact is not None:
        return exact
    hi = (1 << (_umax(a) | _umax(b)).bit_length()) - 1
    if hi >= _U32:
        return TOP
    return Interval(Kind.RANGE, 0, hi, View.UNSIGNED)


def iv_nor(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    exact = _exact_binop(a, b, lambda x, y: ~(x | y))
    if exact is not None:
        return exact
    lo, hi = _or_bounds(a, b)
    # complement flips and swaps the bounds
    return unsigned(_U32 - hi, _U32 - lo) if hi <= _U32 else TOP


def iv_slt(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    alo, ahi = _bounds_of(a, View.SIGNED)
    blo, bhi = _bounds_of(b, View.SIGNED)
    if ahi < blo:
        return singleton(1)
    if alo >= bhi:
        return singleton(0)
    return signed(0, 1)


def iv_sltu(a: Interval, b: Interval) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    alo, ahi = _bounds_of(a, View.UNSIGNED)
    blo, bhi = _bounds_of(b, View.UNSIGNED)
    if ahi < blo:
        return singleton(1)
    if alo >= bhi:
        return singleton(0)
    return signed(0, 1)


def iv_shift(value: Interval, amount: Interval, op: str) -> Interval:
    """sll/srl/sra with interval shift amounts (amounts are taken mod 32)."""
    if value.kind is Kind.BOTTOM or amount.kind is Kind.BOTTOM:
        return BOTTOM
    if amount.kind is Kind.TOP:
        amin, amax = 0, 31
    else:
        alo, ahi = amount.lo, amount.hi
        if ahi - alo >= 31 or (alo & ~31) != (ahi & ~31):
            amin, amax = 0, 31
        else:
            amin, amax = alo & 31, ahi & 31
    if value.is_singleton() and amin == amax:
        # singleton shifts behave concretely (truncating like the hardware)
        w = value.lo & _U32
        if op == "sll":
            return singleton((w << amin) & _U32)
        if op == "srl":
            return singleton(w >> amin)
        if op == "sra":
            v = w - 0x100000000 if w & 0x80000000 else w
            return singleton((v >> amin) & _U32)
    if op == "sra":
        vlo, vhi = _bounds_of(value, View.SIGNED)
        lo = min(vlo >> amin, vlo >> amax)
        hi = max(vhi >> amin, vhi >> amax)
        return signed(lo, hi)
    if op == "srl":
        vlo, vhi = _bounds_of(value, View.UNSIGNED)
        return unsigned(vlo >> amax, vhi >> amin)
    if op == "sll":
        if value.kind is Kind.TOP:
            return TOP
        v = as_view(value, View.UNSIGNED)
        if v.kind is not Kind.RANGE:
            return TOP
        hi = v.hi << amax
        if hi > _U32:
            return TOP
        return unsigned(v.lo << amin, hi)
    raise ValueError(f"unknown shift op {op!r}")


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def iv_mult(a: Interval, b: Interval, unsigned_op: bool = False) -> Interval:
    """Full product interval (the 64-bit value before the hi/lo split)."""
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    view = View.UNSIGNED if unsigned_op else View.SIGNED
    alo, ahi = _bounds_of(a, view)
    blo, bhi = _bounds_of(b, view)
    corners = [alo * blo, alo * bhi, ahi * blo, ahi * bhi]
    lo, hi = min(corners), max(corners)
    return _clamp(lo, hi, view)


def mult_product_bounds(a: Interval, b: Interval,
                        unsigned_op: bool) -> tuple[int, int]:
    view = View.UNSIGNED if unsigned_op else View.SIGNED
    alo, ahi = _bounds_of(a, view)
    blo, bhi = _bounds_of(b, view)
    corners = [alo * blo, alo * bhi, ahi * blo, ahi * bhi]
    return min(corners), max(corners)


def iv_div(a: Interval, b: Interval, unsigned_op: bool = False) -> Interval:
    """Truncating quotient; Top when the divisor may be zero."""
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    view = View.UNSIGNED if unsigned_op else View.SIGNED
    alo, ahi = _bounds_of(a, view)
    blo, bhi = _bounds_of(b, view)
    if blo <= 0 <= bhi:
        return TOP
    if not unsigned_op and alo <= _SMIN and blo <= -1 <= bhi:
        return TOP  # INT_MIN / -1 wraps
    corners = [_trunc_div(alo, blo), _trunc_div(alo, bhi),
               _trunc_div(ahi, blo), _trunc_div(ahi, bhi)]
    return _clamp(min(corners), max(corners), view)


def div_remainder(a: Interval, b: Interval, unsigned_op: bool = False) -> Interval:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM
    view = View.UNSIGNED if unsigned_op else View.SIGNED
    alo, ahi = _bounds_of(a, view)
    blo, bhi = _bounds_of(b, view)
    if blo <= 0 <= bhi:
        return TOP
    if alo == ahi and blo == bhi:
        return singleton((alo - _trunc_div(alo, blo) * blo) & _U32, view)
    m = max(abs(blo), abs(bhi)) - 1
    if unsigned_op:
        return unsigned(0, min(m, ahi))
    if alo >= 0:
        return signed(0, m)
    if ahi <= 0:
        return signed(-m, 0)
    return signed(-m, m)


# ---------------------------------------------------------------------------
# branch refinement
# ---------------------------------------------------------------------------

def _drop_endpoint(iv: Interval, value: int) -> Interval:
    """Remove ``value`` from iv when it sits on an endpoint (best effort)."""
    if iv.kind is not Kind.RANGE:
        return iv
    if iv.lo == iv.hi == value:
        return BOTTOM
    if iv.lo == value:
        return Interval(Kind.RANGE, iv.lo + 1, iv.hi, iv.view)
    if iv.hi == value:
        return Interval(Kind.RANGE, iv.lo, iv.hi - 1, iv.view)
    return iv


def refine_branch(cond: str, sa: Interval,
                  sb: Interval | None = None):
    """Refine branch operand intervals under the condition and its negation.

    Returns (taken, not_taken); each side is an (sa', sb') pair or None when
    that outcome is infeasible.  For single-operand branches sb' mirrors the
    untouched second operand (always the zero register's singleton).
    """
    if sb is None:
        sb = ZERO
    if cond == "beq":
        eq = iv_meet(sa, sb)
        taken = None if eq.is_bottom() else (eq, eq)
        na, nb = sa, sb
        if sb.is_singleton() and sa.kind is Kind.RANGE:
            na = _drop_endpoint(sa, as_view(sb, sa.view).lo)
        if sa.is_singleton() and sb.kind is Kind.RANGE:
            nb = _drop_endpoint(sb, as_view(sa, sb.view).lo)
        not_taken = None if na.is_bottom() or nb.is_bottom() else (na, nb)
        return taken, not_taken
    if cond == "bne":
        taken, not_taken = refine_branch("beq", sa, sb)
        return not_taken, taken
    full_pos = signed(0, _SMAX)
    full_neg = signed(_SMIN, -1)
    pos = signed(1, _SMAX)
    nonpos = signed(_SMIN, 0)
    if cond == "blez":
        t, n = iv_meet(sa, nonpos), iv_meet(sa, pos)
    elif cond == "bgtz":
        t, n = iv_meet(sa, pos), iv_meet(sa, nonpos)
    elif cond == "bltz":
        t, n = iv_meet(sa, full_neg), iv_meet(sa, full_pos)
    elif cond == "bgez":
        t, n = iv_meet(sa, full_pos), iv_meet(sa, full_neg)
    else:
        raise ValueError(f"not a conditional branch: {cond!r}")
    taken = None if t.is_bottom() else (t, sb)
    not_taken = None if n.is_bottom() else (n, sb)
    return taken, not_taken
