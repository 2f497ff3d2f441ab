"""Indefinite integral binary quadratic forms: Gauss reduction and automorphs.

Hyperbolic SL(2,Z) conjugacy classes with trace t correspond exactly to the
proper equivalence classes of integral forms of discriminant t^2 - 4
(including imprimitive ones) through the fixed-point form of a matrix, so
class identity, counting and primitivity all reduce to classical, fully
integer-exact form arithmetic: reduction cycles and Pell automorphs.
"""

from __future__ import annotations

import math
from functools import lru_cache

from .errors import NumericError, ParameterError

Form = tuple  # (a, b, c) integers


def discriminant(f: Form) -> int:
    a, b, c = f
    return b * b - 4 * a * c


def content(f: Form) -> int:
    a, b, c = f
    return math.gcd(math.gcd(abs(a), abs(b)), abs(c))


def is_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def is_reduced(f: Form) -> bool:
    """Classical reduction window: sqrt(D) - b < 2|a| < sqrt(D) + b, 0 < b < sqrt(D).

    All comparisons are exact (D is never a square here).
    """
    a, b, c = f
    D = discriminant(f)
    if D <= 0 or is_square(D):
        raise ParameterError(f"form must have positive non-square discriminant, got {D}")
    if b <= 0 or b * b >= D:
        return False
    t = 2 * abs(a)
    if (t + b) * (t + b) <= D:  # need sqrt(D) < 2|a| + b
        return False
    if t - b >= 0 and (t - b) * (t - b) >= D:  # need 2|a| - b < sqrt(D)
        return False
    return True


def rho_step(f: Form) -> Form:
    """One Gauss reduction step (a,b,c) -> (c, r, (r^2 - D)/(4c))."""
    a, b, c = f
    D = discriminant(f)
    if c == 0:
        raise ParameterError("degenerate form (square discriminant)")
    ac = abs(c)
    s = math.isqrt(D)
    r = (-b) % (2 * ac)
    if ac > s:
        if r > ac:
            r -= 2 * ac
    else:
        # unique representative in (sqrt(D) - 2|c|, sqrt(D))
        r = r + 2 * ac * ((s - r) // (2 * ac))
    return (c, r, (r * r - D) // (4 * c))


def reduce_form(f: Form, max_steps: int = 10000) -> Form:
    g = tuple(int(x) for x in f)
    for _ in range(max_steps):
        if is_reduced(g):
            return g
        g = rho_step(g)
    raise NumericError(f"reduction did not terminate for {f}")


def cycle(f: Form) -> tuple:
    """The reduction cycle through a form, as the tuple starting at reduce(f)."""
    start = reduce_form(f)
    out = [start]
    g = rho_step(start)
    while g != start:
        out.append(g)
        g = rho_step(g)
        if len(out) > 100000:
            raise NumericError(f"cycle of {f} did not close")
    return tuple(out)


def class_id(f: Form) -> tuple:
    """Canonical id of the proper class: lexicographically minimal rotation
    of the reduction cycle (traversal orientation is the rho direction)."""
    cyc = cycle(f)
    rotations = [cyc[i:] + cyc[:i] for i in range(len(cyc))]
    return min(rotations)


def reduced_forms(D: int) -> list:
    """All reduced forms of a positive non-square discriminant."""
    if D <= 0 or is_square(D):
        raise ParameterError(f"need a positive non-square discriminant, got {D}")
    out = []
    for b in range(1, math.isqrt(D) + 1):
        if (D - b * b) % 4 != 0:
            continue
        m = (D - b * b) // 4  # = -a c > 0
        if m <= 0:
            continue
        for a in _divisors(m):
            for sa in (a, -a):
                c = (b * b - D) // (4 * sa)
                f = (sa, b, c)
                if is_reduced(f):
                    out.append(f)
    return sorted(out)


def _divisors(n: int) -> list:
    out = []
    for k in range(1, math.isqrt(n) + 1):
        if n % k == 0:
            out.append(k)
            if k != n // k:
                out.append(n // k)
    return sorted(out)


@lru_cache(maxsize=None)
def form_classes(D: int) -> tuple:
    """Canonical ids of all proper classes of discriminant D."""
    remaining = set(reduced_forms(D))
    ids = []
    while remaining:
        f = min(remaining)
        cyc = cycle(f)
        remaining -= set(cyc)
        ids.append(min(cyc[i:] + cyc[:i] for i in range(len(cyc))))
    return tuple(sorted(ids))


# ------------------------------------------------------- matrices and forms


def form_of_matrix(m) -> Form:
    """Fixed-point form (c, d-a, -b) of an integer matrix [[a,b],[c,d]]."""
    (a, b), (c, d) = m
    return (int(c), int(d) - int(a), -int(b))


def matrix_of_form(f: Form, trace: int):
    """The unique integer matrix with the given trace and fixed-point form."""
    A, B, C = f
    if (trace - B) % 2 != 0:
        raise ParameterError(f"trace {trace} and form {f} have mismatched parity")
    return ((trace - B) // 2, -C), (A, (trace + B) // 2)


def pell4_fundamental(D: int, v_cap: int = 10**7):
    """Minimal (u, v), u, v >= 1, with u^2 - D v^2 = 4."""
    if D <= 0 or is_square(D):
        raise ParameterError(f"need a positive non-square discriminant, got {D}")
    for v in range(1, v_cap + 1):
        uu = 4 + D * v * v
        if is_square(uu):
            return math.isqrt(uu), v
    raise NumericError(f"no Pell +4 solution found for D={D} below v={v_cap}")


def automorph(f: Form):
    """Fundamental automorph matrix of a primitive indefinite form."""
    A, B, C = f
    if content(f) != 1:
        raise ParameterError("automorph is defined for primitive forms")
    u, v = pell4_fundamental(discriminant(f))
    return ((u - B * v) // 2, -C * v), (A * v, (u + B * v) // 2)


def primitive_split(trace: int, f: Form):
    """Power decomposition of a positive-trace hyperbolic class.

    A matrix with trace t >= 3 and fixed form f is an exact power of the
    fundamental automorph of the primitive part of f.  Returns
    (k, trace of the primitive root, (u1, v1), D'), where the class is the
    k-th power of the root class.
    """
    if trace < 3:
        raise ParameterError(f"need a hyperbolic positive trace, got {trace}")
    D = trace * trace - 4
    if discriminant(f) != D:
        raise ParameterError("form discriminant does not match the trace")
    m0 = content(f)
    if (D % (m0 * m0)) != 0:
        raise NumericError(f"content {m0} does not square-divide {D}")
    Dp = D // (m0 * m0)
    u1, v1 = pell4_fundamental(Dp, v_cap=max(10 * m0 + 10, 1000))
    u, v = u1, v1
    for k in range(1, 10000):
        if (u, v) == (trace, m0):
            return k, u1, (u1, v1), Dp
        u, v = (u1 * u + Dp * v1 * v) // 2, (u1 * v + v1 * u) // 2
    raise NumericError(f"power decomposition did not close for trace {trace}, form {f}")
