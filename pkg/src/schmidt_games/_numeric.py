"""Scalar helpers shared by the float and multiprecision code paths.

Game engines work with gmpy2 ``mpfr`` numbers because deep games shrink
radii far below double precision.  Analysis code (tilings, distortion,
dimension) uses plain floats and numpy.  The helpers here dispatch on the
scalar type so the same formulas serve both worlds.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import gmpy2
from gmpy2 import mpfr

MPFR = type(mpfr(0))


def is_mp(x) -> bool:
    return isinstance(x, MPFR)


def mp(x):
    """Convert to mpfr at the current context precision."""
    if isinstance(x, str):
        return mpfr(x)
    return mpfr(x)


def floor(x):
    if isinstance(x, MPFR):
        return gmpy2.floor(x)
    return math.floor(x)


def frac(x):
    """Fractional part in [0, 1)."""
    if isinstance(x, MPFR):
        y = x - gmpy2.floor(x)
        return y if y < 1 else y - 1
    y = x - math.floor(x)
    return y if y < 1.0 else 0.0


def wrap(x):
    """Signed representative of x mod 1 in [-1/2, 1/2)."""
    y = frac(x)
    return y - 1 if y >= 0.5 else y


def pi_like(x):
    return gmpy2.const_pi() if isinstance(x, MPFR) else math.pi


def sin2pi(x):
    if isinstance(x, MPFR):
        return gmpy2.sin(2 * gmpy2.const_pi() * x)
    return math.sin(2.0 * math.pi * x)


def cos2pi(x):
    if isinstance(x, MPFR):
        return gmpy2.cos(2 * gmpy2.const_pi() * x)
    return math.cos(2.0 * math.pi * x)


def sin_cos2pi(x):
    """(sin 2 pi x, cos 2 pi x) in one evaluation."""
    if isinstance(x, MPFR):
        return gmpy2.sin_cos(2 * gmpy2.const_pi() * x)
    t = 2.0 * math.pi * x
    return math.sin(t), math.cos(t)


def sinpi(x):
    if isinstance(x, MPFR):
        return gmpy2.sin(gmpy2.const_pi() * x)
    return math.sin(math.pi * x)


def cospi(x):
    if isinstance(x, MPFR):
        return gmpy2.cos(gmpy2.const_pi() * x)
    return math.cos(math.pi * x)


def sqrt(x):
    if isinstance(x, MPFR):
        return gmpy2.sqrt(x)
    return math.sqrt(x)


def log(x):
    if isinstance(x, MPFR):
        return gmpy2.log(x)
    return math.log(x)


def exp_like(x):
    if isinstance(x, MPFR):
        return gmpy2.exp(x)
    return math.exp(x)


def any_mp(*xs) -> bool:
    for x in xs:
        if isinstance(x, (tuple, list)):
            if any_mp(*x):
                return True
        elif isinstance(x, MPFR):
            return True
    return False


def precision_bits() -> int:
    return gmpy2.get_context().precision


@contextmanager
def precision(bits: int):
    """Run a block with the mpfr working precision set to ``bits``."""
    with gmpy2.context(gmpy2.get_context(), precision=int(bits)):
        yield


def log2_abs(x) -> float:
    """log2 |x| as a float, valid far outside the double exponent range."""
    if x == 0:
        return -math.inf
    if isinstance(x, MPFR):
        m, e = gmpy2.frexp(abs(x))
        return math.log2(float(m)) + e
    if isinstance(x, int):
        return math.log2(abs(x)) if abs(x) < 2**1000 else abs(x).bit_length()
    return math.log2(abs(x))


def encode(x):
    """JSON-safe encoding: floats and ints pass through, mpfr becomes a string."""
    if isinstance(x, MPFR):
        if not gmpy2.is_finite(x):
            return str(x)
        if x == 0:
            return "0"
        mant, exp, _ = x.digits(10)
        sign = "-" if mant.startswith("-") else ""
        return f"{sign}0.{mant.lstrip('-')}e{exp}"
    if isinstance(x, (tuple, list)):
        return [encode(v) for v in x]
    return x


def decode(v):
    """Inverse of :func:`encode`; strings come back as mpfr at current precision."""
    if isinstance(v, str):
        return mpfr(v)
    if isinstance(v, list):
        return tuple(decode(u) for u in v)
    return v
