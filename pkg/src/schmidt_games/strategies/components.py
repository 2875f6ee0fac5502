"""Preimage components of a ball hole seen from a small ball, at any depth.

For a ball B(x, rho) and a hole B(y, c) the tracker lists the connected
components of f^{-k}(B(y, c)) that meet B(x, rho).  Instead of walking the
branch tree from the root (which needs m^k leaves) it follows the forward
orbit of x and inverts f^k only locally, which is exact and cheap as long as
f^k(B(x, rho)) stays short.  Works in mpfr for arbitrarily deep k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .. import _numeric as nm
from ..dynamics import (CircleOrbit, InvalidSystem, SystemSpec, apply, expansion_bounds,
                        log_derivative_lipschitz)
from ..geometry import MetricBall, normalize, torus_distance


class EnumerationTooWide(RuntimeError):
    """f^k of the window became too long for local inversion."""


@dataclass(frozen=True)
class HoleComponent:
    k: int
    center: tuple         # point of the component mapped onto y
    midpoint: tuple       # center of the smallest enclosing ball
    diameter: object
    offsets: tuple | None = None   # (lo, hi) offsets from the window center (circle)

    def removal_ball(self) -> MetricBall:
        """Ball of radius diam around the component (covers it with room to spare)."""
        return MetricBall(self.midpoint, self.diameter)

    def enclosure(self) -> MetricBall:
        return MetricBall(self.midpoint, self.diameter / 2)


class BallPreimageTracker:
    """Components of f^{-k}(B(y, c)) meeting B(x, rho), for circle and conformal torus maps."""

    def __init__(self, sys: SystemSpec, x, rho, y, c, max_image: float = 0.25):
        if not sys.is_expanding:
            raise InvalidSystem("ball holes are tracked for expanding maps")
        self.sys = sys
        self.x = normalize(x)
        self.rho = rho
        self.y = normalize(y)
        self.c = c
        self.max_image = max_image
        eb = expansion_bounds(sys)
        self.sigma1, self.sigma2 = eb.sigma1, eb.sigma2
        if sys.kind == "circle_expanding":
            self.orbit = CircleOrbit(sys, self.x[0])
            self._lip = log_derivative_lipschitz(sys) if sys.delta else 0.0
            self._img = [(-rho, rho, 1 + 0 * rho)]   # (F^k offsets of -rho and rho, (f^k)'(x))
        else:
            a, b = sys.multiplier
            self._D = a * a + b * b
            self._pts = [self.x]

    # -- circle -------------------------------------------------------------
    def window_image(self, k: int) -> tuple:
        """(s_lo, s_hi, derivative) at depth k, advanced one step at a time."""
        sys = self.sys
        m, d = sys.m, sys.delta
        while len(self._img) <= k:
            i = len(self._img) - 1
            lo, hi, der = self._img[i]
            b = self.orbit.point(i)
            if d:
                pi = nm.pi_like(lo)
                lo = m * lo + 2 * d * nm.cospi(2 * b + lo) * nm.sinpi(lo)
                hi = m * hi + 2 * d * nm.cospi(2 * b + hi) * nm.sinpi(hi)
                der = der * (m + 2 * pi * d * nm.cos2pi(b))
            else:
                lo, hi, der = m * lo, m * hi, der * m
            self._img.append((lo, hi, der))
        return self._img[k]

    def _circle(self, k: int) -> list:
        orb = self.orbit
        b = orb.point(k)
        s_lo, s_hi, scale = self.window_image(k)
        if s_hi - s_lo > self.max_image:
            raise EnumerationTooWide(f"f^{k} of the window has length {float(s_hi - s_lo):.3g}")
        c, y = self.c, self.y[0]
        base = y - b
        n0 = int(nm.floor(s_lo - c - base))
        n1 = int(nm.floor(s_hi + c - base)) + 1
        out = []
        for n in range(n0, n1 + 1):
            t = base + n
            if t + c < s_lo or t - c > s_hi:
                continue
            o_lo = orb.solve_offset(t - c, k, (t - c) / scale)
            o_hi = orb.solve_offset(t + c, k, (t + c) / scale)
            if o_hi < -self.rho or o_lo > self.rho:
                continue
            o_c = orb.solve_offset(t, k, t / scale)
            x0 = self.x[0]
            out.append(HoleComponent(k, normalize((x0 + o_c,)), normalize((x0 + (o_lo + o_hi) / 2,)),
                                     o_hi - o_lo, (o_lo, o_hi)))
        return out

    # -- conformal torus ----------------------------------------------------
    def _point(self, k):
        while len(self._pts) <= k:
            self._pts.append(apply(self.sys, self._pts[-1]))
        return self._pts[k]

    def _conformal(self, k: int) -> list:
        a, b = self.sys.multiplier
        root = nm.sqrt(nm.mp(self._D)) if nm.is_mp(self.c) else math.sqrt(self._D)
        mu_k = root ** k
        R = self.rho * mu_k
        if R > self.max_image:
            raise EnumerationTooWide(f"f^{k} of the window has radius {float(R):.3g}")
        # M^k = (a + bi)^k as a Gaussian integer p + qi
        p, q = 1, 0
        for _ in range(k):
            p, q = p * a - q * b, p * b + q * a
        Dk = self._D ** k
        fx = self._point(k)
        d0 = (nm.wrap(self.y[0] - fx[0]), nm.wrap(self.y[1] - fx[1]))
        reach = R + self.c
        out = []
        span = int(math.ceil(float(reach))) + 1
        for n1 in range(-span, span + 1):
            for n2 in range(-span, span + 1):
                w = (d0[0] + n1, d0[1] + n2)
                if nm.sqrt(w[0] * w[0] + w[1] * w[1]) > reach:
                    continue
                # (p + qi)^{-1} w = (p - qi) w / (p^2 + q^2)
                v = ((p * w[0] + q * w[1]) / Dk, (-q * w[0] + p * w[1]) / Dk)
                ctr = normalize((self.x[0] + v[0], self.x[1] + v[1]))
                diam = 2 * self.c / mu_k
                out.append(HoleComponent(k, ctr, ctr, diam))
        return out

    def at(self, k: int) -> list:
        """All components at depth k meeting the window B(x, rho)."""
        if self.sys.kind == "circle_expanding":
            return self._circle(k)
        comps = self._conformal(k)
        out = []
        for comp in comps:
            if torus_distance(comp.center, self.x) <= self.rho + comp.diameter / 2:
                out.append(comp)
        return out

    def diameter_bounds(self, k: int) -> tuple:
        """Bracket of diameters at depth k of components meeting the window.

        For nonlinear circle maps the bracket is 2c / (f^k)'(x) times
        exp(+-l L / (1 - 1/sigma1)), with l the log-derivative Lipschitz constant
        and L the length of f^k(window) plus the hole: the derivative along a
        component differs from the one at x by at most that distortion factor.
        Falls back to the expansion bounds once f^k(window) is long.
        """
        lo, hi = 2 * self.c / self.sigma2 ** k, 2 * self.c / self.sigma1 ** k
        if self.sys.kind != "circle_expanding" or not self.sys.delta:
            return lo, hi
        s_lo, s_hi, dk = self.window_image(k)
        length = s_hi - s_lo + 2 * self.c
        if length > self.max_image:
            return lo, hi
        spread = nm.exp_like(self._lip * length / (1 - 1 / self.sigma1))
        return max(lo, 2 * self.c / dk / spread), min(hi, 2 * self.c / dk * spread)
