"""Vanishing-diffusion limit analysis of the steady problem.

With both gradient length scales switched off, the steady plastic rate
minimizes the integral of an effective dissipation whose density is the
primitive of the friction evaluated along the aging equilibrium.  The
relaxed (convexified) density is affine up to a critical rate, which makes
the limiting profiles piecewise constant: a plateau at the critical rate
inside a band whose width is set by the throughput, and rest outside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .constitutive import AgingLaw, FrictionLaw, mu, theta_f
from .errors import ShapeViolation
from .grid import FLOAT_FMT

__all__ = [
    "EffectiveFriction",
    "PlateauProfile",
    "mu_tilde",
    "find_pi_circ",
    "find_pi_star",
    "R_and_hull",
    "plateau_solution",
    "graham_lower_hull",
    "limit_table_csv",
]


def _simpson(f, a, b, tol=1e-10, depth=48):
    """Adaptive Simpson quadrature on [a, b]."""
    if a == b:
        return 0.0

    def rec(x0, x2, f0, f1, f2, whole, eps, d):
        xm = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x2)
        fl, fr = f(xl), f(xr)
        left = (xm - x0) / 6.0 * (f0 + 4.0 * fl + f1)
        right = (x2 - xm) / 6.0 * (f1 + 4.0 * fr + f2)
        if d <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return rec(x0, xm, f0, fl, f1, left, 0.5 * eps, d - 1) + rec(
            xm, x2, f1, fr, f2, right, 0.5 * eps, d - 1
        )

    fm = f(0.5 * (a + b))
    fa, fb = f(a), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return rec(a, b, fa, fm, fb, whole, tol, depth)


class EffectiveFriction:
    """Friction along the aging equilibrium, with its critical rates.

    ``mu_tilde(rate)`` evaluates mu(rate, equilibrium_age(rate)).  The two
    critical rates, the friction minimizer and the equal-area tangent rate,
    are computed lazily and cached.
    """

    def __init__(self, friction: FrictionLaw | None = None, aging: AgingLaw | None = None):
        self.friction = friction if friction is not None else FrictionLaw()
        self.aging = aging if aging is not None else AgingLaw()
        self._pi_circ = None
        self._pi_star = None

    # -- effective friction -------------------------------------------

    def mu_tilde(self, pi):
        return mu(pi, theta_f(pi, self.aging), self.friction)

    def _check_shape(self, scan_max=50.0, n=2000):
        """Verify decreasing-then-increasing shape on a scan grid."""
        pis = np.linspace(0.0, scan_max, n)
        vals = self.mu_tilde(pis)
        d = np.diff(vals)
        increasing_started = False
        for k in range(len(d)):
            if not increasing_started:
                if d[k] > 1e-14:
                    increasing_started = True
            elif d[k] < -1e-14:
                raise ShapeViolation(
                    "effective friction is not decreasing-then-increasing",
                    interval=(float(pis[k]), float(pis[k + 1])),
                )

    # -- critical rates ------------------------------------------------

    def pi_circ(self, tol=1e-6) -> float:
        """Rate minimizing the effective friction (golden-section search)."""
        if self._pi_circ is not None:
            return self._pi_circ
        self._check_shape()
        a, b = 0.0, 1.0
        # grow the bracket while the friction is still decreasing at b
        while self.mu_tilde(b + 1.0) <= self.mu_tilde(b):
            b *= 2.0
            if b > 1e8:
                raise ShapeViolation("no interior friction minimum found")
        b = b + 1.0
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = self.mu_tilde(c), self.mu_tilde(d)
        while b - a > tol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = self.mu_tilde(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = self.mu_tilde(d)
        circ = 0.5 * (a + b)
        if circ < 10.0 * tol:
            raise ShapeViolation("effective friction is not initially decreasing")
        self._pi_circ = circ
        return self._pi_circ

    def pi_star(self, tol=1e-10) -> float:
        """Equal-area rate: primitive(rate) = rate * friction(rate).

        Unique beyond the friction minimizer because the defect
        g(p) = primitive(p) - p * mu_tilde(p) decreases strictly there.
        """
        if self._pi_star is not None:
            return self._pi_star
        circ = self.pi_circ()

        def g(p):
            return _simpson(self.mu_tilde, 0.0, p, tol=tol) - p * self.mu_tilde(p)

        lo = circ
        hi = 2.0 * max(circ, 1.0)
        glo = g(lo)
        if glo <= 0.0:
            raise ShapeViolation("tangent defect nonpositive at the friction minimum")
        while g(hi) > 0.0:
            hi *= 2.0
            if hi > 1e10:
                raise ShapeViolation("tangent-rate bracket exhausted")
        self._pi_star = float(brentq(g, lo, hi, xtol=1e-12, rtol=1e-15, maxiter=200))
        return self._pi_star

    # -- dissipation density and its convex hull -----------------------

    def R(self, pi) -> float:
        """Primitive of the effective friction from 0 to pi."""
        return _simpson(self.mu_tilde, 0.0, float(pi))

    def R_hull(self, pi) -> float:
        """Convexification: affine up to the tangent rate, R beyond."""
        star = self.pi_star()
        pi = float(pi)
        if pi <= star:
            return self.R(star) * pi / star
        return self.R(pi)


def mu_tilde(pi, friction: FrictionLaw | None = None, aging: AgingLaw | None = None):
    return EffectiveFriction(friction, aging).mu_tilde(pi)


def find_pi_circ(friction: FrictionLaw | None = None, aging: AgingLaw | None = None) -> float:
    return EffectiveFriction(friction, aging).pi_circ()


def find_pi_star(friction: FrictionLaw | None = None, aging: AgingLaw | None = None) -> float:
    return EffectiveFriction(friction, aging).pi_star()


def R_and_hull(pi, friction: FrictionLaw | None = None, aging: AgingLaw | None = None):
    eff = EffectiveFriction(friction, aging)
    return eff.R(pi), eff.R_hull(pi)


@dataclass(frozen=True)
class PlateauProfile:
    """Piecewise-constant limit profile of (age, rate)."""

    h: float
    theta_in: float
    pi_in: float
    theta_out: float
    pi_out: float
    H: float

    def evaluate(self, x):
        """Sample (theta, pi) on positions x."""
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.h
        theta = np.where(inside, self.theta_in, self.theta_out)
        pi = np.where(inside, self.pi_in, self.pi_out)
        return theta, pi


def plateau_solution(
    v_inf: float,
    H: float,
    friction: FrictionLaw | None = None,
    aging: AgingLaw | None = None,
) -> PlateauProfile:
    """Zero-diffusion limit profile for a given throughput.

    Below the critical throughput the band carries the tangent rate and the
    matching equilibrium age on |x| < v_inf / critical rate, with saturated
    rest outside; beyond it the whole section slides uniformly at the mean
    rate.  Both branches integrate the rate to exactly twice the boundary
    velocity.
    """
    eff = EffectiveFriction(friction, aging)
    aging_law = eff.aging
    if v_inf == 0.0:
        return PlateauProfile(
            h=0.0,
            theta_in=aging_law.theta_inf,
            pi_in=0.0,
            theta_out=aging_law.theta_inf,
            pi_out=0.0,
            H=H,
        )
    star = eff.pi_star()
    if abs(v_inf) < star * H:
        rate = np.sign(v_inf) * star
        return PlateauProfile(
            h=abs(v_inf) / star,
            theta_in=float(theta_f(star, aging_law)),
            pi_in=float(rate),
            theta_out=aging_law.theta_inf,
            pi_out=0.0,
            H=H,
        )
    rate = v_inf / H
    th = float(theta_f(rate, aging_law))
    return PlateauProfile(h=H, theta_in=th, pi_in=float(rate), theta_out=th, pi_out=float(rate), H=H)


def graham_lower_hull(xs, ys):
    """Lower convex hull of sampled graph points (monotone-chain scan).

    General fallback for hull construction when the two-branch formula does
    not apply; returns the hull vertex arrays.
    """
    pts = sorted(zip(np.asarray(xs, float), np.asarray(ys, float)))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) < 0.0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = zip(*hull)
    return np.array(hx), np.array(hy)


def limit_table_csv(
    path_or_buf,
    pi_max: float = 5.0,
    n: int = 501,
    friction: FrictionLaw | None = None,
    aging: AgingLaw | None = None,
) -> None:
    """Tabulate pi, mu_tilde, R, Rhull as CSV."""
    eff = EffectiveFriction(friction, aging)
    pis = np.linspace(0.0, pi_max, n)
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write("pi,mu_tilde,R,Rhull\n")
        for p in pis:
            row = (p, float(eff.mu_tilde(p)), eff.R(p), eff.R_hull(p))
            buf.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    finally:
        if buf is not path_or_buf:
            buf.close()
