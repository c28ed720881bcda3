"""Constitutive relations for the bulk rate-and-state friction model.

Everything here is a pure evaluation: the regularized friction (yield
stress) law, the aging law with its healing/weakening split, the plastic
dissipation potential and its inverse flow rule, and the damage-modulated
elastic stiffness. All functions accept scalars or numpy arrays and never
raise on numeric input; negative ages are clamped to zero (exact solutions
never produce them, transient solvers may undershoot by rounding) and the
clamp events are counted for diagnostics.

The yield stress splits additively into a base value, a rate-hardening
term and a state (aging) term,

    mu(rate, age) = mu0 + A(rate) + B(age),

with the regularized logarithmic forms

    A(rate) = a * ln(h_ref * |rate| + 1),
    B(age)  = b * ln(c_state * age + 1),

so that mu >= mu0 > 0 always and the dissipation stays nonnegative.
Custom monotone laws can be supplied as callables; the closed forms below
then switch to safeguarded iteration / quadrature automatically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "FrictionLaw",
    "AgingLaw",
    "StiffnessLaw",
    "ModelParams",
    "default_params",
    "mu",
    "dissipation_R",
    "plastic_rate_Pi",
    "aging_rhs",
    "theta_f",
    "stiffness",
    "negative_age_clamps",
    "reset_negative_age_clamps",
]

# Diagnostic counter: number of calls that received a negative age and
# clamped it to zero.  Purely informational, never trips an error.
_NEG_AGE_CLAMPS = 0


def negative_age_clamps() -> int:
    return _NEG_AGE_CLAMPS


def reset_negative_age_clamps() -> None:
    global _NEG_AGE_CLAMPS
    _NEG_AGE_CLAMPS = 0


def _clamp_age(theta):
    """Clamp negative ages to 0 and count the event."""
    global _NEG_AGE_CLAMPS
    if np.ndim(theta) == 0:
        if theta < 0.0:
            _NEG_AGE_CLAMPS += 1
            return 0.0
        return theta
    theta = np.asarray(theta, dtype=float)
    neg = theta < 0.0
    if np.any(neg):
        _NEG_AGE_CLAMPS += int(np.count_nonzero(neg))
        theta = np.where(neg, 0.0, theta)
    return theta


@dataclass(frozen=True)
class FrictionLaw:
    """Regularized rate-and-state yield stress mu0 + A(rate) + B(age).

    Parameters
    ----------
    mu0 : float
        Base yield stress (N).  Must be positive.
    a : float
        Rate-hardening coefficient (N).
    b : float
        State-hardening coefficient (N).
    h_ref : float
        Factor multiplying |rate| inside the rate logarithm (s).  Plays the
        role of a characteristic slip width over a reference velocity.
    c_state : float
        Factor multiplying the age inside the state logarithm (1/s).
    rate_fn, state_fn : callable, optional
        Custom A and B.  ``rate_fn`` must be even with rate_fn(0) = 0 and
        strictly increasing on [0, inf); ``state_fn`` nonnegative,
        nondecreasing, state_fn(0) = 0.  When given, inversion and
        integration fall back to safeguarded numerics.
    """

    mu0: float = 1.0
    a: float = 1.0
    b: float = 1.0
    h_ref: float = 1.0
    c_state: float = 4.0
    rate_fn: Optional[Callable] = None
    state_fn: Optional[Callable] = None

    def __post_init__(self):
        if not (self.mu0 > 0 and self.a >= 0 and self.b >= 0):
            raise ValueError("need mu0 > 0, a >= 0, b >= 0")
        if not (self.h_ref > 0 and self.c_state > 0):
            raise ValueError("need h_ref > 0 and c_state > 0")

    @property
    def is_log_law(self) -> bool:
        return self.rate_fn is None and self.state_fn is None

    # -- rate term A --------------------------------------------------

    def rate_term(self, rate):
        if self.rate_fn is not None:
            return self.rate_fn(rate)
        return self.a * np.log1p(self.h_ref * np.abs(rate))

    def rate_term_prime(self, rate):
        """dA/d|rate|, evaluated at |rate| (one-sided at 0)."""
        if self.rate_fn is not None:
            r = np.abs(rate)
            h = 1e-7 * (1.0 + r)
            return (self.rate_fn(r + h) - self.rate_fn(np.maximum(r - h, 0.0))) / (
                h + np.minimum(r, h)
            )
        return self.a * self.h_ref / (self.h_ref * np.abs(rate) + 1.0)

    def rate_term_integral(self, rate):
        """integral of A(s) ds from 0 to |rate|."""
        p = np.abs(rate)
        if self.rate_fn is None:
            # closed form for the log law
            h = self.h_ref
            return self.a * ((p + 1.0 / h) * np.log1p(h * p) - p)
        return _simpson_adaptive(self.rate_fn, p)

    def invert_rate_term(self, y):
        """Solve A(p) = y for p >= 0 (scalar or array y >= 0)."""
        if self.rate_fn is None:
            return np.expm1(np.asarray(y, dtype=float) / self.a) / self.h_ref
        return _invert_increasing(self.rate_fn, y, hi_guess=self._invert_hi(y))

    def _invert_hi(self, y):
        # generous bracket for custom A; A strictly increasing guarantees a root
        return 10.0 * (np.exp(np.max(np.atleast_1d(y)) / max(self.a, 1e-12)) + 1.0)

    # -- state term B -------------------------------------------------

    def state_term(self, age):
        age = _clamp_age(age)
        if self.state_fn is not None:
            return self.state_fn(age)
        return self.b * np.log1p(self.c_state * age)

    def state_term_prime(self, age):
        age = _clamp_age(age)
        if self.state_fn is not None:
            h = 1e-7 * (1.0 + np.abs(age))
            return (self.state_fn(age + h) - self.state_fn(age)) / h
        return self.b * self.c_state / (self.c_state * age + 1.0)


@dataclass(frozen=True)
class AgingLaw:
    """Aging flow rule d(age)/dt = healing(age) - |rate| * weakening(age).

    The default healing term is affine, 1 - age/theta_inf, vanishing at the
    saturation age theta_inf; the default weakening coefficient is linear,
    c1 * age.  Both can be overridden by callables subject to: healing
    continuous, nonnegative, strictly decreasing with healing(theta_inf)=0;
    weakening continuous, nonnegative, strictly increasing, weakening(0)=0.
    """

    theta_inf: float = 10.0
    c1: float = 10.0
    healing_fn: Optional[Callable] = None
    weakening_fn: Optional[Callable] = None

    def __post_init__(self):
        if not self.theta_inf > 0:
            raise ValueError("theta_inf must be positive")
        if self.healing_fn is None and not self.c1 > 0:
            raise ValueError("c1 must be positive")

    @property
    def is_default_form(self) -> bool:
        return self.healing_fn is None and self.weakening_fn is None

    def healing(self, age):
        age = _clamp_age(age)
        if self.healing_fn is not None:
            return self.healing_fn(age)
        return 1.0 - np.asarray(age, dtype=float) / self.theta_inf

    def healing_prime(self, age):
        age = _clamp_age(age)
        if self.healing_fn is not None:
            h = 1e-7 * (1.0 + np.abs(age))
            return (self.healing_fn(age + h) - self.healing_fn(age)) / h
        return -1.0 / self.theta_inf * np.ones_like(np.asarray(age, dtype=float))

    def weakening(self, age):
        age = _clamp_age(age)
        if self.weakening_fn is not None:
            return self.weakening_fn(age)
        return self.c1 * np.asarray(age, dtype=float)

    def weakening_prime(self, age):
        age = _clamp_age(age)
        if self.weakening_fn is not None:
            h = 1e-7 * (1.0 + np.abs(age))
            return (self.weakening_fn(age + h) - self.weakening_fn(age)) / h
        return self.c1 * np.ones_like(np.asarray(age, dtype=float))

    def healing_primitive(self, age):
        """Antiderivative of healing from 0 to age."""
        age = _clamp_age(age)
        if self.healing_fn is not None:
            return _simpson_adaptive(self.healing_fn, age)
        age = np.asarray(age, dtype=float)
        return age - age**2 / (2.0 * self.theta_inf)

    def weakening_primitive(self, age):
        """Antiderivative of weakening from 0 to age."""
        age = _clamp_age(age)
        if self.weakening_fn is not None:
            return _simpson_adaptive(self.weakening_fn, age)
        return 0.5 * self.c1 * np.asarray(age, dtype=float) ** 2


@dataclass(frozen=True)
class StiffnessLaw:
    """Elastic modulus, constant or quadratically damage-modulated.

    In the damage-modulated mode C(alpha) = (ell_ratio^2 + alpha^2) * C0
    with ell_ratio an auxiliary length ratio; the derivative is then
    2 * alpha * C0.  ``mode`` is either ``"constant"`` or
    ``"damage-modulated"``.
    """

    mode: str = "constant"
    C0: float = 1.0
    ell_ratio: float = 1.0

    def __post_init__(self):
        if self.mode not in ("constant", "damage-modulated"):
            raise ValueError(f"unknown stiffness mode {self.mode!r}")
        if not self.C0 > 0:
            raise ValueError("C0 must be positive")

    def __call__(self, alpha):
        """Return (C(alpha), C'(alpha))."""
        if self.mode == "constant":
            alpha = np.asarray(alpha, dtype=float)
            return self.C0 * np.ones_like(alpha), np.zeros_like(alpha)
        alpha = np.asarray(alpha, dtype=float)
        return (self.ell_ratio**2 + alpha**2) * self.C0, 2.0 * alpha * self.C0

    def minimum(self) -> float:
        """Lower bound of C over alpha in [0, 1]."""
        if self.mode == "constant":
            return self.C0
        return self.ell_ratio**2 * self.C0


@dataclass(frozen=True)
class ModelParams:
    """All constitutive constants of the model in one immutable record.

    Parameters
    ----------
    H : float
        Half width of the damage zone (m).
    C : StiffnessLaw
        Elastic modulus law (N).
    rho : float
        Mass density (kg/m); zero for quasistatic runs.
    eta : float
        Gradient coefficient for the plastic rate (W/m); >= 0.
    kappa : float
        Aging diffusion coefficient (m^2/s); >= 0.
    ell : float
        Damage length scale (m).
    Gc : float
        Fracture toughness (N).
    friction, aging : FrictionLaw, AgingLaw
        The rate-and-state laws.
    """

    H: float = 1.0
    C: StiffnessLaw = field(default_factory=StiffnessLaw)
    rho: float = 0.0
    eta: float = 0.0
    kappa: float = 0.04
    ell: float = 0.1
    Gc: float = 1.0
    friction: FrictionLaw = field(default_factory=FrictionLaw)
    aging: AgingLaw = field(default_factory=AgingLaw)

    def __post_init__(self):
        if not self.H > 0:
            raise ValueError("H must be positive")
        if self.rho < 0 or self.eta < 0 or self.kappa < 0:
            raise ValueError("rho, eta, kappa must be nonnegative")

    @property
    def C_const(self) -> float:
        """Constant modulus value; only meaningful in constant mode."""
        if self.C.mode != "constant":
            raise ValueError("stiffness law is not constant")
        return self.C.C0

    def replace(self, **kw) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **kw)


def default_params(**kw) -> ModelParams:
    """Reference parameter set used by the bundled experiment presets.

    H = 1, C = 1, theta_inf = 10, mu0 = 1, affine healing, weakening 10*age,
    A(rate) = ln(|rate|+1), B(age) = ln(4*age+1).  Keyword overrides are
    forwarded to :class:`ModelParams`.
    """
    return ModelParams(**kw)


# ----------------------------------------------------------------------
# constitutive evaluations
# ----------------------------------------------------------------------


def mu(pi, theta, law: FrictionLaw = FrictionLaw()):
    """Yield stress mu0 + A(pi) + B(theta); even in the rate, >= mu0."""
    return law.mu0 + law.rate_term(pi) + law.state_term(theta)


def dissipation_R(pi, theta, law: FrictionLaw = FrictionLaw()):
    """Plastic dissipation density.

    R(pi, theta) = mu0*|pi| + int_0^|pi| A(s) ds + B(theta)*|pi|, chosen so
    that its rate derivative is mu(pi, theta)*sign(pi).  Convex and even in
    the rate, zero at rest.
    """
    p = np.abs(pi)
    return (law.mu0 + law.state_term(theta)) * p + law.rate_term_integral(p)


def plastic_rate_Pi(sigma, theta, law: FrictionLaw = FrictionLaw()):
    """Invert the plastic flow rule: the rate driven by a given stress.

    Zero while |sigma| stays below the threshold mu0 + B(theta); beyond it
    the rate solves A(|rate|) = |sigma| - mu0 - B(theta) and carries the
    sign of sigma.  Continuous, nondecreasing in sigma and, for positive
    stress, nonincreasing in the age.
    """
    sigma = np.asarray(sigma, dtype=float)
    thr = law.mu0 + law.state_term(theta)
    excess = np.abs(sigma) - thr
    scalar = sigma.ndim == 0 and np.ndim(excess) == 0
    excess = np.atleast_1d(np.asarray(excess, dtype=float))
    out = np.zeros_like(excess)
    slip = excess > 0.0
    if np.any(slip):
        out[slip] = law.invert_rate_term(excess[slip])
    out = out * np.sign(sigma)
    return float(out[0]) if scalar else out


def aging_rhs(theta, pi, law: AgingLaw = AgingLaw()):
    """Reaction part of the aging equation: healing minus slip weakening."""
    return law.healing(theta) - np.abs(pi) * law.weakening(theta)


def theta_f(pi, law: AgingLaw = AgingLaw()):
    """Equilibrium age where healing balances slip weakening.

    Closed form theta_inf / (1 + c1*theta_inf*|pi|) for the default affine/
    linear laws; bisection on [0, theta_inf] otherwise (the residual is
    strictly monotone there).
    """
    p = np.abs(np.asarray(pi, dtype=float))
    if law.is_default_form:
        out = law.theta_inf / (1.0 + law.c1 * law.theta_inf * p)
        return float(out) if out.ndim == 0 else out

    def solve_one(rate):
        if rate == 0.0:
            return law.theta_inf
        lo, hi = 0.0, law.theta_inf
        # healing(lo) - rate*weakening(lo) = healing(0) > 0, at hi it is <= 0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            r = law.healing(mid) - rate * law.weakening(mid)
            if r > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * law.theta_inf:
                break
        return 0.5 * (lo + hi)

    if p.ndim == 0:
        return solve_one(float(p))
    return np.array([solve_one(v) for v in p.ravel()]).reshape(p.shape)


def stiffness(alpha, law: StiffnessLaw = StiffnessLaw()):
    """Evaluate (C(alpha), C'(alpha)) for the given stiffness law."""
    return law(alpha)


# ----------------------------------------------------------------------
# small numerics helpers shared by the custom-law fallbacks
# ----------------------------------------------------------------------


def _simpson_adaptive(f, b, tol=1e-12):
    """Adaptive Simpson integral of f on [0, b] (b scalar or array)."""

    def one(bb):
        if bb == 0.0:
            return 0.0

        def rec(x0, x2, f0, f1, f2, whole, eps, depth):
            x1l = 0.5 * (x0 + 0.5 * (x0 + x2))
            x1r = 0.5 * (0.5 * (x0 + x2) + x2)
            fl, fr = f(x1l), f(x1r)
            xm = 0.5 * (x0 + x2)
            left = (xm - x0) / 6.0 * (f0 + 4.0 * fl + f1)
            right = (x2 - xm) / 6.0 * (f1 + 4.0 * fr + f2)
            if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
                return left + right + (left + right - whole) / 15.0
            return rec(x0, xm, f0, fl, f1, left, eps / 2.0, depth - 1) + rec(
                xm, x2, f1, fr, f2, right, eps / 2.0, depth - 1
            )

        fm = f(0.5 * bb)
        f0v, f2v = f(0.0), f(bb)
        whole = bb / 6.0 * (f0v + 4.0 * fm + f2v)
        return rec(0.0, bb, f0v, fm, f2v, whole, tol, 40)

    b = np.asarray(b, dtype=float)
    if b.ndim == 0:
        return one(float(b))
    return np.array([one(v) for v in b.ravel()]).reshape(b.shape)


def _invert_increasing(f, y, hi_guess, tol=1e-13):
    """Safeguarded Newton/bisection for f(p) = y, f strictly increasing."""

    def one(yy):
        if yy <= 0.0:
            return 0.0
        lo, hi = 0.0, float(hi_guess)
        while f(hi) < yy:
            hi *= 2.0
            if hi > 1e300:
                raise FloatingPointError("rate inversion bracket blew up")
        p = min(hi, max(lo, yy / max(f(1.0), 1e-12)))
        for _ in range(200):
            r = f(p) - yy
            if abs(r) < tol * max(1.0, abs(yy)):
                return p
            if r > 0.0:
                hi = p
            else:
                lo = p
            h = 1e-7 * (1.0 + p)
            d = (f(p + h) - f(p)) / h
            step = r / d if d > 0 else 0.0
            p_new = p - step
            if not (lo < p_new < hi):
                p_new = 0.5 * (lo + hi)
            p = p_new
        return p

    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        return one(float(y))
    return np.array([one(v) for v in y.ravel()]).reshape(y.shape)


def _as_float(x):
    return float(np.asarray(x))


def mu_threshold(theta, law: FrictionLaw):
    """Stick threshold mu(0, theta) = mu0 + B(theta)."""
    return law.mu0 + law.state_term(theta)
