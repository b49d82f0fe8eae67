"""Affine model parametrization on the state space D = R_+^m x R^n.

An affine model is described by its functional characteristics

    F(u) = <a u, u> + <b, u> - c + int (e^{<u,xi>} - 1 - <chi(xi), u>) mu_0(dxi)
    R_i(u) = alpha_i u_i^2 + <beta_i, u> - gamma_i
             + int (e^{<u,xi>} - 1 - <chi_i(xi), u>) mu_i(dxi)      (i = 1..m)
    R_j(u) = (beta_JJ^T u_J)_j                                      (j = m+1..d)

with componentwise truncation chi(xi)_j = sign(xi_j) (|xi_j| ^ 1).  For the
state-linear components the truncation chi_i zeroes the coordinates in
I \\ {i}; jumps in those coordinates enter uncompensated.

Jump measures are closed scalar families supported on a single coordinate
axis of D \\ {0}.  Every built-in family carries closed-form expressions for
its exponential tail moment, its Levy-Khintchine integral and its exponential
tilt; a quadrature-backed wrapper covers anything else.  The state-linear
measures are admissible whenever they integrate
(||xi_{I\\{i}}|| ^ 1)(||xi_{J u {i}}|| ^ 1)^2 near the origin, which every
family below satisfies.

The effective domain

    Y = { y in R^d : sum_i int_{||xi|| >= 1} e^{<y, xi>} mu_i(dxi) < oo }

is order preserving for the cone order of R_+^m x R^n: membership is
monotone decreasing in the I-coordinates and depends on the J-coordinates
only through the measures supported there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate as _sint
from scipy import special as _sp

from .errors import ConfigError, DomainError

__all__ = [
    "StateShape",
    "LevyMeasure",
    "ZeroJumps",
    "CompoundPoissonExp",
    "CompoundPoissonPoint",
    "GammaLevy",
    "TemperedStableHalf",
    "ExpTiltedMeasure",
    "DomainY",
    "AffineModel",
    "ValidationReport",
    "validate_model",
    "eval_F",
    "eval_R",
    "reduced_R",
    "in_domain_Y",
    "truncation_chi_i",
]

_INF = math.inf

# Quadrature used by the wrapper measure and by test oracles.  Improper
# integrals are split at xi = 1 to mirror the definition of Y; integrals
# whose magnitude exceeds the cap are reported as infinite.
QUAD_ABS_TOL = 1e-10
QUAD_MAGNITUDE_CAP = 1e12


@dataclass(frozen=True)
class StateShape:
    """Coordinate split of the canonical state space R_+^m x R^n."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ConfigError("state shape requires m >= 0 and n >= 0")
        if self.m + self.n < 1:
            raise ConfigError("state shape requires d = m + n >= 1")

    @property
    def d(self) -> int:
        return self.m + self.n

    @property
    def I(self) -> range:  # noqa: E743 - index-set name
        """0-based indices of the nonnegative coordinates."""
        return range(self.m)

    @property
    def J(self) -> range:
        """0-based indices of the unconstrained coordinates."""
        return range(self.m, self.m + self.n)


def truncation_chi_i(shape: StateShape, i: int, xi) -> np.ndarray:
    """Componentwise truncation attached to the i-th linear characteristic.

    Coordinates in J u {i} map to sign(xi_j) (|xi_j| ^ 1); coordinates in
    I \\ {i} map to 0.  ``i`` is a 0-based index into the nonnegative block.
    """
    if i not in shape.I:
        raise IndexError(f"i={i} is not an index of the nonnegative block (m={shape.m})")
    xi = np.asarray(xi, dtype=float)
    out = np.clip(xi, -1.0, 1.0)
    for j in shape.I:
        if j != i:
            out[j] = 0.0
    return out


# ---------------------------------------------------------------------------
# Lévy measure families
# ---------------------------------------------------------------------------


class LevyMeasure:
    """A jump measure supported on one coordinate axis of D \\ {0}.

    Subclasses implement scalar primitives in the axis variable; the base
    class lifts them to d-vector arguments and provides shared identities
    such as CHI = int (xi ^ 1) mu(dxi) = mean_below(1) + tail_mass(1) for
    positive-support families.
    """

    axis: Optional[int] = None

    # -- scalar primitives (axis variable) ---------------------------------

    def _mgf_integral(self, s):
        """int (e^{s xi} - 1) mu(dxi); +inf outside the domain."""
        raise NotImplementedError

    def _mgf_derivative(self, s):
        """d/ds of _mgf_integral = int xi e^{s xi} mu(dxi)."""
        raise NotImplementedError

    def _exp_moment_tail(self, y: float) -> float:
        """int_{|xi| >= 1} e^{y xi} mu(dxi); +inf when divergent."""
        raise NotImplementedError

    def tail_mass(self, eps: float) -> float:
        """mu({|xi| >= eps})."""
        raise NotImplementedError

    def mean_below(self, eps: float) -> float:
        """int_{0 < xi < eps} xi mu(dxi) (positive-support families)."""
        raise NotImplementedError

    def tail_proposal(self, eps: float, u: np.ndarray):
        """Map uniforms to (proposal, acceptance probability) for the tail law.

        Inverse-CDF families return acceptance 1; rejection families return
        the pointwise acceptance of their dominating proposal.
        """
        raise NotImplementedError

    def tilted(self, theta: float) -> "LevyMeasure":
        """The exponentially tilted measure e^{theta xi} mu(dxi)."""
        raise NotImplementedError

    def density(self, xi: np.ndarray) -> np.ndarray:
        """Lebesgue density on (0, oo); atom families raise instead."""
        raise NotImplementedError

    def atoms(self):
        """[(location, mass)] for purely atomic families, else None."""
        return None

    # -- admissible exponential range --------------------------------------

    @property
    def exp_bound(self) -> float:
        """Supremum of s with int_{|xi|>=1} e^{s xi} mu < oo along the axis."""
        return _INF

    @property
    def bound_closed(self) -> bool:
        """Whether the supremum itself is admissible."""
        return True

    @property
    def is_zero(self) -> bool:
        return False

    # -- shared identities ---------------------------------------------------

    def chi_integral(self) -> float:
        """CHI = int sign(xi)(|xi| ^ 1) mu(dxi)."""
        return self.mean_below(1.0) + self.tail_mass(1.0)

    def chi_mass_above(self, eps: float) -> float:
        """int_{|xi| >= eps} sign(xi)(|xi| ^ 1) mu(dxi) for eps <= 1."""
        if eps > 1.0:
            raise ConfigError("chi_mass_above expects eps <= 1")
        return (self.mean_below(1.0) - self.mean_below(eps)) + self.tail_mass(1.0)

    def sim_drift_correction(self, eps: float, compensated: bool) -> float:
        """Drift added on the axis when jumps below eps are dropped.

        Compensated coordinates lose the tail truncation drift; uncompensated
        coordinates gain the mean of the discarded small jumps.
        """
        if compensated:
            return -self.chi_mass_above(eps)
        return self.mean_below(eps)

    # -- d-vector wrappers ---------------------------------------------------

    def _axis_value(self, u):
        u = np.asarray(u)
        if u.ndim == 0:
            return u[()]
        return u[self.axis]

    def exp_moment(self, y) -> float:
        """int_{||xi|| >= 1} e^{<y, xi>} mu(dxi) for a real vector y."""
        if self.is_zero:
            return 0.0
        s = self._axis_value(y)
        return self._exp_moment_tail(float(np.real(s)))

    def lk_integral(self, u, compensated: bool = True):
        """int (e^{<u,xi>} - 1 - <chi(xi), u>) mu(dxi).

        ``compensated`` states whether the truncation acts on this measure's
        axis (true for mu_0 and for coordinates in J u {i} of mu_i).
        """
        if self.is_zero:
            return 0.0
        s = self._axis_value(u)
        if np.iscomplexobj(s):
            if self._exp_moment_tail(float(np.real(s))) == _INF:
                raise DomainError("real part of u outside the effective domain")
        val = self._mgf_integral(s)
        if np.isreal(val) and np.isinf(np.real(val)):
            raise DomainError("u outside the effective domain of the jump measure")
        if compensated:
            val = val - s * self.chi_integral()
        return val

    def lk_derivative(self, u, compensated: bool = True):
        """d/du_axis of lk_integral (other partials vanish)."""
        if self.is_zero:
            return 0.0
        s = self._axis_value(u)
        val = self._mgf_derivative(s)
        if compensated:
            val = val - self.chi_integral()
        return val


@dataclass(frozen=True)
class ZeroJumps(LevyMeasure):
    """The null measure."""

    axis: Optional[int] = None

    @property
    def is_zero(self) -> bool:
        return True

    def exp_moment(self, y) -> float:
        return 0.0

    def lk_integral(self, u, compensated: bool = True):
        return 0.0

    def lk_derivative(self, u, compensated: bool = True):
        return 0.0

    def chi_integral(self) -> float:
        return 0.0

    def tail_mass(self, eps: float) -> float:
        return 0.0

    def mean_below(self, eps: float) -> float:
        return 0.0

    def chi_mass_above(self, eps: float) -> float:
        return 0.0

    def tilted(self, theta: float) -> "ZeroJumps":
        return self

    def validate(self):
        return []


@dataclass(frozen=True)
class CompoundPoissonExp(LevyMeasure):
    """Compound Poisson jumps with Exp(jump_rate) law: rate * jump_rate * e^{-jump_rate xi} dxi."""

    rate: float
    jump_rate: float
    axis: int = 0

    def validate(self):
        out = []
        if self.rate < 0:
            out.append("compound-Poisson rate must be >= 0")
        if self.jump_rate <= 0:
            out.append("exponential jump law requires jump_rate > 0")
        return out

    @property
    def exp_bound(self) -> float:
        return self.jump_rate

    @property
    def bound_closed(self) -> bool:
        return False

    def _mgf_integral(self, s):
        if not np.iscomplexobj(s) and np.real(s) >= self.jump_rate:
            return _INF
        return self.rate * s / (self.jump_rate - s)

    def _mgf_derivative(self, s):
        return self.rate * self.jump_rate / (self.jump_rate - s) ** 2

    def _exp_moment_tail(self, y: float) -> float:
        g = self.jump_rate - y
        if g <= 0:
            return _INF
        return self.rate * self.jump_rate * math.exp(-g) / g

    def tail_mass(self, eps: float) -> float:
        return self.rate * math.exp(-self.jump_rate * eps)

    def mean_below(self, eps: float) -> float:
        e = self.jump_rate
        return self.rate * ((1.0 - math.exp(-e * eps)) / e - eps * math.exp(-e * eps))

    def tail_proposal(self, eps: float, u: np.ndarray):
        # Memoryless tail: exact inverse CDF, acceptance 1.
        prop = eps - np.log1p(-u[:, 0]) / self.jump_rate
        return prop, np.ones_like(prop)

    def tilted(self, theta: float) -> "CompoundPoissonExp":
        if theta >= self.jump_rate:
            raise DomainError("tilt parameter reaches the exponential jump rate")
        new_rate = self.rate * self.jump_rate / (self.jump_rate - theta)
        return CompoundPoissonExp(new_rate, self.jump_rate - theta, self.axis)

    def density(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.rate * self.jump_rate * np.exp(-self.jump_rate * xi)


@dataclass(frozen=True)
class CompoundPoissonPoint(LevyMeasure):
    """Compound Poisson jumps of deterministic size: rate * delta_{size}."""

    rate: float
    size: float
    axis: int = 0

    def validate(self):
        out = []
        if self.rate < 0:
            out.append("compound-Poisson rate must be >= 0")
        if self.size == 0:
            out.append("point jump size must be nonzero")
        return out

    def _mgf_integral(self, s):
        return self.rate * (np.exp(s * self.size) - 1.0)

    def _mgf_derivative(self, s):
        return self.rate * self.size * np.exp(s * self.size)

    def _exp_moment_tail(self, y: float) -> float:
        if abs(self.size) >= 1.0:
            return self.rate * math.exp(y * self.size)
        return 0.0

    def chi_integral(self) -> float:
        return self.rate * float(np.clip(self.size, -1.0, 1.0))

    def tail_mass(self, eps: float) -> float:
        return self.rate if abs(self.size) >= eps else 0.0

    def mean_below(self, eps: float) -> float:
        return self.rate * self.size if abs(self.size) < eps else 0.0

    def chi_mass_above(self, eps: float) -> float:
        if abs(self.size) < eps:
            return 0.0
        return self.rate * float(np.clip(self.size, -1.0, 1.0))

    def tail_proposal(self, eps: float, u: np.ndarray):
        prop = np.full(u.shape[0], self.size)
        return prop, np.ones(u.shape[0])

    def tilted(self, theta: float) -> "CompoundPoissonPoint":
        return CompoundPoissonPoint(self.rate * math.exp(theta * self.size), self.size, self.axis)

    def atoms(self):
        return [(self.size, self.rate)]


@dataclass(frozen=True)
class GammaLevy(LevyMeasure):
    """Gamma-type measure c * e^{-rho xi} xi^{-1} dxi on (0, oo).

    Infinite activity, finite variation; the effective exponential range is
    the open half-line s < rho.
    """

    c: float
    rho: float
    axis: int = 0

    def validate(self):
        out = []
        if self.c <= 0:
            out.append("gamma family requires c > 0")
        if self.rho <= 0:
            out.append("gamma family requires rho > 0 (Levy tail integrability)")
        return out

    @property
    def exp_bound(self) -> float:
        return self.rho

    @property
    def bound_closed(self) -> bool:
        return False

    def _mgf_integral(self, s):
        # Frullani: int (e^{s xi} - 1) e^{-rho xi} xi^{-1} dxi = log(rho / (rho - s))
        if not np.iscomplexobj(s) and np.real(s) >= self.rho:
            return _INF
        return -self.c * np.log1p(-s / self.rho)

    def _mgf_derivative(self, s):
        return self.c / (self.rho - s)

    def _exp_moment_tail(self, y: float) -> float:
        g = self.rho - y
        if g <= 0:
            return _INF
        return self.c * float(_sp.exp1(g))

    def tail_mass(self, eps: float) -> float:
        return self.c * float(_sp.exp1(self.rho * eps))

    def mean_below(self, eps: float) -> float:
        return self.c * (1.0 - math.exp(-self.rho * eps)) / self.rho

    def tail_proposal(self, eps: float, u: np.ndarray):
        # exact inverse CDF of the tail law by bisection on E1 (the density
        # ~ 1/xi near eps makes rejection proposals arbitrarily inefficient)
        total = _sp.exp1(self.rho * eps)
        target = (1.0 - u[:, 0]) * total
        lo = np.full(u.shape[0], self.rho * eps)
        hi = np.full(u.shape[0], self.rho * eps + 45.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            high_side = _sp.exp1(mid) > target
            lo = np.where(high_side, mid, lo)
            hi = np.where(high_side, hi, mid)
        prop = 0.5 * (lo + hi) / self.rho
        return prop, np.ones_like(prop)

    def tilted(self, theta: float) -> "GammaLevy":
        if theta >= self.rho:
            raise DomainError("tilt parameter reaches the gamma tempering rate")
        return GammaLevy(self.c, self.rho - theta, self.axis)

    def density(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.c * np.exp(-self.rho * xi) / xi


@dataclass(frozen=True)
class TemperedStableHalf(LevyMeasure):
    """Tempered 1/2-stable measure scale * e^{-tempering xi} xi^{-3/2} dxi.

    Finite variation with infinite activity; the exponential range is the
    closed half-line s <= tempering (the boundary moment is finite).  The
    untempered case tempering = 0 is admissible and arises as the boundary
    tilt of a tempered member.
    """

    scale: float
    tempering: float
    axis: int = 0

    def validate(self):
        out = []
        if self.scale <= 0:
            out.append("tempered-stable family requires scale > 0")
        if self.tempering < 0:
            out.append("tempered-stable family requires tempering >= 0")
        return out

    @property
    def exp_bound(self) -> float:
        return self.tempering

    @property
    def bound_closed(self) -> bool:
        return True

    def _mgf_integral(self, s):
        # int (e^{s xi} - 1) e^{-rho xi} xi^{-3/2} dxi = 2 sqrt(pi) (sqrt(rho) - sqrt(rho - s))
        rho = self.tempering
        if np.iscomplexobj(s):
            root = np.sqrt(rho - s + 0.0j)
        else:
            if s > rho:
                return _INF
            root = math.sqrt(rho - s)
        return 2.0 * math.sqrt(math.pi) * self.scale * (math.sqrt(rho) - root)

    def _mgf_derivative(self, s):
        rho = self.tempering
        if np.iscomplexobj(s):
            return math.sqrt(math.pi) * self.scale / np.sqrt(rho - s + 0.0j)
        if s > rho:
            return _INF
        if s == rho:
            return _INF
        return math.sqrt(math.pi) * self.scale / math.sqrt(rho - s)

    def _exp_moment_tail(self, y: float) -> float:
        g = self.tempering - y
        if g < 0:
            return _INF
        # int_1^oo e^{-g xi} xi^{-3/2} dxi = 2 (e^{-g} - sqrt(pi g) erfc(sqrt(g)))
        return 2.0 * self.scale * (math.exp(-g) - math.sqrt(math.pi * g) * math.erfc(math.sqrt(g)))

    def tail_mass(self, eps: float) -> float:
        rho = self.tempering
        re = rho * eps
        return self.scale * (
            2.0 * math.exp(-re) / math.sqrt(eps)
            - 2.0 * math.sqrt(math.pi * rho) * math.erfc(math.sqrt(re))
        )

    def mean_below(self, eps: float) -> float:
        rho = self.tempering
        if rho == 0.0:
            return self.scale * 2.0 * math.sqrt(eps)
        return self.scale * math.sqrt(math.pi / rho) * math.erf(math.sqrt(rho * eps))

    def tail_proposal(self, eps: float, u: np.ndarray):
        # Dominating proposal: the untempered power tail xi = eps / (1-u)^2,
        # accepted with the tempering factor e^{-rho (xi - eps)}.
        prop = eps / (1.0 - u[:, 0]) ** 2
        return prop, np.exp(-self.tempering * (prop - eps))

    def tilted(self, theta: float) -> "TemperedStableHalf":
        if theta > self.tempering:
            raise DomainError("tilt parameter exceeds the tempering rate")
        return TemperedStableHalf(self.scale, self.tempering - theta, self.axis)

    def density(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.scale * np.exp(-self.tempering * xi) * xi ** (-1.5)


class ExpTiltedMeasure(LevyMeasure):
    """Quadrature-backed fallback for e^{theta xi} mu(dxi).

    Used when a family is not closed under tilting.  Integrals carry the
    extra exponential factor and are evaluated by adaptive quadrature split
    at xi = 1; values beyond the magnitude cap are reported as infinite.
    Path sampling is not provided.
    """

    def __init__(self, base: LevyMeasure, theta: float, abs_tol: float = QUAD_ABS_TOL):
        if base.exp_moment(np.full(max(base.axis or 0, 0) + 1, theta)) == _INF:
            raise DomainError("tilt parameter outside the effective domain of the base measure")
        self.base = base
        self.theta = float(theta)
        self.abs_tol = abs_tol
        self.axis = base.axis

    def _weighted(self, xi, w):
        # log-space product: e^{(theta + w) xi} overflows long before the
        # weighted density (integrable for admissible exponents) does
        xi = np.asarray(xi, dtype=float)
        base = np.asarray(self.base.density(xi), dtype=float)
        with np.errstate(divide="ignore"):
            logd = np.where(base > 0.0, np.log(np.where(base > 0.0, base, 1.0)), -np.inf)
        return np.exp((self.theta + w) * xi + logd)

    def density(self, xi):
        return self._weighted(xi, 0.0)

    def _mgf_integral(self, s):
        return _quad_split(lambda x: self._weighted(x, s) - self._weighted(x, 0.0),
                           self.abs_tol)

    def _mgf_derivative(self, s):
        return _quad_split(lambda x: x * self._weighted(x, s), self.abs_tol)

    def _exp_moment_tail(self, y: float) -> float:
        return _quad_tail(lambda x: self._weighted(x, y), self.abs_tol)

    def tail_mass(self, eps: float) -> float:
        return _quad_interval(self.density, eps, _INF, self.abs_tol)

    def mean_below(self, eps: float) -> float:
        return _quad_interval(lambda x: x * self.density(x), 0.0, eps, self.abs_tol)

    def tilted(self, theta: float) -> "ExpTiltedMeasure":
        return ExpTiltedMeasure(self.base, self.theta + theta, self.abs_tol)

    def tail_proposal(self, eps, u):
        raise ConfigError("quadrature-tilted measures do not support path sampling")

    def validate(self):
        return []


def _quad_interval(f, lo, hi, abs_tol):
    import warnings
    with np.errstate(over="ignore", invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", _sint.IntegrationWarning)
        if math.isinf(hi):
            val, _ = _sint.quad(f, lo, np.inf, epsabs=abs_tol, limit=200)
        else:
            val, _ = _sint.quad(f, lo, hi, epsabs=abs_tol, limit=200)
    if not np.isfinite(val) or abs(val) > QUAD_MAGNITUDE_CAP:
        return _INF
    return val


def _quad_split(f, abs_tol):
    """Integral over (0, oo) split at 1 (mirrors the domain definition)."""
    inner = _quad_interval(f, 0.0, 1.0, abs_tol)
    outer = _quad_interval(f, 1.0, _INF, abs_tol)
    if inner == _INF or outer == _INF:
        return _INF
    return inner + outer


def _quad_tail(f, abs_tol):
    return _quad_interval(f, 1.0, _INF, abs_tol)


def lk_integral_quadrature(measure: LevyMeasure, u, compensated: bool = True,
                           abs_tol: float = QUAD_ABS_TOL):
    """Adaptive quadrature of the defining Levy-Khintchine integrand.

    Independent of the analytic branch; used as the agreement oracle.
    """
    s = float(np.real(measure._axis_value(u)))
    at = measure.atoms()
    if at is not None:
        total = 0.0
        for loc, mass in at:
            comp = float(np.clip(loc, -1.0, 1.0)) * s if compensated else 0.0
            total += mass * (math.exp(s * loc) - 1.0 - comp)
        return total

    def integrand(x):
        comp = np.clip(x, -1.0, 1.0) * s if compensated else 0.0
        return (np.exp(s * x) - 1.0 - comp) * measure.density(x)

    return _quad_split(integrand, abs_tol)


def exp_moment_quadrature(measure: LevyMeasure, y, abs_tol: float = QUAD_ABS_TOL):
    """Adaptive quadrature of the tail exponential moment (oracle)."""
    s = float(np.real(measure._axis_value(y)))
    at = measure.atoms()
    if at is not None:
        return sum(mass * math.exp(s * loc) for loc, mass in at if abs(loc) >= 1.0)
    return _quad_tail(lambda x: np.exp(s * x) * measure.density(x), abs_tol)


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainY:
    """Membership predicate of the effective domain, backed by the measures."""

    shape: StateShape
    measures: tuple

    def contains(self, y) -> bool:
        y = np.asarray(y)
        if np.iscomplexobj(y):
            y = y.real
        for mu in self.measures:
            if mu.exp_moment(y) == _INF:
                return False
        return True

    def __contains__(self, y) -> bool:
        return self.contains(y)

    def axis_bound(self, k: int):
        """(upper bound, closed) for coordinate k, (inf, True) if unconstrained."""
        bound, closed = _INF, True
        for mu in self.measures:
            if mu.is_zero or mu.axis != k:
                continue
            if mu.exp_bound < bound:
                bound, closed = mu.exp_bound, mu.bound_closed
            elif mu.exp_bound == bound:
                closed = closed and mu.bound_closed
        return bound, closed


# ---------------------------------------------------------------------------
# The affine model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineModel:
    """Parametric affine model on D = R_+^m x R^n.

    Immutable after construction; evaluation is pure and reentrant, so
    instances are safe to share across concurrent tasks.
    """

    shape: StateShape
    a: np.ndarray
    b: np.ndarray
    c: float = 0.0
    mu0: LevyMeasure = ZeroJumps()
    alpha: np.ndarray = None
    beta_I: np.ndarray = None
    gamma: np.ndarray = None
    mus: tuple = None
    beta_JJ: np.ndarray = None

    def __post_init__(self):
        m, n, d = self.shape.m, self.shape.n, self.shape.d

        def freeze(x, shp):
            arr = np.zeros(shp) if x is None else np.array(x, dtype=float).reshape(shp)
            arr.setflags(write=False)
            return arr

        object.__setattr__(self, "a", freeze(self.a, (d, d)))
        object.__setattr__(self, "b", freeze(self.b, (d,)))
        object.__setattr__(self, "alpha", freeze(self.alpha, (m,)))
        object.__setattr__(self, "beta_I", freeze(self.beta_I, (m, d)))
        object.__setattr__(self, "gamma", freeze(self.gamma, (m,)))
        object.__setattr__(self, "beta_JJ", freeze(self.beta_JJ, (n, n)))
        object.__setattr__(self, "c", float(self.c))
        mus = tuple(self.mus) if self.mus is not None else tuple(ZeroJumps() for _ in range(m))
        if len(mus) != m:
            raise ConfigError(f"expected {m} state-linear jump measures, got {len(mus)}")
        object.__setattr__(self, "mus", mus)

    @property
    def domain(self) -> DomainY:
        return DomainY(self.shape, (self.mu0,) + self.mus)

    def measure_compensated(self, i: int) -> bool:
        """Whether chi_i acts on the axis of mu_i (axis in J u {i})."""
        mu = self.mus[i]
        if mu.is_zero:
            return True
        return mu.axis == i or mu.axis in self.shape.J


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


def validate_model(model: AffineModel) -> ValidationReport:
    """Check the parametric admissibility constraints; empty report on success."""
    v = []
    shape = model.shape
    m, d = shape.m, shape.d

    if not np.allclose(model.a, model.a.T, atol=1e-12):
        v.append("a must be symmetric")
    else:
        w = np.linalg.eigvalsh(model.a)
        if w.min() < -1e-12:
            v.append(f"a must be positive semidefinite (min eigenvalue {w.min():.3e})")
    for i in shape.I:
        if np.any(model.a[i, :] != 0.0):
            v.append(f"a row {i + 1} must vanish: constant diffusion cannot load on "
                     "the nonnegative block (only alpha_i does)")
            break
    for i in shape.I:
        if model.b[i] < 0:
            v.append(f"b_{i + 1} must be >= 0 (b must lie in D)")
    if model.c < 0:
        v.append("c must be >= 0")
    for i in shape.I:
        if model.alpha[i] < 0:
            v.append(f"alpha_{i + 1} must be >= 0")
        if model.gamma[i] < 0:
            v.append(f"gamma_{i + 1} must be >= 0")
        for j in shape.I:
            if j != i and model.beta_I[i, j] < 0:
                v.append(f"beta_{i + 1},{j + 1} must be >= 0 for j != i in the nonnegative block")

    for tag, mu in [("mu0", model.mu0)] + [(f"mu_{i + 1}", model.mus[i]) for i in shape.I]:
        if mu.is_zero:
            continue
        if mu.axis is None or not (0 <= mu.axis < d):
            v.append(f"{tag}: jump axis out of range")
            continue
        if mu.axis in shape.I:
            neg_support = isinstance(mu, CompoundPoissonPoint) and mu.size < 0
            if neg_support:
                v.append(f"{tag}: support must lie in D (nonnegative axis {mu.axis + 1})")
        for msg in mu.validate():
            v.append(f"{tag}: {msg}")
        if mu.exp_moment(np.zeros(d)) == _INF:
            v.append(f"{tag}: exp_moment(0) must be finite")
    return ValidationReport(tuple(v))


def in_domain_Y(model: AffineModel, y) -> bool:
    """Membership of the effective domain Y (real part for complex input)."""
    return model.domain.contains(y)


def eval_F(model: AffineModel, u, check_domain: bool = True):
    """The constant functional characteristic F(u)."""
    u = np.asarray(u)
    if check_domain and not in_domain_Y(model, u):
        raise DomainError("u outside the effective domain Y")
    with np.errstate(invalid="ignore", over="ignore"):
        val = u @ (model.a @ u) + model.b @ u - model.c
        val = val + model.mu0.lk_integral(u, compensated=True)
    if not np.iscomplexobj(u):
        return float(val)
    return complex(val)


def eval_R(model: AffineModel, u, check_domain: bool = True):
    """The state-linear functional characteristic R(u) as a d-vector."""
    u = np.asarray(u)
    if check_domain and not in_domain_Y(model, u):
        raise DomainError("u outside the effective domain Y")
    shape = model.shape
    m, n = shape.m, shape.n
    dtype = complex if np.iscomplexobj(u) else float
    out = np.zeros(shape.d, dtype=dtype)
    with np.errstate(invalid="ignore", over="ignore"):
        for i in shape.I:
            val = model.alpha[i] * u[i] ** 2 + model.beta_I[i] @ u - model.gamma[i]
            val = val + model.mus[i].lk_integral(u, compensated=model.measure_compensated(i))
            out[i] = val
        if n:
            out[m:] = model.beta_JJ.T @ u[m:]
    return out


def reduced_R(model: AffineModel, v, check_domain: bool = True) -> np.ndarray:
    """The reduced vector field: the I-components of R at (v, 0)."""
    shape = model.shape
    v = np.asarray(v, dtype=float)
    u = np.zeros(shape.d)
    u[: shape.m] = v
    return eval_R(model, u, check_domain=check_domain)[: shape.m]
