"""The GB2 family: cdfs, quantiles, Lorenz curves, moments and Gini indices.

Supported families and their parameter vectors:

    gb2        (a, b, p, q)
    b2         (b, p, q)        # GB2 with a = 1
    sm         (a, b, q)        # Singh-Maddala, GB2 with p = 1
    dagum      (a, b, p)        # GB2 with q = 1
    lognormal  (mu, sigma)
    fisk       (a, b)           # GB2 with p = q = 1
    weibull    (a, b)

``b`` is the scale (money units); everything else is a dimensionless
shape except the lognormal ``mu``, which plays the role of a log-scale.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .exceptions import DomainError, ExistenceError, NonConvergenceError
from .specfun import (
    SeriesControl,
    hyp3f2_unit,
    inc_beta_ratio,
    inc_gamma_ratio,
    inv_inc_beta_ratio,
    ln_gamma,
    std_normal_cdf,
    std_normal_quantile,
)

__all__ = [
    "FAMILIES",
    "FamilySpec",
    "GiniValue",
    "cdf",
    "quantile",
    "lorenz",
    "lorenz_exists_margin",
    "moment",
    "incomplete_moment_cdf",
    "gini_closed",
    "n_shape_params",
    "shapes_of",
    "spec_from_shapes",
    "with_scale",
]

FAMILIES = ("gb2", "b2", "sm", "dagum", "lognormal", "fisk", "weibull")

_N_PARAMS = {
    "gb2": 4,
    "b2": 3,
    "sm": 3,
    "dagum": 3,
    "lognormal": 2,
    "fisk": 2,
    "weibull": 2,
}

# index of the scale parameter within the parameter vector
_SCALE_INDEX = {
    "gb2": 1,
    "b2": 0,
    "sm": 1,
    "dagum": 1,
    "lognormal": 0,
    "fisk": 1,
    "weibull": 1,
}


@dataclass(frozen=True)
class FamilySpec:
    """A distribution family tag plus its parameter vector."""

    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        params = tuple(float(v) for v in self.params)
        if len(params) != _N_PARAMS[self.family]:
            raise DomainError(
                f"{self.family} takes {_N_PARAMS[self.family]} parameters, "
                f"got {len(params)}"
            )
        for i, v in enumerate(params):
            if self.family == "lognormal" and i == 0:
                continue  # mu may be any real
            if v <= 0.0 or not math.isfinite(v):
                raise DomainError(
                    f"{self.family} parameter {i} must be positive and finite, got {v}"
                )
        object.__setattr__(self, "params", params)

    @classmethod
    def gb2(cls, a, b, p, q):
        return cls("gb2", (a, b, p, q))

    @classmethod
    def b2(cls, b, p, q):
        return cls("b2", (b, p, q))

    @classmethod
    def sm(cls, a, b, q):
        return cls("sm", (a, b, q))

    @classmethod
    def dagum(cls, a, b, p):
        return cls("dagum", (a, b, p))

    @classmethod
    def lognormal(cls, mu, sigma):
        return cls("lognormal", (mu, sigma))

    @classmethod
    def fisk(cls, a, b):
        return cls("fisk", (a, b))

    @classmethod
    def weibull(cls, a, b):
        return cls("weibull", (a, b))

    def as_gb2(self) -> Optional["FamilySpec"]:
        """The equivalent GB2 spec, or None for non-nested families."""
        if self.family == "gb2":
            return self
        if self.family == "b2":
            b, p, q = self.params
            return FamilySpec.gb2(1.0, b, p, q)
        if self.family == "sm":
            a, b, q = self.params
            return FamilySpec.gb2(a, b, 1.0, q)
        if self.family == "dagum":
            a, b, p = self.params
            return FamilySpec.gb2(a, b, p, 1.0)
        if self.family == "fisk":
            a, b = self.params
            return FamilySpec.gb2(a, b, 1.0, 1.0)
        return None


@dataclass(frozen=True)
class GiniValue:
    """A Gini index together with how it was computed."""

    value: float
    method: str  # closed_form | hypergeometric | monte_carlo
    mc_std_error: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise DomainError(f"Gini value {self.value} outside [0, 1]")


def n_shape_params(family):
    """Number of shape parameters estimated from shares."""
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}")
    return _N_PARAMS[family] - 1


def shapes_of(spec):
    """Shape parameters of a spec, scale removed.

    Orderings: gb2 (a, p, q); b2 (p, q); sm (a, q); dagum (a, p);
    lognormal (sigma,); fisk (a,); weibull (a,).
    """
    i = _SCALE_INDEX[spec.family]
    return np.array([v for j, v in enumerate(spec.params) if j != i])


def spec_from_shapes(family, shapes, scale=1.0):
    """Build a FamilySpec from shape parameters plus a scale."""
    shapes = [float(v) for v in np.atleast_1d(shapes)]
    if len(shapes) != n_shape_params(family):
        raise DomainError(
            f"{family} has {n_shape_params(family)} shape parameters, "
            f"got {len(shapes)}"
        )
    params = list(shapes)
    params.insert(_SCALE_INDEX[family], float(scale))
    return FamilySpec(family, tuple(params))


def with_scale(spec, scale):
    """Copy of ``spec`` with its scale parameter replaced."""
    return spec_from_shapes(spec.family, shapes_of(spec), scale)


def _scale(spec):
    return spec.params[_SCALE_INDEX[spec.family]]


def mean_exists(spec):
    """Whether E[X] is finite."""
    return moment_exists(spec, 1.0)


def moment_exists(spec, k):
    """Whether E[X^k] is finite for k > 0."""
    fam, par = spec.family, spec.params
    if fam == "gb2":
        a, _, p, q = par
        return q > k / a and p + k / a > 0
    if fam == "b2":
        _, p, q = par
        return q > k
    if fam == "sm":
        a, _, q = par
        return q > k / a
    if fam == "dagum":
        a, _, _ = par
        return k / a < 1.0
    if fam == "fisk":
        a, _ = par
        return k / a < 1.0
    return True  # lognormal, weibull


def cdf(spec, x):
    """Cumulative distribution function."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("cdf requires x >= 0")
    fam, par = spec.family, spec.params
    with np.errstate(divide="ignore", over="ignore"):
        if fam == "gb2":
            a, b, p, q = par
            xa = (x / b) ** a
            out = inc_beta_ratio(xa / (1.0 + xa), p, q)
        elif fam == "b2":
            b, p, q = par
            r = x / b
            out = inc_beta_ratio(r / (1.0 + r), p, q)
        elif fam == "sm":
            a, b, q = par
            out = 1.0 - (1.0 + (x / b) ** a) ** (-q)
        elif fam == "dagum":
            a, b, p = par
            out = np.where(x > 0.0, (1.0 + (x / b) ** (-a)) ** (-p), 0.0)
        elif fam == "lognormal":
            mu, sigma = par
            out = np.where(
                x > 0.0,
                std_normal_cdf((np.log(np.where(x > 0.0, x, 1.0)) - mu) / sigma),
                0.0,
            )
        elif fam == "fisk":
            a, b = par
            out = 1.0 - 1.0 / (1.0 + (x / b) ** a)
        else:  # weibull
            a, b = par
            out = 1.0 - np.exp(-((x / b) ** a))
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def quantile(spec, u):
    """Quantile function for u in (0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise DomainError("quantile requires 0 < u < 1")
    fam, par = spec.family, spec.params
    if fam == "gb2":
        a, b, p, q = par
        v = inv_inc_beta_ratio(u, p, q)
        out = b * (v / (1.0 - v)) ** (1.0 / a)
    elif fam == "b2":
        b, p, q = par
        v = inv_inc_beta_ratio(u, p, q)
        out = b * v / (1.0 - v)
    elif fam == "sm":
        a, b, q = par
        out = b * ((1.0 - u) ** (-1.0 / q) - 1.0) ** (1.0 / a)
    elif fam == "dagum":
        a, b, p = par
        out = b * (u ** (-1.0 / p) - 1.0) ** (-1.0 / a)
    elif fam == "lognormal":
        mu, sigma = par
        out = np.exp(mu + sigma * std_normal_quantile(u))
    elif fam == "fisk":
        a, b = par
        out = b * (u / (1.0 - u)) ** (1.0 / a)
    else:  # weibull
        a, b = par
        out = b * (-np.log1p(-u)) ** (1.0 / a)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def lorenz_exists_margin(spec):
    """Positive when the Lorenz curve exists (the mean is finite).

    The magnitude is the distance to the existence boundary, which the
    fitting code uses to steer optimizers back into the feasible region.
    """
    fam, par = spec.family, spec.params
    if fam == "gb2":
        a, _, _, q = par
        return q - 1.0 / a
    if fam == "b2":
        _, _, q = par
        return q - 1.0
    if fam == "sm":
        a, _, q = par
        return q - 1.0 / a
    if fam == "dagum":
        a, _, _ = par
        return a - 1.0
    if fam == "fisk":
        a, _ = par
        return a - 1.0
    return 1.0  # lognormal, weibull


def lorenz(spec, u):
    """Lorenz curve L(u) on [0, 1]; scale-free."""
    if lorenz_exists_margin(spec) <= 0.0:
        raise ExistenceError(
            f"Lorenz curve undefined for {spec.family}{spec.params}: mean does not exist"
        )
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u > 1.0)):
        raise DomainError("lorenz requires 0 <= u <= 1")
    fam, par = spec.family, spec.params
    if fam == "gb2":
        a, _, p, q = par
        out = inc_beta_ratio(inv_inc_beta_ratio(u, p, q), p + 1.0 / a, q - 1.0 / a)
    elif fam == "b2":
        _, p, q = par
        out = inc_beta_ratio(inv_inc_beta_ratio(u, p, q), p + 1.0, q - 1.0)
    elif fam == "sm":
        a, _, q = par
        out = inc_beta_ratio(
            1.0 - (1.0 - u) ** (1.0 / q), 1.0 + 1.0 / a, q - 1.0 / a
        )
    elif fam == "dagum":
        a, _, p = par
        out = inc_beta_ratio(u ** (1.0 / p), p + 1.0 / a, 1.0 - 1.0 / a)
    elif fam == "lognormal":
        _, sigma = par
        out = np.where(
            (u > 0.0) & (u < 1.0),
            std_normal_cdf(
                special.ndtri(np.clip(u, 1e-300, 1.0 - 1e-16)) - sigma
            ),
            u,
        )
    elif fam == "fisk":
        a, _ = par
        out = inc_beta_ratio(u, 1.0 + 1.0 / a, 1.0 - 1.0 / a)
    else:  # weibull
        a, _ = par
        out = np.where(
            u < 1.0,
            inc_gamma_ratio(-np.log1p(-np.clip(u, 0.0, 1.0 - 1e-16)), 1.0 + 1.0 / a),
            1.0,
        )
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _ln_beta(p, q):
    return ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)


def moment(spec, k):
    """k-th raw moment E[X^k] for k > 0."""
    if k <= 0.0:
        raise DomainError("moment requires k > 0")
    if not moment_exists(spec, k):
        raise ExistenceError(
            f"moment of order {k} does not exist for {spec.family}{spec.params}"
        )
    fam, par = spec.family, spec.params
    if fam == "gb2":
        a, b, p, q = par
        return b**k * math.exp(_ln_beta(p + k / a, q - k / a) - _ln_beta(p, q))
    if fam == "b2":
        b, p, q = par
        return b**k * math.exp(_ln_beta(p + k, q - k) - _ln_beta(p, q))
    if fam == "sm":
        a, b, q = par
        return b**k * math.exp(
            ln_gamma(1.0 + k / a) + ln_gamma(q - k / a) - ln_gamma(q)
        )
    if fam == "dagum":
        a, b, p = par
        return b**k * math.exp(
            ln_gamma(p + k / a) + ln_gamma(1.0 - k / a) - ln_gamma(p)
        )
    if fam == "lognormal":
        mu, sigma = par
        return math.exp(k * mu + k**2 * sigma**2 / 2.0)
    if fam == "fisk":
        # derived from the GB2 moment at p = q = 1; the direct b^k G(1+k)G(1-k)
        # form breaks scale-shape separation
        a, b = par
        return b**k * math.exp(ln_gamma(1.0 + k / a) + ln_gamma(1.0 - k / a))
    a, b = par  # weibull
    return b**k * math.exp(ln_gamma(1.0 + k / a))


def incomplete_moment_cdf(spec, k, x):
    """Normalized k-th incomplete moment F_(k)(x) = int_0^x t^k dF / E[X^k].

    Realized through the re-parameterized family member, so composing the
    k = 1 case with the quantile reproduces the Lorenz curve.
    """
    if k <= 0.0:
        raise DomainError("incomplete_moment_cdf requires k > 0")
    if not moment_exists(spec, k):
        raise ExistenceError(
            f"incomplete moment of order {k} undefined for {spec.family}{spec.params}"
        )
    fam, par = spec.family, spec.params
    if fam == "gb2":
        a, b, p, q = par
        return cdf(FamilySpec.gb2(a, b, p + k / a, q - k / a), x)
    if fam == "b2":
        b, p, q = par
        return cdf(FamilySpec.b2(b, p + k, q - k), x)
    if fam == "sm":
        a, b, q = par
        return cdf(FamilySpec.gb2(a, b, 1.0 + k / a, q - k / a), x)
    if fam == "dagum":
        a, b, p = par
        return cdf(FamilySpec.gb2(a, b, p + k / a, 1.0 - k / a), x)
    if fam == "lognormal":
        mu, sigma = par
        return cdf(FamilySpec.lognormal(mu + k * sigma**2, sigma), x)
    if fam == "fisk":
        a, b = par
        return cdf(FamilySpec.gb2(a, b, 1.0 + k / a, 1.0 - k / a), x)
    # weibull: generalized gamma with shape 1 + k/a
    a, b = par
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("incomplete_moment_cdf requires x >= 0")
    out = inc_gamma_ratio((x / b) ** a, 1.0 + k / a)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


# above this estimated relative error on the hypergeometric sums the
# series value is considered unusable and callers should fall back to
# Monte Carlo
_GINI_SERIES_MAX_ERR = 1e-5


def gini_closed(spec, ctl=None):
    """Closed-form Gini index; the GB2 case sums two 3F2 series.

    Raises NonConvergenceError when the GB2 series cannot reach a usable
    accuracy (slow convergence near the existence boundary); the caller
    should then fall back to Monte Carlo.
    """
    fam, par = spec.family, spec.params
    if fam != "gb2":
        if lorenz_exists_margin(spec) <= 0.0 and fam != "weibull":
            raise ExistenceError(
                f"Gini undefined for {spec.family}{spec.params}: mean does not exist"
            )
        if fam == "b2":
            _, p, q = par
            g = 2.0 * math.exp(_ln_beta(2.0 * p, 2.0 * q - 1.0) - 2.0 * _ln_beta(p, q)) / p
        elif fam == "sm":
            a, _, q = par
            g = 1.0 - math.exp(
                ln_gamma(q) + ln_gamma(2.0 * q - 1.0 / a)
                - ln_gamma(q - 1.0 / a) - ln_gamma(2.0 * q)
            )
        elif fam == "dagum":
            a, _, p = par
            g = math.exp(
                ln_gamma(p) + ln_gamma(2.0 * p + 1.0 / a)
                - ln_gamma(2.0 * p) - ln_gamma(p + 1.0 / a)
            ) - 1.0
        elif fam == "lognormal":
            _, sigma = par
            g = 2.0 * std_normal_cdf(sigma / math.sqrt(2.0)) - 1.0
        elif fam == "fisk":
            a, _ = par
            g = 1.0 / a
        else:  # weibull; finite for every a > 0 despite the usual a > 1 statement
            a, _ = par
            g = 1.0 - 2.0 ** (-1.0 / a)
        return GiniValue(min(max(g, 0.0), 1.0), "closed_form")

    a, _, p, q = par
    if q <= 1.0 / a:
        raise ExistenceError(
            f"Gini undefined for gb2{par}: requires q > 1/a"
        )
    if ctl is None:
        ctl = SeriesControl()
    j1 = hyp3f2_unit(1.0, p + q, 2.0 * p + 1.0 / a, p + 1.0, 2.0 * (p + q), ctl)
    j2 = hyp3f2_unit(
        1.0, p + q, 2.0 * p + 1.0 / a, p + 1.0 / a + 1.0, 2.0 * (p + q), ctl
    )
    for r in (j1, j2):
        if not r.converged and r.est_rel_error > _GINI_SERIES_MAX_ERR:
            raise NonConvergenceError(
                "3F2 series too slow for gb2 Gini "
                f"(margin q - 1/a = {q - 1.0/a:.4g}); use Monte Carlo instead"
            )
    ln_pref = (
        _ln_beta(2.0 * q - 1.0 / a, 2.0 * p + 1.0 / a)
        - _ln_beta(p, q)
        - _ln_beta(p + 1.0 / a, q - 1.0 / a)
    )
    g = math.exp(ln_pref) * (j1.value / p - j2.value / (p + 1.0 / a))
    return GiniValue(min(max(g, 0.0), 1.0), "hypergeometric")
