"""Grouped income data: validated Lorenz ordinates and the nonparametric
lower-bound Gini."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ValidationError

__all__ = ["GroupedDataset", "from_shares", "lower_bound_gini", "empirical_lorenz"]


@dataclass(frozen=True)
class GroupedDataset:
    """Cumulative population/income share pairs (u_j, s_j).

    ``u`` and ``s`` are strictly increasing with last element 1; ``mean``
    and ``survey_gini`` are optional extra survey statistics.
    """

    id: str
    u: np.ndarray
    s: np.ndarray
    mean: Optional[float] = None
    survey_gini: Optional[float] = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        s = np.asarray(self.s, dtype=float)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "s", s)
        problems = []
        if u.ndim != 1 or s.ndim != 1 or len(u) != len(s):
            problems.append("u and s must be 1-d vectors of equal length")
        else:
            if len(u) < 2:
                problems.append("at least 2 groups required")
            if np.any(u <= 0.0) or np.any(np.diff(u) <= 0.0):
                problems.append("u must be strictly increasing with u_1 > 0")
            if len(u) and abs(u[-1] - 1.0) > 1e-9:
                problems.append("last population proportion must equal 1")
            # weakly increasing: empty groups (zero income share) are legal
            if np.any(s < 0.0) or np.any(np.diff(s) < 0.0):
                problems.append("s must be non-decreasing with s_1 >= 0")
            if len(s) and abs(s[-1] - 1.0) > 1e-9:
                problems.append("last income share must equal 1")
            if np.any(s > u + 1e-12):
                problems.append("income shares must satisfy s_j <= u_j")
        if self.mean is not None and self.mean <= 0.0:
            problems.append("mean must be positive")
        if self.survey_gini is not None and not 0.0 <= self.survey_gini < 1.0:
            problems.append("survey_gini must lie in [0, 1)")
        if problems:
            raise ValidationError(
                f"invalid grouped dataset {self.id!r}: " + "; ".join(problems)
            )
        u.flags.writeable = False
        s.flags.writeable = False

    @property
    def n_groups(self):
        return len(self.u)

    def group_shares(self):
        """Non-cumulative income shares c_j."""
        return np.diff(self.s, prepend=0.0)

    def group_proportions(self):
        """Non-cumulative population proportions p_j."""
        return np.diff(self.u, prepend=0.0)


def from_shares(shares, proportions=None, id="dataset", mean=None, survey_gini=None):
    """Build a GroupedDataset from non-cumulative income shares.

    ``proportions`` defaults to equal-population groups.  Shares must sum
    to 1 within 1e-6 and are renormalized to exactly 1.
    """
    shares = np.asarray(shares, dtype=float)
    total = shares.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValidationError(
            f"invalid grouped dataset {id!r}: shares sum to {total:.8f}, not 1"
        )
    shares = shares / total
    if proportions is None:
        proportions = np.full(len(shares), 1.0 / len(shares))
    else:
        proportions = np.asarray(proportions, dtype=float)
        proportions = proportions / proportions.sum()
    s = np.cumsum(shares)
    u = np.cumsum(proportions)
    s[-1] = 1.0
    u[-1] = 1.0
    return GroupedDataset(id=id, u=u, s=s, mean=mean, survey_gini=survey_gini)


def lower_bound_gini(d):
    """Gini of the linearly interpolated Lorenz curve.

    Equals 1 minus twice the trapezoid area under the chords; 0 exactly
    when s = u.
    """
    u = np.concatenate(([0.0], d.u))
    s = np.concatenate(([0.0], d.s))
    g = float(np.sum(np.diff(s) * (u[1:] + u[:-1])) - 1.0)
    return max(g, 0.0)


def empirical_lorenz(d, u):
    """Piecewise-linear Lorenz curve through (0, 0) and every (u_j, s_j)."""
    u = np.asarray(u, dtype=float)
    knots_u = np.concatenate(([0.0], d.u))
    knots_s = np.concatenate(([0.0], d.s))
    out = np.interp(u, knots_u, knots_s)
    return float(out) if out.ndim == 0 else out
