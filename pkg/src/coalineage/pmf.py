"""Finite probability mass functions with conditioning diagnostics.

A Pmf here is a contiguous block of probabilities starting at
``support_offset``, plus bookkeeping about how trustworthy the numbers
are: the mass defect observed before any repair, and whether the entries
were renormalized.  Assembly from signed log-space sums applies the
package-wide reliability gates (cancellation ratio, clipping floor, mass
tolerance) in one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalConditioningError
from .numerics import (
    CLIP_FLOOR,
    ENTRY_NOISE_BUDGET,
    LOG_NOISE_SHIFT,
    SignedLogValue,
)

__all__ = ["Pmf", "MASS_TOLERANCE"]

MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Pmf:
    """Probabilities over the integers support_offset, support_offset+1, ...

    mass_defect is |1 - total mass| measured before repair; for truncated
    distributions it is the discarded tail.  renormalized records whether
    the stored probs were rescaled to unit mass.
    """

    support_offset: int
    probs: np.ndarray
    mass_defect: float
    renormalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))

    @property
    def support(self) -> range:
        return range(self.support_offset, self.support_offset + len(self.probs))

    def prob(self, x: int) -> float:
        i = x - self.support_offset
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    def mean(self) -> float:
        xs = np.arange(self.support_offset, self.support_offset + len(self.probs))
        return float(xs @ self.probs)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def quantile(self, p: float) -> int:
        """Smallest x in the support with P[X <= x] >= p."""
        c = self.cdf()
        idx = int(np.searchsorted(c, p - 1e-12))
        idx = min(idx, len(self.probs) - 1)
        return self.support_offset + idx

    def tv_distance(self, other: "Pmf") -> float:
        lo = min(self.support_offset, other.support_offset)
        hi = max(self.support_offset + len(self.probs),
                 other.support_offset + len(other.probs))
        a = np.zeros(hi - lo)
        b = np.zeros(hi - lo)
        a[self.support_offset - lo : self.support_offset - lo + len(self.probs)] = self.probs
        b[other.support_offset - lo : other.support_offset - lo + len(other.probs)] = other.probs
        return 0.5 * float(np.abs(a - b).sum())

    def items(self):
        for i, p in enumerate(self.probs):
            yield self.support_offset + i, float(p)

    @classmethod
    def from_signed_sums(
        cls,
        entries: list[tuple[SignedLogValue, float, float]],
        support_offset: int = 0,
        renormalize: bool = True,
        context: str = "pmf",
    ) -> "Pmf":
        """Assemble a Pmf from per-entry (total, cancellation_ratio, log_peak_term).

        Applies the reliability policy: each entry carries absolute
        rounding noise on the order of its peak term times accumulated
        ulps, and any entry whose noise exceeds the package budget (1e-8,
        which for probability-sized results means the cancellation ratio
        collapsed far below 1e-8) fails the whole pmf.  Residual
        negatives within the larger of the clipping floor and the entry's
        own noise scale are clipped to zero; larger negatives are
        failures.  With renormalize=True the surviving entries are scaled
        to unit mass and the pre-repair defect is recorded; truncated
        laws pass renormalize=False to keep the tail defect visible.
        """
        values = np.empty(len(entries))
        for i, (slv, ratio, log_peak) in enumerate(entries):
            noise = 0.0 if log_peak == -math.inf else math.exp(min(log_peak - LOG_NOISE_SHIFT, 700.0))
            if noise > ENTRY_NOISE_BUDGET:
                raise NumericalConditioningError(
                    f"{context}: entry at {support_offset + i} lost all significant "
                    f"digits (cancellation ratio {ratio:.2e}, noise scale {noise:.2e}); "
                    "use the simulation path for this parameter regime",
                    cancellation_ratio=ratio,
                )
            v = slv.value
            if v < 0.0:
                if v < -max(CLIP_FLOOR, noise):
                    raise NumericalConditioningError(
                        f"{context}: entry at {support_offset + i} is negative beyond "
                        f"the clipping floor ({v:.3e})",
                        cancellation_ratio=ratio,
                    )
                v = 0.0
            values[i] = v
        total = float(values.sum())
        defect = abs(1.0 - total)
        if defect > MASS_TOLERANCE:
            raise NumericalConditioningError(
                f"{context}: mass defect {defect:.3e} exceeds {MASS_TOLERANCE:.0e}"
            )
        if renormalize and total > 0.0:
            values = values / total
            return cls(support_offset, values, defect, renormalized=defect > 1e-15)
        return cls(support_offset, values, defect, renormalized=False)

    @classmethod
    def from_floats(
        cls,
        probs,
        support_offset: int = 0,
        renormalize: bool = True,
        context: str = "pmf",
    ) -> "Pmf":
        """Assemble from plain floats with the same mass checks, no per-entry gates."""
        values = np.asarray(probs, dtype=float).copy()
        neg = values < 0.0
        if np.any(values < -CLIP_FLOOR):
            raise NumericalConditioningError(
                f"{context}: negative probability beyond the clipping floor"
            )
        values[neg] = 0.0
        total = float(values.sum())
        defect = abs(1.0 - total)
        if defect > MASS_TOLERANCE:
            raise NumericalConditioningError(
                f"{context}: mass defect {defect:.3e} exceeds {MASS_TOLERANCE:.0e}"
            )
        if renormalize and total > 0.0:
            values = values / total
            return cls(support_offset, values, defect, renormalized=defect > 1e-15)
        return cls(support_offset, values, defect, renormalized=False)
