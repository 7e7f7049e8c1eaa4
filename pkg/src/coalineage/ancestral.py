"""Ancestral line counting under the coalescent with mutation.

The number of ancestral lines of a large population, run back for time t
with coalescence and killing by mutation, is a pure death process whose
level-n exit rate is n(n-1+theta)/2.  Starting from infinity it reaches
a proper law (d_n below); a sample of m individuals sees the binomial
projection of that law.  Both are alternating series, summed here with
the compensated machinery from numerics and refused when cancellation
eats the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import NumericalConditioningError
from .numerics import (
    CLIP_FLOOR,
    ENTRY_NOISE_BUDGET,
    LOG_NOISE_SHIFT,
    SignedLogValue,
    compensated_signed_sum,
    log_binomial,
    log_rising_factorial,
    signed_log_sum,
)
from .pmf import Pmf

__all__ = [
    "ModelParams",
    "death_rate",
    "rho",
    "ancestral_pmf",
    "lineage_pmf",
    "lineage_mean",
    "tmrca_cdf",
    "r_pmf",
    "r_freq_pmf",
    "singleton_lineage_pmf",
]

TAIL_MASS = 1e-10
TAIL_ENTRY = 1e-14
MAX_ANCESTRAL_N = 5000


@dataclass(frozen=True)
class ModelParams:
    """Mutation rate theta and backward time t (coalescent units)."""

    theta: float
    t: float

    def __post_init__(self):
        if not (self.theta > 0.0):
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not (self.t >= 0.0):
            raise ValueError(f"t must be nonnegative, got {self.t}")


def death_rate(n: int, theta: float) -> float:
    """Exit rate n(n-1+theta)/2 of the ancestral death process at level n."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return n * (n - 1 + theta) / 2.0


def rho(i: int, params: ModelParams) -> SignedLogValue:
    """Signed coefficient (-1)^i (2i-1+theta) exp(-t i(i-1+theta)/2), i >= 1."""
    if i < 1:
        raise ValueError(f"rho is defined for i >= 1, got {i}")
    theta = params.theta
    log_mag = math.log(2 * i - 1 + theta) - death_rate(i, theta) * params.t
    return SignedLogValue(-1 if i % 2 else 1, log_mag)


def _ancestral_entry(n: int, params: ModelParams) -> float:
    """d_n(t): series over i >= max(n,1), plus a unit boundary term at n=0."""
    theta = params.theta

    def terms():
        if n == 0:
            # the i=0 term of the expansion is identically 1
            yield SignedLogValue(1, 0.0)
        i = max(n, 1)
        while True:
            r = rho(i, params)
            log_mag = (
                r.log_magnitude
                + float(gammaln(i + 1) - gammaln(n + 1) - gammaln(i - n + 1))
                + float(gammaln(n + theta + i - 1) - gammaln(n + theta))
                - float(gammaln(i + 1))
            )
            sign = r.sign * (1 if n % 2 == 0 else -1)
            yield SignedLogValue(sign, log_mag)
            i += 1

    res = compensated_signed_sum(terms())
    if not res.converged:
        raise NumericalConditioningError(
            f"ancestral series for n={n} did not converge within the term budget"
        )
    # peak term magnitude is |value| / ratio; its scaled ulps are the noise
    noise = 0.0
    if res.cancellation_ratio > 0.0:
        noise = abs(res.value) / res.cancellation_ratio * math.exp(-LOG_NOISE_SHIFT)
    if noise > ENTRY_NOISE_BUDGET:
        raise NumericalConditioningError(
            f"ancestral series for n={n} lost all significant digits "
            f"(cancellation ratio {res.cancellation_ratio:.2e})",
            cancellation_ratio=res.cancellation_ratio,
        )
    if res.value < -max(CLIP_FLOOR, noise):
        _raise_negative(n, res.value)
    return max(res.value, 0.0)


def _raise_negative(n: int, value: float):
    raise NumericalConditioningError(
        f"ancestral entry d_{n} is negative beyond the clipping floor ({value:.3e})"
    )


def _default_n_start(theta: float) -> int:
    return math.ceil(theta + 2) + 10


def _tail_closed(values: list[float]) -> bool:
    """True when the entries past the mode bound the remaining mass.

    The decay factor e^{-n(n-1+theta)t/2} makes entry ratios shrink with
    n, so once entries are falling, the last ratio bounds the true tail
    by a geometric series.  Judging the tail this way, rather than by
    1 - fsum(values), keeps per-entry rounding noise out of the picture:
    that noise is a mass defect, and the pmf constructor budgets it.
    """
    last, prev = values[-1], values[-2]
    if last == 0.0:
        return True
    if last >= TAIL_ENTRY or last >= prev:
        return False
    ratio = last / prev
    return last * ratio / (1.0 - ratio) < TAIL_MASS


@lru_cache(maxsize=128)
def _ancestral_values(params: ModelParams, n_max: int | None) -> tuple[np.ndarray, float]:
    """Vector (d_0..d_N, tail mass).  n_max=None grows N adaptively."""
    if params.t == 0.0:
        raise ValueError("the ancestral line count starts at infinity; t must be > 0")
    if n_max is None:
        cap = _default_n_start(params.theta)
        values = [_ancestral_entry(n, params) for n in range(cap + 1)]
        while not _tail_closed(values):
            if len(values) > MAX_ANCESTRAL_N:
                raise NumericalConditioningError(
                    f"ancestral support did not close below n={MAX_ANCESTRAL_N}; "
                    "t may be too small for the series representation"
                )
            new_cap = math.ceil(len(values) * 1.5)
            values.extend(
                _ancestral_entry(n, params) for n in range(len(values), new_cap)
            )
    else:
        if n_max < 0:
            raise ValueError(f"n_max must be nonnegative, got {n_max}")
        values = [_ancestral_entry(n, params) for n in range(n_max + 1)]
    tail = 1.0 - math.fsum(values)
    return np.array(values), tail


def ancestral_pmf(n_max: int | None, params: ModelParams) -> Pmf:
    """Law of the number of surviving ancestral lines of the whole population.

    Args:
        n_max: truncation level.  None grows the support until the
            entries decay past 1e-14 with a geometric tail bound below
            1e-10; an explicit value must cover all but 1e-6 of the mass
            or the call fails.
        params: theta and t, with t > 0 (at t=0 the count is infinite).

    Returns:
        Pmf over n = 0..n_max with the discarded tail recorded as
        mass_defect (not renormalized away).
    """
    values, tail = _ancestral_values(params, n_max)
    return Pmf.from_floats(
        values, 0, renormalize=False, context="ancestral line count"
    )


def _log_binomial_row(n: int, ks: np.ndarray) -> np.ndarray:
    return gammaln(n + 1) - gammaln(ks + 1) - gammaln(n - ks + 1)


def _lineage_entries(m: int, params: ModelParams):
    """Signed-sum diagnostics for P[sample ancestral count = x], x=0..m."""
    theta = params.theta
    t = params.t
    entries = []
    for x in range(m + 1):
        lo = max(x, 1)
        i = np.arange(lo, m + 1, dtype=float)
        log_terms = (
            np.log(2 * i - 1 + theta)
            - i * (i - 1 + theta) / 2.0 * t
            + _log_binomial_row(m, i)
            + gammaln(i + 1) - gammaln(x + 1) - gammaln(i - x + 1)
            + gammaln(x + theta + i - 1) - gammaln(x + theta)
            - (gammaln(theta + m + i) - gammaln(theta + m))
        )
        signs = np.where((i.astype(int) + x) % 2 == 0, 1.0, -1.0)
        if x == 0:
            # i=0 term of the expansion is identically 1
            log_terms = np.concatenate(([0.0], log_terms))
            signs = np.concatenate(([1.0], signs))
        entries.append(signed_log_sum(log_terms, signs))
    return entries


def _min_reliable_t(m: int, params: ModelParams) -> float | None:
    t = params.t
    for _ in range(60):
        t *= 2.0
        try:
            probe = ModelParams(params.theta, t)
            Pmf.from_signed_sums(_lineage_entries(m, probe), 0, context="probe")
            return t
        except NumericalConditioningError:
            continue
    return None


@lru_cache(maxsize=128)
def lineage_pmf(m: int, params: ModelParams) -> Pmf:
    """Law of the number of ancestral lines of an m-sample at time t.

    Args:
        m: sample size, >= 0.
        params: theta and t.  t=0 returns the point mass at m.

    Returns:
        Pmf over x = 0..m.

    Raises:
        NumericalConditioningError: when the alternating sum cancels
            below the reliability threshold (small t, large m); the error
            carries the smallest t, to factor-of-two resolution, at which
            this m becomes computable, and the simulation path remains
            available below that.
    """
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    if params.t == 0.0:
        probs = np.zeros(m + 1)
        probs[m] = 1.0
        return Pmf(0, probs, 0.0)
    try:
        return Pmf.from_signed_sums(
            _lineage_entries(m, params), 0, context="sample line count"
        )
    except NumericalConditioningError as err:
        raise NumericalConditioningError(
            f"sample line count law for m={m}, t={params.t:g} is numerically "
            "unreliable; " + str(err),
            min_reliable_t=_min_reliable_t(m, params),
            cancellation_ratio=err.cancellation_ratio,
        ) from err


def lineage_mean(m: int, params: ModelParams) -> float:
    """Expected number of ancestral lines of an m-sample at time t."""
    return lineage_pmf(m, params).mean()


def tmrca_cdf(m: int, r: int, params: ModelParams) -> float:
    """P[the m-sample has at most r ancestral lines by time t].

    As a function of t this is the distribution function of the time at
    which the sample's line count first drops to r.
    """
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    if r >= m:
        return 1.0
    pmf = lineage_pmf(m, params)
    return float(pmf.probs[: r + 1].sum())


@lru_cache(maxsize=256)
def r_pmf(n: int, m: int, theta: float) -> Pmf:
    """Distinct old types re-observed: n seed types, m draws.

    P[x of the n types appear in the sample] with each old type carrying
    unit weight against innovation mass theta.  Closed form is a product
    of positive factors, so no cancellation control is needed.
    """
    if n < 0 or m < 0:
        raise ValueError("n and m must be nonnegative")
    if not (theta > 0):
        raise ValueError(f"theta must be positive, got {theta}")
    hi = min(n, m)
    xs = np.arange(0, hi + 1, dtype=float)
    log_probs = (
        gammaln(xs + 1)
        + _log_binomial_row(n, xs)
        + _log_binomial_row(m, xs)
        + gammaln(theta + m) - gammaln(theta + xs)
        - (gammaln(theta + n + m) - gammaln(theta + n))
    )
    return Pmf.from_floats(
        np.exp(log_probs), 0, renormalize=True, context="re-observed type count"
    )


@lru_cache(maxsize=256)
def r_freq_pmf(l: int, n: int, m: int, theta: float) -> Pmf:
    """Old types observed exactly l times: n seed types, m draws.

    Alternating sum over how many of the n types are forced to frequency
    l; runs through the signed accumulator with the usual gates.
    """
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    if n < 0 or m < 0:
        raise ValueError("n and m must be nonnegative")
    if not (theta > 0):
        raise ValueError(f"theta must be positive, got {theta}")
    hi = min(n, m // l)
    log_m_fact = float(gammaln(m + 1))
    log_norm = float(gammaln(theta + n + m) - gammaln(theta + n))
    entries = []
    for x in range(hi + 1):
        i = np.arange(x, hi + 1, dtype=float)
        log_terms = (
            log_m_fact
            - log_norm
            + _log_binomial_row_float(i, x)
            + _log_binomial_row(n, i)
            + gammaln(theta + n - i + m - i * l) - gammaln(theta + n - i)
            - gammaln(m - i * l + 1)
        )
        signs = np.where((i.astype(int) - x) % 2 == 0, 1.0, -1.0)
        entries.append(signed_log_sum(log_terms, signs))
    return Pmf.from_signed_sums(entries, 0, context="frequency-level type count")


def _log_binomial_row_float(ns: np.ndarray, k: int) -> np.ndarray:
    return gammaln(ns + 1) - gammaln(k + 1) - gammaln(ns - k + 1)


def _singleton_closed_entries(m: int, params: ModelParams):
    """Direct alternating representation of the singleton ancestor law.

    Finite triple sum per entry, obtained by expanding the line-count
    series inside the mixture and swapping summation order; the series
    truncates exactly at i = m because higher coefficients are mth-order
    differences of lower-degree polynomials.  Valid for every theta > 0.
    """
    theta = params.theta
    entries = []
    for x in range(m + 1):
        log_terms = []
        signs = []
        if x == 0:
            # the boundary term of the line-count expansion is exactly 1
            log_terms.append(0.0)
            signs.append(1.0)
        for j in range(max(x, 1), m + 1):
            sign_j = 1.0 if (j - x) % 2 == 0 else -1.0
            log_j = log_binomial(j, x) + log_binomial(m, j)
            for i in range(j, m + 1):
                r = rho(i, params)
                log_ji = log_j + r.log_magnitude - gammaln(i - j + 1)
                for n in range(j, i + 1):
                    sign_n = 1.0 if n % 2 == 0 else -1.0
                    signs.append(sign_j * float(r.sign) * sign_n)
                    log_terms.append(
                        log_ji
                        + log_binomial(i - j, n - j)
                        + log_rising_factorial(theta + n - j, m - j)
                        - log_rising_factorial(theta + n + i - 1, m - i + 1)
                    )
        entries.append(signed_log_sum(log_terms, signs))
    return entries


@lru_cache(maxsize=64)
def singleton_lineage_pmf(m: int, params: ModelParams, method: str = "mixture") -> Pmf:
    """Law of the number of ancestral lines with exactly one sample descendant.

    The default mixes the frequency-level law over the population's
    surviving line count: conditional on n lines surviving, the m sample
    units fall into the urn with n seed types, and a line is a singleton
    ancestor when its type is drawn exactly once.  method="closed"
    evaluates the direct alternating representation instead, an
    independent cross-check route.
    """
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    if method not in ("mixture", "closed"):
        raise ValueError(f"method must be 'mixture' or 'closed', got {method!r}")
    if params.t == 0.0:
        raise ValueError("the ancestral line count starts at infinity; t must be > 0")
    if method == "closed":
        return Pmf.from_signed_sums(
            _singleton_closed_entries(m, params), 0, context="singleton ancestor count"
        )
    weights, _ = _ancestral_values(params, None)
    probs = np.zeros(m + 1)
    for n, w in enumerate(weights):
        if w == 0.0:
            continue
        inner = r_freq_pmf(1, n, m, params.theta)
        probs[: len(inner.probs)] += w * inner.probs
    return Pmf.from_floats(
        probs, 0, renormalize=True, context="singleton ancestor count"
    )
