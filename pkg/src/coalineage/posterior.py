"""Conditional laws for enlarging a sample with known ancestral statistics.

Given that an m-sample shows y surviving ancestral lines (or y lines with
a single descendant), these functions give the law of the corresponding
statistic once m' further individuals are drawn, the posterior over the
population's own line count, and the one-extra-draw discovery
probabilities.  Each predictive law has two routes: a mixture over the
line-count posterior, whose weights are all positive (the production
path), and the direct closed form, kept as a cross-check because its
alternating sums cancel harder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ancestral import (
    ModelParams,
    _ancestral_values,
    lineage_pmf,
    r_freq_pmf,
    r_pmf,
    rho,
    singleton_lineage_pmf,
)
from .errors import NumericalConditioningError
from .numerics import (
    ENTRY_NOISE_BUDGET,
    LOG_NOISE_SHIFT,
    log_binomial,
    log_rising_factorial,
    signed_log_sum,
)
from .pmf import Pmf

__all__ = [
    "MARGINAL_FLOOR",
    "PredictiveQuery",
    "cond_r_pmf",
    "cond_r_freq_pmf",
    "factorial_moment_r",
    "factorial_moment_r_freq",
    "n_posterior",
    "predictive_lineage_pmf",
    "predictive_singleton_pmf",
    "gt_new_lineage_prob",
    "gt_singleton_prob",
]

# conditioning events with less marginal mass than this are refused:
# renormalizing them would promote numerical noise to a law
MARGINAL_FLOOR = 1e-12


def _require_count(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class PredictiveQuery:
    """An observed statistic of an m-sample plus the planned enlargement.

    y is the observed value: the surviving line count for the total-count
    functions, the single-descendant line count for the singleton ones.
    m = 0 with y = 0 describes a fresh sample with nothing observed yet.
    """

    m: int
    m_prime: int
    y: int
    params: ModelParams

    def __post_init__(self):
        m = _require_count(self.m, "m")
        m_prime = _require_count(self.m_prime, "m_prime")
        y = _require_count(self.y, "y")
        if m < 0:
            raise ValueError(f"m must be >= 0, got {m}")
        if m_prime < 0:
            raise ValueError(f"m_prime must be >= 0, got {m_prime}")
        if not 0 <= y <= m:
            raise ValueError(f"y must be in [0, m] = [0, {m}], got {y}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "m_prime", m_prime)
        object.__setattr__(self, "y", y)


def _validate_conditional_args(n, m, m_prime, y, theta, *, y_cap):
    if n < 0 or m < 0 or m_prime < 0:
        raise ValueError("n, m, and m_prime must be nonnegative")
    if not (theta > 0):
        raise ValueError(f"theta must be positive, got {theta}")
    if not 0 <= y <= y_cap:
        raise ValueError(f"y = {y} is outside the feasible range [0, {y_cap}]")


def cond_r_pmf(n: int, m: int, m_prime: int, y: int, theta: float) -> Pmf:
    """Law of the re-observed type count after m' extra draws, given y now.

    n old types seeded the urn and y of them appeared among the first m
    draws.  The count never drops and can rise to at most min(n, y + m'),
    one new old type per extra draw.  Every factor is positive, so the
    entries are exponentiated directly.
    """
    _validate_conditional_args(n, m, m_prime, y, theta, y_cap=min(n, m))
    hi = min(n, y + m_prime)
    log_denom = log_rising_factorial(theta + n + m, m_prime)
    probs = np.empty(hi - y + 1)
    for x in range(y, hi + 1):
        d = x - y
        probs[d] = math.exp(
            math.lgamma(d + 1)
            + log_binomial(n - y, d)
            + log_binomial(m_prime, d)
            + log_rising_factorial(theta + m + x, m_prime - d)
            - log_denom
        )
    return Pmf.from_floats(probs, support_offset=y, context="enlarged type count")


def cond_r_freq_pmf(l: int, n: int, m: int, m_prime: int, y: int, theta: float) -> Pmf:
    """Law of how many frequency-l types gain a copy among m' extra draws.

    y of the n old types sit at frequency l after m draws; x counts the
    ones that at least one extra draw lands on, so the support runs
    0..min(y, m').
    """
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    _validate_conditional_args(n, m, m_prime, y, theta, y_cap=min(n, m // l))
    hi = min(y, m_prime)
    log_denom = log_rising_factorial(theta + n + m, m_prime)
    entries = []
    for x in range(hi + 1):
        log_prefix = log_binomial(y, x) - log_denom
        log_terms = []
        signs = []
        for i in range(y - x, y + 1):
            signs.append(1.0 if (i - (y - x)) % 2 == 0 else -1.0)
            log_terms.append(
                log_prefix
                + log_binomial(x, y - i)
                + log_rising_factorial(theta + n + m - i * (1 + l), m_prime)
            )
        entries.append(signed_log_sum(log_terms, signs))
    return Pmf.from_signed_sums(entries, support_offset=0, context="hit type count")


def factorial_moment_r(r: int, n: int, m: int, m_prime: int, y: int, theta: float) -> float:
    """Falling-factorial moment E[(X)_[r]] of the enlarged type count."""
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    _validate_conditional_args(n, m, m_prime, y, theta, y_cap=min(n, m))
    if r == 0:
        return 1.0
    if r > n:
        # the count is bounded by the n seed types
        return 0.0
    log_denom = log_rising_factorial(theta + n + m, m_prime)
    log_terms = []
    signs = []
    for s in range(min(r, n - y) + 1):
        signs.append(1.0 if s % 2 == 0 else -1.0)
        log_terms.append(
            math.lgamma(r + 1)
            + log_binomial(n - s, r - s)
            + log_binomial(n - y, s)
            + log_rising_factorial(theta + n + m - s, m_prime)
            - log_denom
        )
    total, _, _ = signed_log_sum(log_terms, signs)
    return total.value


def factorial_moment_r_freq(
    r: int, l: int, n: int, m: int, m_prime: int, y: int, theta: float
) -> float:
    """Falling-factorial moment E[(X)_[r]] of the hit frequency-l type count."""
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    _validate_conditional_args(n, m, m_prime, y, theta, y_cap=min(n, m // l))
    if r == 0:
        return 1.0
    if r > y:
        return 0.0
    log_denom = log_rising_factorial(theta + n + m, m_prime)
    log_terms = []
    signs = []
    for s in range(r + 1):
        signs.append(1.0 if s % 2 == 0 else -1.0)
        log_terms.append(
            log_binomial(r, s)
            + math.lgamma(s + 1)
            + log_binomial(y, s)
            + math.lgamma(y - s + 1)
            - math.lgamma(y - r + 1)
            + log_rising_factorial(theta + n + m - s * (1 + l), m_prime)
            - log_denom
        )
    total, _, _ = signed_log_sum(log_terms, signs)
    return total.value


def n_posterior(m: int, y: int, params: ModelParams, mode: str = "total") -> Pmf:
    """Posterior over the population's surviving line count n.

    Reweights the population line-count law by the likelihood of the
    observed statistic under each n: the re-observed type count for mode
    "total", the frequency-1 type count for mode "singleton".
    """
    if mode not in ("total", "singleton"):
        raise ValueError(f"mode must be 'total' or 'singleton', got {mode!r}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 0 <= y <= m:
        raise ValueError(f"y must be in [0, {m}], got {y}")
    values, _ = _ancestral_values(params, None)
    weights = np.zeros(len(values))
    for n, d_n in enumerate(values):
        if d_n == 0.0:
            continue
        if mode == "total":
            likelihood = r_pmf(n, m, params.theta).prob(y)
        else:
            likelihood = r_freq_pmf(1, n, m, params.theta).prob(y)
        weights[n] = d_n * likelihood
    marginal = float(weights.sum())
    if marginal < MARGINAL_FLOOR:
        raise NumericalConditioningError(
            f"conditioning event has negligible mass: the observed statistic "
            f"{y} has marginal probability ~ {marginal:.2e} at t = {params.t:g}"
        )
    return Pmf.from_floats(
        weights / marginal, support_offset=0, context="line count posterior"
    )


def _point_mass(at: int) -> Pmf:
    return Pmf.from_floats(np.array([1.0]), support_offset=at)


def predictive_lineage_pmf(query: PredictiveQuery, method: str = "mixture") -> Pmf:
    """Law of the enlarged sample's surviving line count given y now.

    The mixture route averages the enlarged type count law over the
    line-count posterior; the closed route rewrites the conditional as a
    ratio of the two unconditional line-count laws.  Both agree to
    rounding; the mixture is the default because its weights are
    positive.
    """
    if method not in ("mixture", "closed"):
        raise ValueError(f"method must be 'mixture' or 'closed', got {method!r}")
    m, m_prime, y, params = query.m, query.m_prime, query.y, query.params
    if m == 0:
        return lineage_pmf(m_prime, params)
    if m_prime == 0:
        return _point_mass(y)
    if params.t == 0.0:
        # every line is still alive at time zero
        if y != m:
            raise NumericalConditioningError(
                f"conditioning event has negligible mass: at t = 0 the line "
                f"count of an m = {m} sample is surely {m}, not {y}"
            )
        return _point_mass(m + m_prime)
    if method == "mixture":
        posterior = n_posterior(m, y, params, mode="total")
        probs = np.zeros(m_prime + 1)
        for n, w in posterior.items():
            if w == 0.0:
                continue
            for x, p in cond_r_pmf(n, m, m_prime, y, params.theta).items():
                probs[x - y] += w * p
        return Pmf.from_floats(probs, support_offset=y, context="enlarged line count")
    base_prob = lineage_pmf(m, params).prob(y)
    if base_prob < MARGINAL_FLOOR:
        raise NumericalConditioningError(
            f"conditioning event has negligible mass: P[line count = {y}] "
            f"~ {base_prob:.2e}"
        )
    enlarged = lineage_pmf(m + m_prime, params)
    theta = params.theta
    log_common = (
        log_binomial(m, y)
        + log_rising_factorial(m + m_prime + theta, y)
        - log_rising_factorial(theta + m, y)
        - math.log(base_prob)
    )
    probs = np.empty(m_prime + 1)
    for x in range(y, y + m_prime + 1):
        log_ratio = (
            log_common
            + log_binomial(m_prime, x - y)
            + log_rising_factorial(theta + y, x - y)
            - log_binomial(m + m_prime, x)
            - log_rising_factorial(theta + m + y, x - y)
        )
        probs[x - y] = math.exp(log_ratio) * enlarged.prob(x)
    return Pmf.from_floats(probs, support_offset=y, context="enlarged line count")


def _singleton_series_sum(
    m: int,
    y: int,
    params: ModelParams,
    i_hi: int,
    extra_log_term,
) -> float:
    """Alternating series over (j, i, n) shared by the closed singleton routes.

    extra_log_term(n) supplies the route-specific log factor attached to
    each term.  The i range must extend past m far enough to cover the
    difference orders that factor keeps alive; the caller passes i_hi.
    """
    theta = params.theta
    log_terms = []
    signs = []
    for j in range(max(y, 1), m + 1):
        sign_j = 1.0 if (j - y) % 2 == 0 else -1.0
        log_j = log_binomial(j, y) + log_binomial(m, j)
        for i in range(j, i_hi + 1):
            r = rho(i, params)
            log_ji = log_j + r.log_magnitude - math.lgamma(i - j + 1)
            for n in range(j, i + 1):
                sign_n = 1.0 if n % 2 == 0 else -1.0
                signs.append(sign_j * float(r.sign) * sign_n)
                log_terms.append(
                    log_ji
                    + log_binomial(i - j, n - j)
                    + log_rising_factorial(theta + n - j, m - j)
                    + math.lgamma(theta + n + i - 1)
                    - math.lgamma(theta + n + m)
                    + extra_log_term(n)
                )
    total, ratio, log_peak = signed_log_sum(log_terms, signs)
    noise = 0.0 if log_peak == -math.inf else math.exp(min(log_peak - LOG_NOISE_SHIFT, 700.0))
    if noise > ENTRY_NOISE_BUDGET:
        raise NumericalConditioningError(
            f"closed singleton series lost all significant digits "
            f"(cancellation ratio {ratio:.2e}); use the mixture route",
            cancellation_ratio=ratio,
        )
    return total.value


def predictive_singleton_pmf(query: PredictiveQuery, method: str = "mixture") -> Pmf:
    """Law of how many single-descendant lines gain copies from m' extra draws.

    Given y such lines in the m-sample, x counts the ones that stop being
    singletons because a new draw lands on them; support 0..min(y, m').
    The closed route evaluates the direct alternating representation,
    whose line-count series runs to m + m': the extra-draw factor keeps
    the last m' difference orders alive past the marginal's cutoff at m.
    """
    if method not in ("mixture", "closed"):
        raise ValueError(f"method must be 'mixture' or 'closed', got {method!r}")
    m, m_prime, y, params = query.m, query.m_prime, query.y, query.params
    if m == 0 or m_prime == 0:
        # nothing observed, or nothing further drawn: no singleton is hit
        return _point_mass(0)
    theta = params.theta
    if method == "mixture":
        posterior = n_posterior(m, y, params, mode="singleton")
        probs = np.zeros(min(y, m_prime) + 1)
        for n, w in posterior.items():
            if w == 0.0:
                continue
            for x, p in cond_r_freq_pmf(1, n, m, m_prime, y, theta).items():
                probs[x] += w * p
        return Pmf.from_floats(probs, support_offset=0, context="hit singleton count")
    marginal = singleton_lineage_pmf(m, params).prob(y)
    if marginal < MARGINAL_FLOOR:
        raise NumericalConditioningError(
            f"conditioning event has negligible mass: P[singleton count = {y}] "
            f"~ {marginal:.2e}"
        )
    inner = np.zeros(y + 1)
    for k in range(y + 1):
        def draw_factor(n: int, k: int = k) -> float:
            return log_rising_factorial(theta + n + m - 2 * k, m_prime) - log_rising_factorial(
                theta + n + m, m_prime
            )

        corner = 0.0
        if y == 0:
            # the j = i = n = 0 corner of the line-count expansion
            corner = math.exp(
                log_rising_factorial(theta + m - 2 * k, m_prime)
                - log_rising_factorial(theta + m, m_prime)
            )
        inner[k] = corner + _singleton_series_sum(m, y, params, m + m_prime, draw_factor)
    probs = np.zeros(min(y, m_prime) + 1)
    for x in range(len(probs)):
        sign_x = 1.0 if x % 2 == 0 else -1.0
        parts = [
            (1.0 if (y - k) % 2 == 0 else -1.0) * math.comb(x, y - k) * inner[k]
            for k in range(max(0, y - x), y + 1)
        ]
        probs[x] = sign_x * math.comb(y, x) * math.fsum(parts) / marginal
    return Pmf.from_floats(probs, support_offset=0, context="hit singleton count")


def gt_new_lineage_prob(m: int, y: int, params: ModelParams) -> float:
    """Probability that one extra draw starts a previously unseen line.

    A ratio of neighbouring line-count laws; equals the mass the m' = 1
    predictive law puts on y + 1.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 0 <= y <= m:
        raise ValueError(f"y must be in [0, {m}], got {y}")
    p_y = lineage_pmf(m, params).prob(y)
    if p_y < MARGINAL_FLOOR:
        raise NumericalConditioningError(
            f"conditioning event has negligible mass: P[line count = {y}] "
            f"~ {p_y:.2e}"
        )
    p_up = lineage_pmf(m + 1, params).prob(y + 1)
    theta = params.theta
    return (y + 1) * (theta + y) * p_up / ((m + 1) * (theta + m) * p_y)


def gt_singleton_prob(m: int, y: int, params: ModelParams, method: str = "mixture") -> float:
    """Probability that one extra draw lands on a single-descendant line.

    Equals the mean of the m' = 1 singleton predictive law.  The mixture
    route averages the one-draw hit chance 2y/(theta + n + m) over the
    line-count posterior; the closed route evaluates the direct
    alternating representation, whose line-count series runs to m + 1.
    """
    if method not in ("mixture", "closed"):
        raise ValueError(f"method must be 'mixture' or 'closed', got {method!r}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 0 <= y <= m:
        raise ValueError(f"y must be in [0, {m}], got {y}")
    if y == 0:
        return 0.0
    theta = params.theta
    if method == "mixture":
        posterior = n_posterior(m, y, params, mode="singleton")
        return math.fsum(w * 2 * y / (theta + n + m) for n, w in posterior.items())
    marginal = singleton_lineage_pmf(m, params).prob(y)
    if marginal < MARGINAL_FLOOR:
        raise NumericalConditioningError(
            f"conditioning event has negligible mass: P[singleton count = {y}] "
            f"~ {marginal:.2e}"
        )
    total = _singleton_series_sum(
        m, y, params, m + 1, lambda n: -math.log(theta + n + m)
    )
    return 2.0 * y * total / marginal
