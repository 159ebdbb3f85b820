"""Closed-form tail and expectation bounds for sums of random tensors.

Each evaluator takes pre-computed ensemble statistics (total variance,
scale bound, dimension product, mean-eigenvalue levels) plus a threshold
and returns the analytic right-hand side as a raw number.  Values may
exceed 1; clamping is a presentation concern and never happens here.
Natural logarithms throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import spectral, tensor_core
from .tensor_core import DenseTensor


class DegenerateParamsError(ValueError):
    """Ensemble statistics make the requested bound meaningless."""


class ThetaRangeError(ValueError):
    """Threshold outside the validity range of the requested bound."""


@dataclass(frozen=True)
class BoundParams:
    """Hypothesis statistics shared by the bound evaluators.

    dim_product is the product of the row mode sizes (doubled mode sizes
    for rectangular results); sigma_sq and T follow each theorem's own
    definition; mu_max/mu_min are the extreme eigenvalues of the summed
    mean, and mu_bar_* their averaged versions normalized to [0, 1].
    """

    dim_product: int
    sigma_sq: float = 0.0
    T: float = 1.0
    n: int = 1
    mu_max: float = 0.0
    mu_min: float = 0.0
    mu_bar_max: float = 0.0
    mu_bar_min: float = 0.0
    mu_provenance: str = "exact"

    def __post_init__(self):
        if self.dim_product < 1:
            raise ValueError("dim_product must be a positive integer")
        if self.sigma_sq < 0:
            raise ValueError("sigma_sq must be nonnegative")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.mu_min > self.mu_max:
            raise ValueError("mu_min must not exceed mu_max")
        if not (0.0 <= self.mu_bar_min <= self.mu_bar_max <= 1.0):
            raise ValueError("mu_bar levels must satisfy 0 <= min <= max <= 1")


@dataclass(frozen=True)
class BoundValue:
    """A single evaluated bound, with enough context to reproduce it."""

    value: float
    theorem_tag: str
    theta: float
    params_echo: BoundParams | None = None
    t_opt: float | None = None

    def __post_init__(self):
        if not (self.value >= 0.0):
            raise ValueError(f"bound value must be nonnegative, got {self.value}")


def gaussian_series_bound(p: BoundParams, theta: float, two_sided: bool = False) -> BoundValue:
    """Sub-Gaussian series tail: dim * exp(-theta^2 / (2 sigma^2)).

    The two-sided flag doubles the value, matching the norm version of the
    one-sided largest-eigenvalue statement.
    """
    if theta < 0:
        raise ThetaRangeError(f"theta must be nonnegative, got {theta}")
    tag = "gaussian-series-norm" if two_sided else "gaussian-series"
    if theta == 0:
        val = float(p.dim_product)
    else:
        if p.sigma_sq == 0:
            raise DegenerateParamsError("sigma_sq = 0 with theta > 0: degenerate series")
        val = p.dim_product * math.exp(-theta * theta / (2.0 * p.sigma_sq))
    if two_sided:
        val *= 2.0
    return BoundValue(val, tag, theta, p)


def rectangular_series_params(coeffs: list[DenseTensor]) -> BoundParams:
    """Hypothesis statistics for a series of rectangular coefficients.

    sigma^2 is the larger of the spectral norms of the two Gram sums
    (coefficients times adjoints and adjoints times coefficients); the
    dimension product is over the mode-wise sums I_m + J_m.
    """
    if not coeffs:
        raise ValueError("need at least one coefficient")
    first = coeffs[0].shape
    if len(first.row_dims) != len(first.col_dims):
        raise tensor_core.ShapeMismatchError("coefficients need equal mode counts")
    left = None
    right = None
    for i, a in enumerate(coeffs):
        if a.shape != first:
            raise tensor_core.ShapeMismatchError(
                f"coefficient {i} has shape ({a.row_dims}, {a.col_dims}), "
                f"expected ({first.row_dims}, {first.col_dims})"
            )
        m = tensor_core.unfold(a)
        gl = m @ m.conj().T
        gr = m.conj().T @ m
        left = gl if left is None else left + gl
        right = gr if right is None else right + gr
    sigma_sq = max(
        float(np.linalg.eigvalsh(left)[-1]),
        float(np.linalg.eigvalsh(right)[-1]),
    )
    dim_product = math.prod(i + j for i, j in zip(first.row_dims, first.col_dims))
    t_scale = max(spectral.spectral_norm(a) for a in coeffs)
    return BoundParams(
        dim_product=dim_product,
        sigma_sq=sigma_sq,
        T=max(t_scale, np.finfo(float).tiny),
        n=len(coeffs),
    )


def nonuniform_gaussian_sigma(a: DenseTensor) -> float:
    """max over row slices and column slices of the squared slice norm.

    A row slice fixes the row multi-index and runs over all column modes;
    a column slice is the reverse.  Used for entrywise-masked Gaussian
    tensors, where this quantity is the series variance.
    """
    m = len(a.row_dims)
    if len(a.col_dims) != m:
        raise tensor_core.ShapeMismatchError("mask needs equal mode counts")
    sq = np.abs(a.entries) ** 2
    row_axes = tuple(range(m))
    col_axes = tuple(range(m, 2 * m))
    row_norms = sq.sum(axis=col_axes)
    col_norms = sq.sum(axis=row_axes)
    return float(max(row_norms.max(), col_norms.max()))


def expectation_norm_sandwich(p: BoundParams) -> tuple[float, float]:
    """(lower, upper) bracket on the expected squared norm of a series.

    Lower bound is the variance itself; upper is 2 sigma^2 log(2 e dim).
    """
    if p.sigma_sq == 0:
        return (0.0, 0.0)
    upper = 2.0 * p.sigma_sq * math.log(2.0 * math.e * p.dim_product)
    return (p.sigma_sq, upper)


def binary_divergence(a: float, b: float) -> float:
    """KL divergence between Bernoulli(a) and Bernoulli(b), natural log."""
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
        raise ValueError(f"arguments must lie strictly in (0, 1), got a={a}, b={b}")
    return a * math.log(a / b) + (1.0 - a) * math.log((1.0 - a) / (1.0 - b))


def _divergence_with_limits(theta: float, mu: float) -> float:
    # Continuous extension at the endpoints of [0, 1] in the first slot.
    if theta == 0.0:
        return -math.log(1.0 - mu)
    if theta == 1.0:
        return -math.log(mu)
    return binary_divergence(theta, mu)


def chernoff_i_upper(p: BoundParams, theta: float) -> BoundValue:
    """dim * exp(-n D(theta || mu_bar_max)) for mu_bar_max <= theta <= 1.

    Applies to sums of positive semidefinite contractions (scale bound 1);
    theta is the eigenvalue level of the averaged sum.
    """
    if not (p.mu_bar_max <= theta <= 1.0):
        raise ThetaRangeError(
            f"theta must lie in [{p.mu_bar_max}, 1], got {theta}"
        )
    if not (0.0 < p.mu_bar_max < 1.0):
        raise DegenerateParamsError(
            f"mu_bar_max must lie strictly in (0, 1), got {p.mu_bar_max}"
        )
    div = _divergence_with_limits(theta, p.mu_bar_max)
    return BoundValue(p.dim_product * math.exp(-p.n * div), "chernoff1-upper", theta, p)


def chernoff_i_lower(p: BoundParams, theta: float) -> BoundValue:
    """dim * exp(-n D(theta || mu_bar_min)) for 0 <= theta <= mu_bar_min."""
    if not (0.0 <= theta <= p.mu_bar_min):
        raise ThetaRangeError(
            f"theta must lie in [0, {p.mu_bar_min}], got {theta}"
        )
    if not (0.0 < p.mu_bar_min < 1.0):
        raise DegenerateParamsError(
            f"mu_bar_min must lie strictly in (0, 1), got {p.mu_bar_min}"
        )
    div = _divergence_with_limits(theta, p.mu_bar_min)
    return BoundValue(p.dim_product * math.exp(-p.n * div), "chernoff1-lower", theta, p)


def chernoff_ii_upper(p: BoundParams, theta: float) -> BoundValue:
    """dim * (e^theta / (1+theta)^(1+theta))^(mu_max / T), theta >= 0.

    Bounds the probability that the top eigenvalue of the sum exceeds
    (1 + theta) mu_max.
    """
    if theta < 0:
        raise ThetaRangeError(f"theta must be nonnegative, got {theta}")
    if p.mu_max < 0:
        raise DegenerateParamsError(f"mu_max must be nonnegative, got {p.mu_max}")
    log_base = theta - (1.0 + theta) * math.log1p(theta)
    val = p.dim_product * math.exp((p.mu_max / p.T) * log_base)
    return BoundValue(val, "chernoff2-upper", theta, p)


def chernoff_ii_lower(p: BoundParams, theta: float) -> BoundValue:
    """dim * (e^-theta / (1-theta)^(1-theta))^(mu_min / T), theta in [0, 1].

    Bounds the probability that the bottom eigenvalue of the sum drops
    below (1 - theta) mu_min.  At theta = 1 the power (1-theta)^(1-theta)
    takes its limit value 1.
    """
    if not (0.0 <= theta <= 1.0):
        raise ThetaRangeError(f"theta must lie in [0, 1], got {theta}")
    if p.mu_min < 0:
        raise DegenerateParamsError(f"mu_min must be nonnegative, got {p.mu_min}")
    tail = 0.0 if theta == 1.0 else (1.0 - theta) * math.log(1.0 - theta)
    log_base = -theta - tail
    val = p.dim_product * math.exp((p.mu_min / p.T) * log_base)
    return BoundValue(val, "chernoff2-lower", theta, p)


def chernoff_optimal_delta() -> float:
    """Root of e^delta = 1/delta on (0, 1), found by bracketed root-finding."""
    return float(brentq(lambda d: math.exp(d) - 1.0 / d, 0.1, 1.0, xtol=1e-14))


def chernoff_expectation_bounds(p: BoundParams) -> tuple[float, float]:
    """(mu_max, C dim e^(-mu_max / T)) bracket with C = e^(e^d*) / d*.

    d* solves e^d = 1/d, giving C about 10.28.  The upper expression is
    reported as printed in its source derivation; only the constants are
    asserted numerically elsewhere.
    """
    if p.mu_max < 0:
        raise DegenerateParamsError(f"mu_max must be nonnegative, got {p.mu_max}")
    d_opt = chernoff_optimal_delta()
    c = math.exp(math.exp(d_opt)) / d_opt
    return (p.mu_max, c * p.dim_product * math.exp(-p.mu_max / p.T))


_BERNSTEIN_FORMS = {
    # tag suffix -> (exponent(theta, sigma_sq, T), regime predicate or None)
    "bounded": {
        "general": lambda th, s2, t: -0.5 * th * th / (s2 + t * th / 3.0),
        "small": lambda th, s2, t: -3.0 * th * th / (8.0 * s2),
        "large": lambda th, s2, t: -3.0 * th / (8.0 * t),
    },
    "subexp": {
        "general": lambda th, s2, t: -0.5 * th * th / (s2 + t * th),
        "small": lambda th, s2, t: -th * th / (4.0 * s2),
        "large": lambda th, s2, t: -th / (4.0 * t),
    },
}


def _bernstein(p: BoundParams, theta: float, regime: str, family: str) -> BoundValue:
    if theta < 0:
        raise ThetaRangeError(f"theta must be nonnegative, got {theta}")
    if p.sigma_sq <= 0:
        raise DegenerateParamsError("sigma_sq must be positive for Bernstein bounds")
    forms = _BERNSTEIN_FORMS[family]
    crossover = p.sigma_sq / p.T
    if regime == "auto":
        regime = "small" if theta <= crossover else "large"
        general = p.dim_product * math.exp(forms["general"](theta, p.sigma_sq, p.T))
        picked = p.dim_product * math.exp(forms[regime](theta, p.sigma_sq, p.T))
        if general > picked * (1.0 + 1e-12):
            raise AssertionError(
                f"general Bernstein form {general} exceeds {regime} form {picked}"
            )
        value, used = picked, regime
    elif regime == "general":
        value = p.dim_product * math.exp(forms["general"](theta, p.sigma_sq, p.T))
        used = "general"
    elif regime in ("small", "large"):
        ok = theta <= crossover if regime == "small" else theta >= crossover
        if not ok:
            raise ThetaRangeError(
                f"{regime}-deviation form needs theta "
                f"{'<=' if regime == 'small' else '>='} sigma_sq/T = {crossover}, "
                f"got {theta}"
            )
        value = p.dim_product * math.exp(forms[regime](theta, p.sigma_sq, p.T))
        used = regime
    else:
        raise ValueError(f"unknown regime {regime!r}")
    tag = f"bernstein-{family}"
    if used != "general":
        tag = f"{tag}-{used}"
    return BoundValue(value, tag, theta, p)


def bernstein_bounded(p: BoundParams, theta: float, regime: str = "general") -> BoundValue:
    """Bernstein tail for centered summands with a top-eigenvalue bound T.

    general: dim exp(-theta^2/2 / (sigma^2 + T theta / 3)); the small and
    large regimes are its simplifications on either side of sigma^2 / T.
    """
    return _bernstein(p, theta, regime, "bounded")


def bernstein_subexponential(p: BoundParams, theta: float, regime: str = "general") -> BoundValue:
    """Bernstein tail under factorial moment growth instead of a hard bound.

    general: dim exp(-theta^2/2 / (sigma^2 + T theta)).
    """
    return _bernstein(p, theta, regime, "subexp")


def gauss_integral(x: float) -> float:
    """Integral of exp(-s^2) from 0 to x by adaptive quadrature."""
    if x == math.inf:
        val, err = quad(lambda s: math.exp(-s * s), 0.0, np.inf, epsabs=1e-13)
    else:
        val, err = quad(lambda s: math.exp(-s * s), 0.0, x, epsabs=1e-13)
    if err > 1e-10:
        raise RuntimeError(f"quadrature error estimate too large: {err:.3e}")
    return float(val)


def subexp_expectation_upper(p: BoundParams) -> float:
    """Upper bound on the expected top eigenvalue for subexponential sums.

    2 dim (sigma G(sigma / 2T) + 2 T exp(-sigma^2 / 4T^2)) with G the
    Gaussian integral; collapses to 4 dim T as sigma -> 0.
    """
    sigma = math.sqrt(p.sigma_sq)
    if sigma == 0.0:
        return 4.0 * p.dim_product * p.T
    g = gauss_integral(sigma / (2.0 * p.T))
    return 2.0 * p.dim_product * (
        sigma * g + 2.0 * p.T * math.exp(-p.sigma_sq / (4.0 * p.T * p.T))
    )


def azuma_mcdiarmid_bound(p: BoundParams, theta: float) -> BoundValue:
    """Martingale / bounded-difference tail: dim exp(-theta^2 / (8 sigma^2))."""
    if theta < 0:
        raise ThetaRangeError(f"theta must be nonnegative, got {theta}")
    if theta == 0:
        return BoundValue(float(p.dim_product), "azuma", theta, p)
    if p.sigma_sq == 0:
        raise DegenerateParamsError("sigma_sq = 0 with theta > 0: degenerate martingale")
    val = p.dim_product * math.exp(-theta * theta / (8.0 * p.sigma_sq))
    return BoundValue(val, "azuma", theta, p)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


def _golden_section(f, a: float, b: float, tol: float) -> float:
    """Location of the minimum of a unimodal f on [a, b] to width tol."""
    h = b - a
    if h <= tol:
        return 0.5 * (a + b)
    steps = int(math.ceil(math.log(tol / h) / math.log(_INV_PHI)))
    c = a + _INV_PHI_SQ * h
    d = a + _INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(steps):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= _INV_PHI
            c = a + _INV_PHI_SQ * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= _INV_PHI
            d = a + _INV_PHI * h
            yd = f(d)
    return c if yc < yd else d


def master_bound_numeric(
    log_mgf_max_eig,
    theta: float,
    t_grid=None,
    dim_product: int = 1,
) -> BoundValue:
    """Numeric infimum of dim * exp(-t theta + g(t)) over the transform grid.

    ``log_mgf_max_eig`` is g(t), an eigenvalue-level upper bound on the sum
    of log moment generating functions.  A coarse pass over the grid is
    refined by golden-section search around the best point; the result
    never exceeds any single grid evaluation.
    """
    if t_grid is None:
        t_grid = np.geomspace(1e-4, 50.0, 64)
    ts = np.asarray(list(t_grid), dtype=np.float64)
    if ts.size == 0:
        raise ValueError("t_grid must be nonempty")
    if np.any(ts <= 0):
        raise ValueError("transform parameters must be positive")
    hs = np.asarray([-t * theta + log_mgf_max_eig(t) for t in ts], dtype=np.float64)
    if not np.all(np.isfinite(hs)):
        bad = float(ts[np.argmax(~np.isfinite(hs))])
        raise ValueError(f"log MGF bound is not finite at t = {bad}")
    k = int(np.argmin(hs))
    lo = ts[k - 1] if k > 0 else ts[0]
    hi = ts[k + 1] if k + 1 < ts.size else ts[-1]
    h = lambda t: -t * theta + log_mgf_max_eig(t)
    t_star = _golden_section(h, float(lo), float(hi), 1e-10) if hi > lo else float(ts[k])
    h_best = min(float(hs[k]), h(t_star))
    t_opt = t_star if h(t_star) <= float(hs[k]) else float(ts[k])
    return BoundValue(
        dim_product * math.exp(h_best), "master-numeric", theta, None, t_opt=t_opt
    )


def with_tampered(p: BoundParams, sigma_factor: float = 1.0, mu_factor: float = 1.0) -> BoundParams:
    """Scaled copy of the statistics, for falsification self-tests only."""
    return replace(
        p,
        sigma_sq=p.sigma_sq * sigma_factor,
        mu_max=p.mu_max * mu_factor,
        mu_min=p.mu_min * mu_factor,
        mu_bar_max=p.mu_bar_max * mu_factor,
        mu_bar_min=p.mu_bar_min * mu_factor,
        mu_provenance="tampered",
    )
