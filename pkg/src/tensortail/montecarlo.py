"""Tail estimation with exact binomial intervals and bound verdicts.

The harness draws sample statistics in fixed-size chunks, each chunk from
its own counter-based substream, so the value stream is a pure function
of (spec, seed) no matter how chunks are spread over worker threads.  One
statistic stream serves a whole threshold grid: each grid point only
rereads the cached values.  A bound "passes" at a point when the exact
one-sided binomial upper confidence limit sits at or below the analytic
bound (bounds at or above one are vacuously true).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import beta as _beta_dist

from . import bounds as bounds_mod
from . import ensembles
from .bounds import BoundParams, BoundValue
from .ensembles import EnsembleSpec, RngState
from .tensor_core import HermitianTensor, Shape, hermitian, refold

# Samples per substream chunk.  Part of the reproducibility contract:
# changing it changes every sampled stream.
CHUNK = 4096

DEFAULT_ALPHA = 1e-3
DEFAULT_TRIALS = 100_000

TAIL_STATISTICS = (
    "lambda_max_sum",
    "spectral_norm_sum",
    "lambda_min_sum",
    "lambda_max_centered_F",
)

EXPECTATION_STATISTICS = ("norm", "norm_sq", "lambda_max")


class IncompatiblePairingError(ValueError):
    """Theorem tag does not apply to the given ensemble kind."""


def clopper_pearson_upper(hits: int, trials: int, alpha: float = DEFAULT_ALPHA) -> float:
    """One-sided exact binomial upper confidence limit at level 1 - alpha."""
    if not 0 <= hits <= trials:
        raise ValueError(f"need 0 <= hits <= trials, got {hits}/{trials}")
    if hits == trials:
        return 1.0
    return float(_beta_dist.ppf(1.0 - alpha, hits + 1, trials - hits))


@dataclass(frozen=True)
class TailEstimate:
    """Empirical tail frequency with its exact one-sided upper limit."""

    theta: float
    hits: int
    trials: int
    p_hat: float
    ci_upper: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0 <= self.hits <= self.trials:
            raise ValueError("hits must lie in [0, trials]")
        if not 0.0 <= self.p_hat <= self.ci_upper <= 1.0:
            raise ValueError("need 0 <= p_hat <= ci_upper <= 1")


def _make_estimate(theta: float, hits: int, trials: int, alpha: float) -> TailEstimate:
    return TailEstimate(
        theta=float(theta),
        hits=int(hits),
        trials=int(trials),
        p_hat=hits / trials,
        ci_upper=clopper_pearson_upper(hits, trials, alpha),
        alpha=alpha,
    )


@dataclass(frozen=True)
class TailVerdict:
    """One grid point: empirical estimate against the analytic bound."""

    estimate: TailEstimate
    bound: BoundValue
    passed: bool
    tightness: float

    @staticmethod
    def from_parts(estimate: TailEstimate, bound: BoundValue) -> "TailVerdict":
        passed = bound.value >= 1.0 or estimate.ci_upper <= min(bound.value, 1.0)
        tightness = bound.value / estimate.p_hat if estimate.p_hat > 0 else math.inf
        return TailVerdict(estimate, bound, passed, tightness)


# ---------------------------------------------------------------------------
# Chunked statistic collection.
# ---------------------------------------------------------------------------


def _chunk_plan(trials: int) -> list[tuple[int, int]]:
    return [(c, min(CHUNK, trials - c * CHUNK)) for c in range((trials + CHUNK - 1) // CHUNK)]


def _square_statistics(sums: np.ndarray, wanted: tuple[str, ...]) -> dict[str, np.ndarray]:
    herm = 0.5 * (sums + np.conj(np.swapaxes(sums, -1, -2)))
    vals = np.linalg.eigvalsh(herm)
    out = {}
    for name in wanted:
        if name in ("lambda_max_sum", "lambda_max_centered_F"):
            out[name] = vals[:, -1].copy()
        elif name == "lambda_min_sum":
            out[name] = vals[:, 0].copy()
        elif name == "spectral_norm_sum":
            out[name] = np.maximum(np.abs(vals[:, 0]), np.abs(vals[:, -1]))
        else:
            raise ValueError(f"unknown statistic {name!r}")
    return out


def _rect_statistics(sums: np.ndarray, wanted: tuple[str, ...]) -> dict[str, np.ndarray]:
    out = {}
    for name in wanted:
        if name != "spectral_norm_sum":
            raise IncompatiblePairingError(
                f"statistic {name!r} needs square samples"
            )
        out[name] = np.linalg.svd(sums, compute_uv=False)[:, 0].copy()
    return out


def collect_statistics(
    spec: EnsembleSpec,
    statistics,
    trials: int,
    state: RngState,
    workers: int = 1,
) -> dict[str, np.ndarray]:
    """Sampled statistic values, one array of length ``trials`` per name.

    One spectral decomposition serves every requested statistic of a
    sample.  Deterministic in (spec, state, trials) for any worker count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    wanted = tuple(dict.fromkeys(statistics))
    for name in wanted:
        if name not in TAIL_STATISTICS:
            raise ValueError(f"unknown statistic {name!r}")
    square = spec.kind != "hadamard_gaussian"
    extract = _square_statistics if square else _rect_statistics

    def run_chunk(chunk: tuple[int, int]) -> dict[str, np.ndarray]:
        idx, count = chunk
        sums = ensembles.sum_samples_batch(spec, state, idx, count)
        return extract(sums, wanted)

    plan = _chunk_plan(trials)
    if workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(run_chunk, plan))
    else:
        pieces = [run_chunk(c) for c in plan]
    return {
        name: np.concatenate([p[name] for p in pieces]) for name in wanted
    }


def estimate_tail(
    spec: EnsembleSpec,
    statistic: str,
    theta: float,
    trials: int,
    seed: int,
    workers: int = 1,
    alpha: float = DEFAULT_ALPHA,
    stream: int = 0,
) -> TailEstimate:
    """Empirical tail frequency of one statistic at one threshold.

    Counts statistic >= theta, except for the bottom-eigenvalue statistic
    where the tail event is statistic <= theta.
    """
    values = collect_statistics(spec, (statistic,), trials, RngState(seed, stream), workers)
    arr = values[statistic]
    if statistic == "lambda_min_sum":
        hits = int(np.count_nonzero(arr <= theta))
    else:
        hits = int(np.count_nonzero(arr >= theta))
    return _make_estimate(theta, hits, trials, alpha)


def estimate_expectation(
    spec: EnsembleSpec,
    statistic: str,
    trials: int,
    seed: int,
    workers: int = 1,
    stream: int = 0,
) -> tuple[float, float]:
    """(sample mean, standard error) of a scalar sample statistic."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    if statistic not in EXPECTATION_STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    base = "lambda_max_sum" if statistic == "lambda_max" else "spectral_norm_sum"
    values = collect_statistics(spec, (base,), trials, RngState(seed, stream), workers)[base]
    if statistic == "norm_sq":
        values = values * values
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(trials))
    return mean, se


def empirical_cumulants(
    spec: EnsembleSpec,
    trials: int,
    seed: int,
    workers: int = 1,
    stream: int = 0,
) -> tuple[HermitianTensor, HermitianTensor]:
    """Sample mean tensor and sample variance tensor of the summed draw."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    if spec.kind == "hadamard_gaussian":
        raise IncompatiblePairingError("cumulants need square Hermitian samples")
    state = RngState(seed, stream)

    def run_chunk(chunk: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        idx, count = chunk
        sums = ensembles.sum_samples_batch(spec, state, idx, count)
        herm = 0.5 * (sums + np.conj(np.swapaxes(sums, -1, -2)))
        return herm.sum(axis=0), np.einsum("bij,bjk->ik", herm, herm)

    plan = _chunk_plan(trials)
    if workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(run_chunk, plan))
    else:
        pieces = [run_chunk(c) for c in plan]
    s1 = np.sum(np.stack([p[0] for p in pieces]), axis=0) / trials
    s2 = np.sum(np.stack([p[1] for p in pieces]), axis=0) / trials
    dims = spec.sample_shape.row_dims
    shape = Shape(dims, dims)
    psi1 = hermitian(refold(s1, shape))
    psi2 = hermitian(refold(s2 - s1 @ s1, shape))
    return psi1, psi2


# ---------------------------------------------------------------------------
# Theorem pairings.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoremRow:
    tag: str
    kinds: frozenset
    statistic: str
    direction: str  # "ge" or "le"
    requires_unit_scale: bool = False

    def theta_range(self, p: BoundParams) -> tuple[float, float]:
        if self.tag == "chernoff1-upper":
            return (p.mu_bar_max, 1.0)
        if self.tag == "chernoff1-lower":
            return (0.0, p.mu_bar_min)
        if self.tag == "chernoff2-lower":
            return (0.0, 1.0)
        return (0.0, math.inf)

    def event_threshold(self, theta: float, p: BoundParams) -> float:
        if self.tag in ("chernoff1-upper", "chernoff1-lower"):
            return p.n * theta
        if self.tag == "chernoff2-upper":
            return (1.0 + theta) * p.mu_max
        if self.tag == "chernoff2-lower":
            return (1.0 - theta) * p.mu_min
        return theta

    def bound(self, p: BoundParams, theta: float) -> BoundValue:
        if self.tag == "gaussian-series":
            bv = bounds_mod.gaussian_series_bound(p, theta)
        elif self.tag == "gaussian-series-norm":
            bv = bounds_mod.gaussian_series_bound(p, theta, two_sided=True)
        elif self.tag == "nonuniform-gaussian":
            bv = bounds_mod.gaussian_series_bound(p, theta)
        elif self.tag == "chernoff1-upper":
            bv = bounds_mod.chernoff_i_upper(p, theta)
        elif self.tag == "chernoff1-lower":
            bv = bounds_mod.chernoff_i_lower(p, theta)
        elif self.tag == "chernoff2-upper":
            bv = bounds_mod.chernoff_ii_upper(p, theta)
        elif self.tag == "chernoff2-lower":
            bv = bounds_mod.chernoff_ii_lower(p, theta)
        elif self.tag == "bernstein-bounded":
            bv = bounds_mod.bernstein_bounded(p, theta, "general")
        elif self.tag == "bernstein-subexp":
            bv = bounds_mod.bernstein_subexponential(p, theta, "general")
        elif self.tag in ("azuma", "hoeffding", "mcdiarmid"):
            bv = bounds_mod.azuma_mcdiarmid_bound(p, theta)
        else:
            raise ValueError(f"unknown theorem tag {self.tag!r}")
        return replace(bv, theorem_tag=self.tag)


THEOREMS: dict[str, TheoremRow] = {
    row.tag: row
    for row in (
        TheoremRow(
            "gaussian-series",
            frozenset({"gaussian_series", "rademacher_series"}),
            "lambda_max_sum",
            "ge",
        ),
        TheoremRow(
            "gaussian-series-norm",
            frozenset({"gaussian_series", "rademacher_series"}),
            "spectral_norm_sum",
            "ge",
        ),
        TheoremRow(
            "nonuniform-gaussian",
            frozenset({"hadamard_gaussian"}),
            "spectral_norm_sum",
            "ge",
        ),
        TheoremRow(
            "chernoff1-upper",
            frozenset({"psd_bounded"}),
            "lambda_max_sum",
            "ge",
            requires_unit_scale=True,
        ),
        TheoremRow(
            "chernoff1-lower",
            frozenset({"psd_bounded"}),
            "lambda_min_sum",
            "le",
            requires_unit_scale=True,
        ),
        TheoremRow(
            "chernoff2-upper", frozenset({"psd_bounded"}), "lambda_max_sum", "ge"
        ),
        TheoremRow(
            "chernoff2-lower", frozenset({"psd_bounded"}), "lambda_min_sum", "le"
        ),
        TheoremRow(
            "bernstein-bounded", frozenset({"centered_bounded"}), "lambda_max_sum", "ge"
        ),
        TheoremRow(
            "bernstein-subexp", frozenset({"subexponential"}), "lambda_max_sum", "ge"
        ),
        TheoremRow(
            "azuma",
            frozenset({"azuma_martingale", "rademacher_series", "centered_bounded"}),
            "lambda_max_sum",
            "ge",
        ),
        TheoremRow(
            "hoeffding",
            frozenset({"centered_bounded", "rademacher_series"}),
            "lambda_max_sum",
            "ge",
        ),
        TheoremRow(
            "mcdiarmid",
            frozenset({"mcdiarmid_function"}),
            "lambda_max_centered_F",
            "ge",
        ),
    )
}


def check_pairing(spec: EnsembleSpec, tag: str) -> TheoremRow:
    row = THEOREMS.get(tag)
    if row is None:
        raise ValueError(f"unknown theorem tag {tag!r}")
    if spec.kind not in row.kinds:
        raise IncompatiblePairingError(
            f"theorem {tag!r} does not apply to ensemble kind {spec.kind!r}"
        )
    if row.requires_unit_scale and not math.isclose(spec.T, 1.0):
        raise IncompatiblePairingError(
            f"theorem {tag!r} needs summands normalized to scale 1, spec has T = {spec.T}"
        )
    return row


def theta_grid(
    tag: str,
    params: BoundParams,
    points: int = 16,
    bound_hi: float = 0.9,
    bound_lo: float = DEFAULT_ALPHA,
) -> np.ndarray:
    """Thresholds whose bound values are log-spaced over [bound_lo, bound_hi].

    Inverting the monotone bound keeps the grid inside the regime a Monte
    Carlo run can actually falsify: bound values between roughly one and
    the resolution of the binomial interval.
    """
    row = THEOREMS.get(tag)
    if row is None:
        raise ValueError(f"unknown theorem tag {tag!r}")
    lo, hi = row.theta_range(params)
    eps = 1e-9 * max(1.0, abs(hi) if math.isfinite(hi) else 1.0)
    lo_in = lo + eps if lo > 0 or tag.startswith("chernoff1") else max(lo, eps)
    if not math.isfinite(hi):
        hi_in = max(lo_in * 2, 1.0)
        for _ in range(200):
            if row.bound(params, hi_in).value <= bound_lo:
                break
            hi_in *= 2.0
    else:
        hi_in = hi - eps if tag == "chernoff1-upper" else hi
    b_lo_end = row.bound(params, lo_in).value
    b_hi_end = row.bound(params, hi_in).value
    decreasing = b_lo_end >= b_hi_end
    b_top, b_bot = max(b_lo_end, b_hi_end), min(b_lo_end, b_hi_end)
    t_hi = min(bound_hi, b_top * (1.0 - 1e-9))
    t_lo = max(bound_lo, b_bot * (1.0 + 1e-9))
    if t_lo >= t_hi:
        t_lo = t_hi = min(max(bound_lo, b_bot), b_top)
    targets = np.geomspace(t_hi, t_lo, points)
    thetas = []
    for target in targets:
        a, b = lo_in, hi_in
        for _ in range(100):
            mid = 0.5 * (a + b)
            val = row.bound(params, mid).value
            high_side = val > target
            if decreasing == high_side:
                a = mid
            else:
                b = mid
        thetas.append(0.5 * (a + b))
    return np.unique(np.asarray(thetas))


def verify(
    spec: EnsembleSpec,
    theorem_tag: str,
    thetas,
    trials: int,
    seed: int,
    workers: int = 1,
    alpha: float = DEFAULT_ALPHA,
    params: BoundParams | None = None,
    stream: int = 0,
) -> list[TailVerdict]:
    """Evaluate one theorem against one ensemble over a threshold grid.

    Draws a single statistic stream and compares every grid point against
    the analytic bound computed from exact hypothesis statistics (or the
    supplied override, as used by falsification self-tests).
    """
    row = check_pairing(spec, theorem_tag)
    if params is None:
        params = ensembles.compute_params(spec)
    values = collect_statistics(
        spec, (row.statistic,), trials, RngState(seed, stream), workers
    )[row.statistic]
    verdicts = []
    for theta in thetas:
        theta = float(theta)
        event = row.event_threshold(theta, params)
        if row.direction == "le":
            hits = int(np.count_nonzero(values <= event))
        else:
            hits = int(np.count_nonzero(values >= event))
        estimate = _make_estimate(event, hits, trials, alpha)
        bound = row.bound(params, theta)
        verdicts.append(TailVerdict.from_parts(estimate, bound))
    return verdicts
