"""Seedable random-tensor ensembles matching each bound's hypotheses.

Every generator is constructed so that its theorem hypothesis holds
exactly by algebra (centering by sign symmetry, eigenvalue boxes by
construction, martingale steps scaled into [-1, 1]), never just
approximately.  A reported bound violation therefore points at an
implementation bug rather than at sampling slack.

Reproducibility contract: draws are addressed by a counter-based
generator keyed on (seed, stream, substream).  The Monte Carlo harness
assigns one substream per fixed-size chunk of sample indices, so results
do not depend on how chunks are distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import spectral, tensor_core
from .bounds import BoundParams, nonuniform_gaussian_sigma
from .tensor_core import (
    DenseTensor,
    HermitianTensor,
    Shape,
    hermitian,
    hermitian_from_matrix,
    refold,
    tensor_from_json,
    tensor_to_json,
    unfold,
)

KINDS = (
    "gaussian_series",
    "rademacher_series",
    "hadamard_gaussian",
    "psd_bounded",
    "centered_bounded",
    "subexponential",
    "azuma_martingale",
    "mcdiarmid_function",
)

_COEFF_KINDS = (
    "gaussian_series",
    "rademacher_series",
    "centered_bounded",
    "subexponential",
    "azuma_martingale",
    "mcdiarmid_function",
)

# Scalar amplitude law for the subexponential ensemble: a capped unit
# exponential scaled by 2^-1/2, which keeps every even moment at or below
# p!/2 (the uncapped, unscaled exponential would exceed that by a factor
# of two at p = 2).
SUBEXP_CAP = 30.0
SUBEXP_SCALE = 2.0 ** -0.5

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1


@dataclass(frozen=True)
class RngState:
    """Root of a family of independent counter-based generators."""

    seed: int
    stream: int = 0

    def generator(self, substream: int) -> np.random.Generator:
        if not 0 <= self.stream <= _MASK32:
            raise ValueError(f"stream must fit in 32 bits, got {self.stream}")
        if not 0 <= substream <= _MASK32:
            raise ValueError(f"substream must fit in 32 bits, got {substream}")
        key = np.array(
            [self.seed & _MASK64, (self.stream << 32) | substream],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


def _rademacher(gen: np.random.Generator, shape) -> np.ndarray:
    return gen.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


def _subexp_moment(p: int) -> float:
    """E s^p for the capped, scaled exponential amplitude law."""
    body, _ = quad(lambda s: s**p * math.exp(-s), 0.0, SUBEXP_CAP, epsabs=1e-13)
    tail = SUBEXP_CAP**p * math.exp(-SUBEXP_CAP)
    return (body + tail) * SUBEXP_SCALE**p


_subexp_law_checked = False


def _check_subexp_law(max_p: int = 8) -> None:
    global _subexp_law_checked
    if _subexp_law_checked:
        return
    for p in range(2, max_p + 1):
        m = _subexp_moment(p)
        limit = math.factorial(p) / 2.0
        if m > limit * (1.0 + 1e-12):
            raise ValueError(
                f"subexponential amplitude law violates the moment condition "
                f"at p = {p}: E s^p = {m} > {limit}"
            )
    _subexp_law_checked = True


def _symmetrized(coeffs, label: str) -> tuple[DenseTensor, ...]:
    out = []
    dims = None
    for i, a in enumerate(coeffs):
        h = hermitian(a)
        if dims is None:
            dims = h.dims
        elif h.dims != dims:
            raise tensor_core.ShapeMismatchError(
                f"{label}: coefficient {i} has dims {h.dims}, expected {dims}"
            )
        out.append(h.base)
    return tuple(out)


@dataclass(frozen=True)
class EnsembleSpec:
    """Description of one random-tensor generator and its fixed data.

    ``coefficients`` holds the fixed Hermitian tensors for series,
    Bernstein, martingale and bounded-difference kinds, or the single
    rectangular mask for the entrywise Gaussian kind.  ``dims``/``n`` and
    ``profile`` configure the positive semidefinite bounded kind, whose
    draws are Haar-rotated eigenvalue boxes.
    """

    kind: str
    coefficients: tuple[DenseTensor, ...] = ()
    T: float = 1.0
    n: int | None = None
    dims: tuple[int, ...] | None = None
    profile: object = "uniform"
    adaptivity: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        if self.kind in _COEFF_KINDS:
            if not self.coefficients:
                raise ValueError(f"{self.kind} needs at least one coefficient")
            object.__setattr__(
                self, "coefficients", _symmetrized(self.coefficients, self.kind)
            )
            if self.n is None:
                object.__setattr__(self, "n", len(self.coefficients))
            elif self.n != len(self.coefficients):
                raise ValueError(
                    f"n = {self.n} disagrees with {len(self.coefficients)} coefficients"
                )
            if self.kind in ("centered_bounded", "subexponential"):
                for i, a in enumerate(self.coefficients):
                    norm = spectral.spectral_norm(a)
                    if norm > self.T * (1.0 + 1e-12):
                        raise ValueError(
                            f"coefficient {i} has spectral norm {norm} > T = {self.T}"
                        )
            if self.kind == "subexponential":
                _check_subexp_law()
        elif self.kind == "hadamard_gaussian":
            if len(self.coefficients) != 1:
                raise ValueError("hadamard_gaussian takes exactly one mask tensor")
            mask = self.coefficients[0]
            if len(mask.row_dims) != len(mask.col_dims):
                raise tensor_core.ShapeMismatchError(
                    "mask needs equal row and column mode counts"
                )
            if self.n is None:
                object.__setattr__(self, "n", 1)
        elif self.kind == "psd_bounded":
            if self.dims is None or self.n is None:
                raise ValueError("psd_bounded needs dims and n")
            object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
            Shape(self.dims, self.dims)  # guardrail + positivity
            _beta_profile_params(self.profile)  # validates

    @property
    def square_dims(self) -> tuple[int, ...]:
        if self.kind == "psd_bounded":
            return self.dims
        if self.kind == "hadamard_gaussian":
            raise ValueError("hadamard_gaussian samples are rectangular")
        return self.coefficients[0].row_dims

    @property
    def sample_shape(self) -> Shape:
        if self.kind == "hadamard_gaussian":
            return self.coefficients[0].shape
        d = self.square_dims
        return Shape(d, d)

    def to_json(self) -> dict:
        profile = self.profile
        if isinstance(profile, tuple):
            profile = list(profile)
        return {
            "kind": self.kind,
            "coefficients": [tensor_to_json(a) for a in self.coefficients],
            "T": self.T,
            "n": self.n,
            "dims": list(self.dims) if self.dims is not None else None,
            "profile": profile,
            "adaptivity": self.adaptivity,
        }

    @staticmethod
    def from_json(obj: dict) -> "EnsembleSpec":
        profile = obj.get("profile", "uniform")
        if isinstance(profile, list):
            profile = tuple(profile)
        dims = obj.get("dims")
        return EnsembleSpec(
            kind=obj["kind"],
            coefficients=tuple(tensor_from_json(t) for t in obj.get("coefficients", [])),
            T=float(obj.get("T", 1.0)),
            n=obj.get("n"),
            dims=tuple(dims) if dims is not None else None,
            profile=profile,
            adaptivity=bool(obj.get("adaptivity", False)),
        )


def _beta_profile_params(profile) -> tuple[float, float] | None:
    """None for the uniform profile, (a, b) for a beta profile."""
    if profile == "uniform":
        return None
    if isinstance(profile, tuple) and len(profile) == 3 and profile[0] == "beta":
        a, b = float(profile[1]), float(profile[2])
        if a <= 0 or b <= 0:
            raise ValueError(f"beta profile needs positive parameters, got {a}, {b}")
        return (a, b)
    raise ValueError(f"unknown eigenvalue profile {profile!r}")


def _coeff_stack(spec: EnsembleSpec) -> np.ndarray:
    return np.stack([unfold(a) for a in spec.coefficients])


def _haar_summands(
    gen: np.random.Generator,
    count: int,
    n: int,
    d: int,
    T: float,
    profile,
) -> np.ndarray:
    """(count, n, d, d) stack of Haar-rotated eigenvalue-box draws."""
    z = gen.standard_normal((count, n, d, d, 2))
    ginibre = z[..., 0] + 1j * z[..., 1]
    q, r = np.linalg.qr(ginibre)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    mod = np.abs(diag)
    phase = np.where(mod > 0, diag / np.where(mod > 0, mod, 1.0), 1.0)
    q = q * phase[..., None, :]
    beta = _beta_profile_params(profile)
    if beta is None:
        lam = gen.uniform(0.0, T, size=(count, n, d))
    else:
        lam = gen.beta(beta[0], beta[1], size=(count, n, d)) * T
    return (q * lam[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))


def _sum_batch(spec: EnsembleSpec, gen: np.random.Generator, count: int) -> np.ndarray:
    """(count, R, C) unfolded realizations of the summed statistic target.

    For sum-of-summands kinds this is the full sum per sample; for the
    entrywise Gaussian kind it is the single masked draw; for the
    bounded-difference kind it is the centered function value.
    """
    kind = spec.kind
    if kind in ("gaussian_series", "rademacher_series"):
        stack = _coeff_stack(spec)
        if kind == "gaussian_series":
            weights = gen.standard_normal((count, spec.n))
        else:
            weights = _rademacher(gen, (count, spec.n))
        return np.tensordot(weights, stack, axes=(1, 0))
    if kind == "hadamard_gaussian":
        mask = unfold(spec.coefficients[0])
        draws = gen.standard_normal((count,) + mask.shape)
        return draws * mask
    if kind == "psd_bounded":
        d = math.prod(spec.dims)
        summands = _haar_summands(gen, count, spec.n, d, spec.T, spec.profile)
        return summands.sum(axis=1)
    if kind == "centered_bounded":
        stack = _coeff_stack(spec)
        signs = _rademacher(gen, (count, spec.n))
        return np.tensordot(signs, stack, axes=(1, 0))
    if kind == "subexponential":
        stack = _coeff_stack(spec)
        signs = _rademacher(gen, (count, spec.n))
        amps = np.minimum(gen.exponential(1.0, size=(count, spec.n)), SUBEXP_CAP)
        return np.tensordot(signs * amps * SUBEXP_SCALE, stack, axes=(1, 0))
    if kind == "azuma_martingale":
        stack = _coeff_stack(spec)
        signs = _rademacher(gen, (count, spec.n))
        running = np.zeros((count,) + stack.shape[1:], dtype=np.complex128)
        for i in range(spec.n):
            if spec.adaptivity and i > 0:
                s = np.tanh(np.linalg.eigvalsh(running)[:, -1])
            else:
                s = np.ones(count)
            running = running + (s * signs[:, i])[:, None, None] * stack[i]
        return running
    if kind == "mcdiarmid_function":
        stack = _coeff_stack(spec)
        x = gen.integers(0, 2, size=(count, spec.n)).astype(np.float64) - 0.5
        return np.tensordot(x, stack, axes=(1, 0))
    raise ValueError(f"unknown ensemble kind {kind!r}")


def sum_samples_batch(
    spec: EnsembleSpec, state: RngState, substream: int, count: int
) -> np.ndarray:
    """Batch of unfolded sample realizations from one addressed substream."""
    return _sum_batch(spec, state.generator(substream), count)


# ---------------------------------------------------------------------------
# Single-draw operations.
# ---------------------------------------------------------------------------


def sample_series(spec: EnsembleSpec, rng: np.random.Generator) -> HermitianTensor:
    """One draw of a Gaussian or sign series over the fixed coefficients."""
    if spec.kind not in ("gaussian_series", "rademacher_series"):
        raise ValueError(f"sample_series needs a series spec, got {spec.kind!r}")
    m = _sum_batch(spec, rng, 1)[0]
    return hermitian_from_matrix(m, spec.square_dims)


def sample_hadamard_gaussian(mask: DenseTensor, rng: np.random.Generator) -> DenseTensor:
    """Mask times an entrywise independent standard Gaussian tensor."""
    if len(mask.row_dims) != len(mask.col_dims):
        raise tensor_core.ShapeMismatchError("mask needs equal mode counts")
    draw = rng.standard_normal(mask.shape.dims)
    return DenseTensor(mask.shape, draw * mask.entries)


def sample_psd_bounded(
    dims, T: float, rng: np.random.Generator, profile="uniform"
) -> HermitianTensor:
    """Haar-rotated diagonal draw with eigenvalues in [0, T]."""
    dims = tuple(int(d) for d in dims)
    d = math.prod(dims)
    m = _haar_summands(rng, 1, 1, d, T, profile)[0, 0]
    return hermitian_from_matrix(m, dims)


def sample_centered_bounded(
    coeff: HermitianTensor, T: float, rng: np.random.Generator
) -> HermitianTensor:
    """Random sign times a fixed Hermitian tensor of spectral norm at most T."""
    norm = spectral.spectral_norm(coeff)
    if norm > T * (1.0 + 1e-12):
        raise ValueError(f"coefficient spectral norm {norm} exceeds T = {T}")
    sign = float(_rademacher(rng, ()))
    return HermitianTensor(tensor_core.scale(coeff.base, sign))


def sample_subexponential(
    coeff: HermitianTensor, T: float, rng: np.random.Generator
) -> HermitianTensor:
    """Signed, exponentially-damped multiple of a fixed Hermitian tensor."""
    norm = spectral.spectral_norm(coeff)
    if norm > T * (1.0 + 1e-12):
        raise ValueError(f"coefficient spectral norm {norm} exceeds T = {T}")
    _check_subexp_law()
    sign = float(_rademacher(rng, ()))
    amp = min(float(rng.exponential(1.0)), SUBEXP_CAP) * SUBEXP_SCALE
    return HermitianTensor(tensor_core.scale(coeff.base, sign * amp))


def sample_azuma_sequence(
    coeffs, rng: np.random.Generator, adaptivity: bool = True
) -> list[HermitianTensor]:
    """Adapted sequence with conditionally centered, dominated increments.

    Step i is s_i b_i A_i where b_i is a fresh random sign and s_i is a
    deterministic function of the earlier steps with |s_i| <= 1, so each
    increment squares below A_i^2 and has conditional mean zero.
    """
    coeffs = [hermitian(c.base if isinstance(c, HermitianTensor) else c) for c in coeffs]
    if not coeffs:
        raise ValueError("need at least one coefficient")
    dims = coeffs[0].dims
    out = []
    running = np.zeros((coeffs[0].dim_product,) * 2, dtype=np.complex128)
    for i, a in enumerate(coeffs):
        if a.dims != dims:
            raise tensor_core.ShapeMismatchError(
                f"coefficient {i} has dims {a.dims}, expected {dims}"
            )
        if adaptivity and i > 0:
            s = math.tanh(float(np.linalg.eigvalsh(running)[-1]))
        else:
            s = 1.0
        sign = float(_rademacher(rng, ()))
        step = HermitianTensor(tensor_core.scale(a.base, s * sign))
        running = running + step.unfold()
        out.append(step)
    return out


def mcdiarmid_instance(
    weights, rng: np.random.Generator
) -> tuple[HermitianTensor, HermitianTensor]:
    """One draw of the weighted-signs function together with its exact mean.

    The function maps independent uniform {-1/2, +1/2} inputs to the
    weighted sum; swapping one input moves the value by at most one weight,
    and the mean is exactly zero by symmetry.
    """
    weights = [hermitian(w.base if isinstance(w, HermitianTensor) else w) for w in weights]
    if not weights:
        raise ValueError("need at least one weight")
    dims = weights[0].dims
    total = np.zeros((weights[0].dim_product,) * 2, dtype=np.complex128)
    for i, w in enumerate(weights):
        if w.dims != dims:
            raise tensor_core.ShapeMismatchError(
                f"weight {i} has dims {w.dims}, expected {dims}"
            )
        x = float(rng.integers(0, 2)) - 0.5
        total = total + x * w.unfold()
    sample = hermitian_from_matrix(total, dims)
    mean = hermitian_from_matrix(np.zeros_like(total), dims)
    return sample, mean


# ---------------------------------------------------------------------------
# Exact hypothesis statistics.
# ---------------------------------------------------------------------------


def _coeff_square_sum_norm(spec: EnsembleSpec) -> float:
    stack = _coeff_stack(spec)
    total = np.einsum("nij,njk->ik", stack, stack)
    return float(np.linalg.eigvalsh(total)[-1])


def _mean_eig_fraction(profile) -> float:
    beta = _beta_profile_params(profile)
    if beta is None:
        return 0.5
    a, b = beta
    return a / (a + b)


def compute_params(spec: EnsembleSpec) -> BoundParams:
    """Exact hypothesis statistics for a spec, without any sampling.

    Every supported construction has an analytic summed mean (zero by sign
    symmetry, or isotropic under the Haar average), so the mean levels are
    never estimated.
    """
    if spec.kind in ("gaussian_series", "rademacher_series", "azuma_martingale",
                     "mcdiarmid_function", "centered_bounded", "subexponential"):
        sigma_sq = _coeff_square_sum_norm(spec)
        t_scale = max(spectral.spectral_norm(a) for a in spec.coefficients)
        t = spec.T if spec.kind in ("centered_bounded", "subexponential") else t_scale
        return BoundParams(
            dim_product=spec.sample_shape.row_size,
            sigma_sq=sigma_sq,
            T=max(t, np.finfo(float).tiny),
            n=spec.n,
        )
    if spec.kind == "hadamard_gaussian":
        mask = spec.coefficients[0]
        dim_product = math.prod(
            i + j for i, j in zip(mask.row_dims, mask.col_dims)
        )
        return BoundParams(
            dim_product=dim_product,
            sigma_sq=nonuniform_gaussian_sigma(mask),
            T=max(spectral.spectral_norm(mask), np.finfo(float).tiny),
            n=1,
        )
    if spec.kind == "psd_bounded":
        frac = _mean_eig_fraction(spec.profile)
        mu = spec.n * spec.T * frac
        return BoundParams(
            dim_product=math.prod(spec.dims),
            sigma_sq=0.0,
            T=spec.T,
            n=spec.n,
            mu_max=mu,
            mu_min=mu,
            mu_bar_max=frac,
            mu_bar_min=frac,
        )
    raise ValueError(f"unsupported ensemble kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Per-draw hypothesis certification and convenience random tensors.
# ---------------------------------------------------------------------------


def certify_draws(spec: EnsembleSpec, state: RngState, draws: int = 64) -> list[str]:
    """Numerically check the theorem hypothesis on fresh draws.

    Returns human-readable violation messages; an empty list means every
    checked draw satisfied its hypothesis within floating-point slack.
    """
    gen = state.generator(0)
    problems: list[str] = []
    slack = 1e-10
    if spec.kind == "psd_bounded":
        d = math.prod(spec.dims)
        summands = _haar_summands(gen, draws, 1, d, spec.T, spec.profile)[:, 0]
        vals = np.linalg.eigvalsh(summands)
        lo, hi = float(vals[:, 0].min()), float(vals[:, -1].max())
        if lo < -slack * spec.T:
            problems.append(f"psd_bounded draw has lambda_min = {lo}")
        if hi > spec.T * (1.0 + slack):
            problems.append(f"psd_bounded draw has lambda_max = {hi} > T")
        return problems
    if spec.kind in ("centered_bounded", "subexponential"):
        for i, a in enumerate(spec.coefficients):
            norm = spectral.spectral_norm(a)
            if norm > spec.T * (1.0 + 1e-12):
                problems.append(f"coefficient {i} norm {norm} exceeds T")
        if spec.kind == "subexponential":
            for p in range(2, 9):
                m = _subexp_moment(p)
                if m > math.factorial(p) / 2.0 * (1.0 + 1e-12):
                    problems.append(f"amplitude law moment p={p} too large: {m}")
        return problems
    if spec.kind == "azuma_martingale":
        sq_bounds = [unfold(a) @ unfold(a) for a in spec.coefficients]
        for _ in range(draws):
            steps = sample_azuma_sequence(
                [HermitianTensor(a) for a in spec.coefficients], gen, spec.adaptivity
            )
            for i, step in enumerate(steps):
                m = step.unfold()
                diff = sq_bounds[i] - m @ m
                if float(np.linalg.eigvalsh(diff)[0]) < -slack:
                    problems.append(f"azuma step {i} square exceeds its dominator")
        return problems
    if spec.kind == "mcdiarmid_function":
        # Swapping coordinate i moves the value by (x_i - x_i') A_i with
        # |x_i - x_i'| <= 1, so the squared move must sit below A_i^2.
        for _ in range(draws):
            x = gen.integers(0, 2, size=spec.n).astype(np.float64) - 0.5
            x_alt = gen.integers(0, 2, size=spec.n).astype(np.float64) - 0.5
            for i, a in enumerate(spec.coefficients):
                m = unfold(a)
                move = (x[i] - x_alt[i]) * m
                diff = m @ m - move @ move
                if float(np.linalg.eigvalsh(diff)[0]) < -slack:
                    problems.append(
                        f"mcdiarmid weight {i} bounded-difference check failed"
                    )
        return problems
    # Series kinds: the hypothesis is only that coefficients are fixed and
    # Hermitian, which construction enforces.
    return problems


def haar_unitary(d: int, gen: np.random.Generator) -> np.ndarray:
    """d x d Haar-distributed unitary via QR with the diagonal phase fix."""
    z = gen.standard_normal((d, d, 2))
    q, r = np.linalg.qr(z[..., 0] + 1j * z[..., 1])
    diag = np.diagonal(r)
    mod = np.abs(diag)
    phase = np.where(mod > 0, diag / np.where(mod > 0, mod, 1.0), 1.0)
    return q * phase[None, :]


def random_hermitian(dims, gen: np.random.Generator, scale: float = 1.0) -> HermitianTensor:
    """Random Hermitian tensor with independent Gaussian entries, symmetrized."""
    dims = tuple(int(d) for d in dims)
    d = math.prod(dims)
    z = gen.standard_normal((d, d, 2))
    g = (z[..., 0] + 1j * z[..., 1]) * (scale / math.sqrt(2.0))
    return hermitian_from_matrix(0.5 * (g + g.conj().T), dims)


def random_pd(
    dims, gen: np.random.Generator, eig_low: float = 0.5, eig_high: float = 2.0
) -> HermitianTensor:
    """Random positive definite tensor with eigenvalues in [eig_low, eig_high]."""
    if not 0 < eig_low <= eig_high:
        raise ValueError("need 0 < eig_low <= eig_high")
    dims = tuple(int(d) for d in dims)
    d = math.prod(dims)
    u = haar_unitary(d, gen)
    lam = gen.uniform(eig_low, eig_high, size=d)
    return hermitian_from_matrix((u * lam) @ u.conj().T, dims)
