"""Built-in property suites over the tensor algebra and spectral calculus.

Each check measures the worst violation of an identity or inequality over
seeded random instances and compares it against a floating-point slack.
The suite doubles as a mutation alarm: every check routes through the
public module functions, so an injected bug in, say, the adjoint breaks
the isomorphism checks immediately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral, tensor_core
from .ensembles import EnsembleSpec, RngState, certify_draws, random_hermitian, random_pd
from .spectral import (
    hermitian_dilation,
    hermitian_eig,
    psd_compare,
    relative_entropy,
    spectral_norm,
    tensor_exp,
    tensor_function,
    tensor_log,
)
from .tensor_core import DenseTensor, Shape, hermitian, tensor, trace, unfold

DEFAULT_SLACK = 1e-8
_REL_SLACK = 1e-10


def einstein_bruteforce(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Direct nested-sum contraction, kept independent of the unfolding path."""
    out = np.zeros(a.row_dims + b.col_dims, dtype=np.complex128)
    for i in np.ndindex(a.row_dims):
        for k in np.ndindex(b.col_dims):
            acc = 0.0 + 0.0j
            for j in np.ndindex(a.col_dims):
                acc += a.entries[i + j] * b.entries[j + k]
            out[i + k] = acc
    return DenseTensor(Shape(a.row_dims, b.col_dims), out)


def _random_dense(gen, row_dims, col_dims, scale=1.0) -> DenseTensor:
    shape = Shape(row_dims, col_dims)
    z = gen.standard_normal(shape.dims + (2,))
    return DenseTensor(shape, (z[..., 0] + 1j * z[..., 1]) * scale)


def _rel_err(x: np.ndarray, y: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(y)), 1e-300)
    return float(np.linalg.norm(x - y)) / denom


_SMALL_SHAPES = [
    (((2,), (3,)), ((3,), (2,))),
    (((2, 2), (2,)), ((2,), (3,))),
    (((2, 3), (2, 2)), ((2, 2), (3, 2))),
    (((4,), (2, 2)), ((2, 2), (2,))),
]


def check_einstein_oracle(gen, instances: int = 40) -> float:
    """Worst relative error of the product against the nested-sum oracle."""
    worst = 0.0
    for i in range(instances):
        (ra, ca), (rb, cb) = _SMALL_SHAPES[i % len(_SMALL_SHAPES)]
        a = _random_dense(gen, ra, ca)
        b = _random_dense(gen, rb, cb)
        got = tensor_core.einstein_product(a, b)
        want = einstein_bruteforce(a, b)
        worst = max(worst, _rel_err(got.entries, want.entries))
    return worst


def check_unfold_isomorphism(gen, instances: int = 40) -> float:
    """Worst defect of unfold as a *-algebra map (product, sum, adjoint, trace)."""
    worst = 0.0
    for _ in range(instances):
        a = _random_dense(gen, (2, 3), (2, 2))
        b = _random_dense(gen, (2, 2), (3, 2))
        c = _random_dense(gen, (2, 3), (2, 2))
        prod = unfold(tensor_core.einstein_product(a, b))
        worst = max(worst, _rel_err(prod, unfold(a) @ unfold(b)))
        sq = tensor_core.einstein_product(a, tensor_core.conjugate_transpose(a))
        worst = max(
            worst,
            abs(trace(sq) - np.trace(unfold(a) @ unfold(a).conj().T))
            / max(abs(trace(sq)), 1e-300),
        )
        adj = unfold(tensor_core.conjugate_transpose(a))
        worst = max(worst, _rel_err(adj, unfold(a).conj().T))
        worst = max(worst, _rel_err(unfold(tensor_core.add(a, c)), unfold(a) + unfold(c)))
    return worst


def check_spectral_mapping(gen, instances: int = 40) -> float:
    """Worst eigenvalue mismatch between f(eig(X)) and eig(f(X))."""
    maps = [
        ("exp", np.exp),
        (("polynomial", (0.0, 0.0, 1.0)), np.square),
        (("polynomial", (1.0, -2.0, 0.5)), lambda v: 1.0 - 2.0 * v + 0.5 * v * v),
    ]
    worst = 0.0
    for i in range(instances):
        x = random_hermitian((2, 2), gen)
        tag, f = maps[i % len(maps)]
        mapped = np.sort(f(hermitian_eig(x).eigenvalues))
        direct = np.sort(hermitian_eig(tensor_function(x, tag)).eigenvalues)
        worst = max(worst, float(np.max(np.abs(mapped - direct))))
    return worst


def check_exp_log_roundtrip(gen, instances: int = 40) -> float:
    worst = 0.0
    for _ in range(instances):
        x = random_pd((2, 2), gen, 0.3, 3.0)
        back = tensor_exp(tensor_log(x))
        worst = max(worst, _rel_err(back.unfold(), x.unfold()))
    return worst


def check_dilation_identity(gen, instances: int = 40) -> float:
    """Worst gap between the dilation's top eigenvalue and the spectral norm."""
    worst = 0.0
    for i in range(instances):
        if i % 2 == 0:
            y = _random_dense(gen, (2,), (3,))
        else:
            y = _random_dense(gen, (2, 2), (2, 3))
        top = spectral.lambda_max(hermitian_dilation(y))
        worst = max(worst, abs(top - spectral_norm(y)))
    return worst


def _scaled_hermitian(gen, dims, norm_cap: float):
    x = random_hermitian(dims, gen)
    nrm = spectral_norm(x)
    if nrm > norm_cap:
        x = hermitian(tensor_core.scale(x.base, norm_cap / nrm))
    return x


def check_golden_thompson(gen, instances: int = 100) -> float:
    """Worst violation of Tr exp(X+Y) <= Tr(exp(X) * exp(Y))."""
    worst = 0.0
    for _ in range(instances):
        x = _scaled_hermitian(gen, (2, 2), 1.0)
        y = _scaled_hermitian(gen, (2, 2), 1.0)
        lhs = trace(tensor_exp(hermitian(tensor_core.add(x.base, y.base))).base).real
        rhs = trace(
            tensor_core.einstein_product(tensor_exp(x).base, tensor_exp(y).base)
        ).real
        worst = max(worst, lhs - rhs)
    return worst


def check_klein_inequality(gen, instances: int = 100) -> float:
    """Worst violation of Tr Y >= Tr X - Tr X log X + Tr X log Y."""
    worst = 0.0
    for _ in range(instances):
        x = random_pd((2, 2), gen, 0.2, 2.5)
        y = random_pd((2, 2), gen, 0.2, 2.5)
        xm, ym = x.unfold(), y.unfold()
        log_x = tensor_log(x).unfold()
        log_y = tensor_log(y).unfold()
        lhs = np.trace(ym).real
        rhs = np.trace(xm).real - np.trace(xm @ log_x).real + np.trace(xm @ log_y).real
        worst = max(worst, rhs - lhs)
    return worst


def check_log_monotone_concave(gen, instances: int = 100) -> float:
    """Worst semidefinite violation of log monotonicity and midpoint concavity."""
    worst = 0.0
    for _ in range(instances):
        y = random_pd((2, 2), gen, 0.3, 2.0)
        bump = random_hermitian((2, 2), gen, scale=0.5)
        psd = tensor_function(bump, ("polynomial", (0.0, 0.0, 1.0)))
        x = hermitian(tensor_core.add(y.base, psd.base))
        mono = psd_compare(tensor_log(x), tensor_log(y), tol=0.0)
        worst = max(worst, -mono.lambda_min_of_difference)
        a = random_pd((2, 2), gen, 0.3, 2.0)
        b = random_pd((2, 2), gen, 0.3, 2.0)
        mid = hermitian(tensor_core.scale(tensor_core.add(a.base, b.base), 0.5))
        avg_logs = hermitian(
            tensor_core.scale(
                tensor_core.add(tensor_log(a).base, tensor_log(b).base), 0.5
            )
        )
        conc = psd_compare(tensor_log(mid), avg_logs, tol=0.0)
        worst = max(worst, -conc.lambda_min_of_difference)
    return worst


def check_lieb_midpoint(gen, instances: int = 100) -> float:
    """Worst midpoint-concavity violation of t -> Tr exp(H + log(t A1 + (1-t) A2))."""
    worst = 0.0
    for _ in range(instances):
        h = _scaled_hermitian(gen, (2, 2), 0.8)
        a1 = random_pd((2, 2), gen, 0.3, 2.0)
        a2 = random_pd((2, 2), gen, 0.3, 2.0)

        def g(t):
            mix = hermitian(
                tensor_core.add(
                    tensor_core.scale(a1.base, t), tensor_core.scale(a2.base, 1.0 - t)
                )
            )
            inner = hermitian(tensor_core.add(h.base, tensor_log(mix).base))
            return trace(tensor_exp(inner).base).real

        worst = max(worst, 0.5 * g(0.0) + 0.5 * g(1.0) - g(0.5))
    return worst


def check_entropy_joint_convexity(gen, instances: int = 100) -> float:
    """Worst midpoint violation of joint convexity of the relative entropy."""
    worst = 0.0
    for _ in range(instances):
        a1 = random_pd((2, 2), gen, 0.3, 2.0)
        a2 = random_pd((2, 2), gen, 0.3, 2.0)
        b1 = random_pd((2, 2), gen, 0.3, 2.0)
        b2 = random_pd((2, 2), gen, 0.3, 2.0)
        mid_a = hermitian(tensor_core.scale(tensor_core.add(a1.base, a2.base), 0.5))
        mid_b = hermitian(tensor_core.scale(tensor_core.add(b1.base, b2.base), 0.5))
        lhs = relative_entropy(mid_a, mid_b)
        rhs = 0.5 * relative_entropy(a1, b1) + 0.5 * relative_entropy(a2, b2)
        worst = max(worst, lhs - rhs)
    return worst


def check_ensemble_hypotheses(gen, instances: int = 32) -> float:
    """Count of hypothesis violations over quick draws of two ensemble kinds."""
    seed = int(gen.integers(0, 2**31))
    psd = EnsembleSpec(kind="psd_bounded", dims=(2, 2), n=4, T=1.0)
    coeffs = tuple(random_hermitian((2,), gen, 0.8).base for _ in range(3))
    azuma = EnsembleSpec(kind="azuma_martingale", coefficients=coeffs, adaptivity=True)
    problems = certify_draws(psd, RngState(seed), draws=instances)
    problems += certify_draws(azuma, RngState(seed + 1), draws=max(instances // 4, 4))
    return float(len(problems))


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    slack: float

    @property
    def ok(self) -> bool:
        return self.worst <= self.slack


_CHECKS = (
    ("einstein-vs-bruteforce", check_einstein_oracle, 1e-12),
    ("unfold-isomorphism", check_unfold_isomorphism, 1e-12),
    ("spectral-mapping", check_spectral_mapping, 1e-9),
    ("exp-log-roundtrip", check_exp_log_roundtrip, DEFAULT_SLACK),
    ("dilation-identity", check_dilation_identity, DEFAULT_SLACK),
    ("golden-thompson", check_golden_thompson, DEFAULT_SLACK),
    ("klein-inequality", check_klein_inequality, DEFAULT_SLACK),
    ("log-monotone-concave", check_log_monotone_concave, DEFAULT_SLACK),
    ("lieb-midpoint", check_lieb_midpoint, DEFAULT_SLACK),
    ("entropy-joint-convexity", check_entropy_joint_convexity, 0.0 + DEFAULT_SLACK),
    ("ensemble-hypotheses", check_ensemble_hypotheses, 0.0),
)


def run_selftest(seed: int = 20260810, instances: int = 100) -> list[CheckResult]:
    """Run every property suite on seeded instances; order is fixed."""
    results = []
    for i, (name, fn, slack) in enumerate(_CHECKS):
        gen = np.random.Generator(np.random.Philox(key=np.array([seed, i], dtype=np.uint64)))
        try:
            worst = fn(gen, instances)
        except Exception as exc:  # surfaced as a failure, not a crash
            results.append(CheckResult(f"{name} (raised {type(exc).__name__})", math.inf, slack))
            continue
        results.append(CheckResult(name, worst, slack))
    return results
