"""Spectral calculus for Hermitian tensors.

All spectral computation routes through one path: unfold to a dense
Hermitian matrix, call the LAPACK eigensolver, refold.  On top of the
eigendecomposition this module provides scalar functions of a tensor
(exp, log, powers, polynomials), the semidefinite order, Hermitian
dilation of rectangular tensors, relative entropy between positive
definite tensors, and the perspective construction for commuting pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor_core
from .tensor_core import (
    DenseTensor,
    HermitianTensor,
    Shape,
    ShapeMismatchError,
    hermitian,
    refold,
    unfold,
)

# Relative floor under which an eigenvalue counts as non-positive for
# log/entropy domain checks.
PD_FLOOR_REL = 1e-12

# Commutation test scale for the perspective map.
COMMUTE_TOL = 1e-9

_BASIS_TOL = 1e-8


class SpectralDomainError(ValueError):
    """Input outside the domain of the requested scalar map."""


class EigensolverError(RuntimeError):
    """The dense eigensolver failed or returned an inconsistent factorization."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (descending) and an orthonormal eigenbasis of an unfolding."""

    eigenvalues: np.ndarray
    eigenbasis: np.ndarray
    shape: Shape

    def reconstruct(self) -> HermitianTensor:
        m = (self.eigenbasis * self.eigenvalues) @ self.eigenbasis.conj().T
        return hermitian(refold(m, self.shape))


def hermitian_eig(x: HermitianTensor) -> Spectrum:
    """Eigendecomposition of the unfolded tensor; eigenvalues sorted descending."""
    m = x.unfold()
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    d = m.shape[0]
    ortho = np.max(np.abs(vecs.conj().T @ vecs - np.eye(d)))
    recon = np.max(np.abs((vecs * vals) @ vecs.conj().T - m))
    scale = max(float(np.max(np.abs(vals))), 1.0)
    if ortho > _BASIS_TOL or recon > _BASIS_TOL * scale:
        raise EigensolverError(
            f"inconsistent factorization: ortho defect {ortho:.3e}, "
            f"reconstruction defect {recon:.3e}"
        )
    return Spectrum(vals, vecs, x.shape)


def lambda_max(x: HermitianTensor) -> float:
    return float(np.linalg.eigvalsh(x.unfold())[-1])


def lambda_min(x: HermitianTensor) -> float:
    return float(np.linalg.eigvalsh(x.unfold())[0])


def spectral_norm(a: DenseTensor | HermitianTensor) -> float:
    """Largest singular value of the unfolding."""
    if isinstance(a, HermitianTensor):
        vals = np.linalg.eigvalsh(a.unfold())
        return float(max(abs(vals[0]), abs(vals[-1])))
    return float(np.linalg.svd(unfold(a), compute_uv=False)[0])


def _pd_floor(vals: np.ndarray) -> float:
    return PD_FLOOR_REL * max(float(vals[0]), 0.0)


def _scalar_map(f, vals: np.ndarray) -> np.ndarray:
    """Apply a scalar map tag to an eigenvalue array, with domain checks."""
    if f == "exp":
        return np.exp(vals)
    if f == "log":
        if float(vals[-1]) <= _pd_floor(vals):
            raise SpectralDomainError(
                f"log needs a positive definite input, lambda_min = {vals[-1]:.3e}"
            )
        return np.log(vals)
    if callable(f):
        return np.asarray([float(f(v)) for v in vals], dtype=np.float64)
    tag, *args = f
    if tag == "power":
        (p,) = args
        if p < 0 and float(vals[-1]) <= _pd_floor(vals):
            raise SpectralDomainError(
                f"negative power needs a positive definite input, "
                f"lambda_min = {vals[-1]:.3e}"
            )
        if p != int(p) and float(vals[-1]) < -_pd_floor(vals) - PD_FLOOR_REL:
            raise SpectralDomainError(
                f"fractional power needs a positive semidefinite input, "
                f"lambda_min = {vals[-1]:.3e}"
            )
        base = vals if p == int(p) else np.maximum(vals, 0.0)
        return np.power(base, p)
    if tag == "polynomial":
        (coeffs,) = args
        return np.polynomial.polynomial.polyval(vals, np.asarray(coeffs, dtype=np.float64))
    raise ValueError(f"unknown scalar map tag {f!r}")


def tensor_function(x: HermitianTensor, f) -> HermitianTensor:
    """Apply a real scalar map to a Hermitian tensor through its spectrum.

    ``f`` is one of the tags "exp", "log", ("power", p),
    ("polynomial", coeffs ascending), or a real callable.  The eigenvalues
    of the result are the mapped eigenvalues of the input.
    """
    s = hermitian_eig(x)
    mapped = _scalar_map(f, s.eigenvalues)
    m = (s.eigenbasis * mapped) @ s.eigenbasis.conj().T
    return hermitian(refold(m, x.shape))


def tensor_exp(x: HermitianTensor) -> HermitianTensor:
    return tensor_function(x, "exp")


def tensor_log(x: HermitianTensor) -> HermitianTensor:
    return tensor_function(x, "log")


def tensor_power(x: HermitianTensor, p: float) -> HermitianTensor:
    return tensor_function(x, ("power", p))


@dataclass(frozen=True)
class PsdVerdict:
    """Outcome of a semidefinite-order comparison x >= y."""

    lambda_min_of_difference: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.lambda_min_of_difference >= -self.tolerance


def psd_compare(x: HermitianTensor, y: HermitianTensor, tol: float = 1e-10) -> PsdVerdict:
    """Check x - y is positive semidefinite up to the given tolerance."""
    if x.dims != y.dims:
        raise ShapeMismatchError(f"dimension mismatch: {x.dims} vs {y.dims}")
    diff = x.unfold() - y.unfold()
    lmin = float(np.linalg.eigvalsh(diff)[0])
    return PsdVerdict(lmin, tol)


def hermitian_dilation(y: DenseTensor) -> HermitianTensor:
    """Embed a rectangular tensor into a Hermitian one of doubled mode sizes.

    For row dims (I_1..I_M) and col dims (J_1..J_M) the result lives on
    square dims (I_m + J_m) with ``y`` in the top-right block and ``y^H`` in
    the bottom-left block under the mode-wise direct-sum embedding.  Its
    largest eigenvalue equals the spectral norm of ``y``.
    """
    m = len(y.row_dims)
    if len(y.col_dims) != m:
        raise ShapeMismatchError(
            f"dilation needs equal mode counts, got {m} row modes and "
            f"{len(y.col_dims)} column modes"
        )
    dims = tuple(i + j for i, j in zip(y.row_dims, y.col_dims))
    out = np.zeros(dims + dims, dtype=np.complex128)
    top = tuple(slice(0, i) for i in y.row_dims)
    bottom = tuple(slice(i, i + j) for i, j in zip(y.row_dims, y.col_dims))
    out[top + bottom] = y.entries
    out[bottom + top] = tensor_core.conjugate_transpose(y).entries
    return hermitian(DenseTensor(Shape(dims, dims), out))


def _pd_log(x: HermitianTensor, label: str):
    s = hermitian_eig(x)
    if float(s.eigenvalues[-1]) <= _pd_floor(s.eigenvalues):
        raise SpectralDomainError(
            f"{label} must be positive definite, lambda_min = {s.eigenvalues[-1]:.3e}"
        )
    logm = (s.eigenbasis * np.log(s.eigenvalues)) @ s.eigenbasis.conj().T
    return logm


def relative_entropy(a: HermitianTensor, b: HermitianTensor) -> float:
    """Tr a (log a - log b) for positive definite a, b of equal dims."""
    if a.dims != b.dims:
        raise ShapeMismatchError(f"dimension mismatch: {a.dims} vs {b.dims}")
    log_a = _pd_log(a, "first argument")
    log_b = _pd_log(b, "second argument")
    val = np.trace(a.unfold() @ (log_a - log_b))
    return float(val.real)


def _joint_eigenbasis(xm: np.ndarray, ym: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simultaneous diagonalization of two commuting Hermitian matrices.

    Diagonalizes ``ym`` first, then rediagonalizes ``xm`` inside each
    eigenvalue cluster of ``ym`` so degenerate eigenspaces are handled.
    Returns (x eigenvalues, y eigenvalues, joint basis).
    """
    yvals, basis = np.linalg.eigh(ym)
    d = ym.shape[0]
    scale = max(float(np.max(np.abs(yvals))), 1.0)
    gap = 1e-9 * scale
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and yvals[stop] - yvals[stop - 1] <= gap:
            stop += 1
        if stop - start > 1:
            block = basis[:, start:stop]
            sub = block.conj().T @ xm @ block
            _, w = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            basis[:, start:stop] = block @ w
        start = stop
    xrot = basis.conj().T @ xm @ basis
    xvals = np.real(np.diag(xrot))
    off = xrot - np.diag(np.diag(xrot))
    xscale = max(float(np.max(np.abs(xvals))), 1.0)
    if np.max(np.abs(off)) > 1e-6 * xscale:
        raise SpectralDomainError(
            "inputs do not share an eigenbasis; simultaneous "
            f"diagonalization defect {np.max(np.abs(off)):.3e}"
        )
    yrot = np.real(np.diag(basis.conj().T @ ym @ basis))
    return xvals, yrot, basis


def _perspective_scalar(f, xvals: np.ndarray, yvals: np.ndarray) -> np.ndarray:
    ratio = xvals / yvals
    if f == "xlogx":
        out = np.zeros_like(ratio)
        nz = np.abs(ratio) > 0
        if np.any(ratio[nz] <= 0):
            raise SpectralDomainError("x log x needs nonnegative ratios")
        out[nz] = ratio[nz] * np.log(ratio[nz])
        return out * yvals
    return _scalar_map(f, ratio) * yvals


def perspective_map(x: HermitianTensor, y: HermitianTensor, f) -> HermitianTensor:
    """Evaluate f(x y^{-1}) contracted with y for commuting Hermitian x, y.

    Requires the commutator to vanish within COMMUTE_TOL relative to the
    Frobenius norms, and all eigenvalues of y bounded away from zero.
    The map tag "xlogx" applies t log t with the t log t -> 0 convention
    at t = 0.
    """
    if x.dims != y.dims:
        raise ShapeMismatchError(f"dimension mismatch: {x.dims} vs {y.dims}")
    xm, ym = x.unfold(), y.unfold()
    comm = np.linalg.norm(xm @ ym - ym @ xm)
    bound = COMMUTE_TOL * np.linalg.norm(xm) * np.linalg.norm(ym)
    if comm > max(bound, 1e-300):
        raise SpectralDomainError(
            f"inputs do not commute: commutator norm {comm:.3e} > {bound:.3e}"
        )
    xvals, yvals, basis = _joint_eigenbasis(xm, ym)
    yscale = float(np.max(np.abs(yvals)))
    if yscale == 0.0 or float(np.min(np.abs(yvals))) <= PD_FLOOR_REL * yscale:
        raise SpectralDomainError(
            f"second argument is numerically singular, min |eig| = "
            f"{float(np.min(np.abs(yvals))):.3e}"
        )
    hvals = _perspective_scalar(f, xvals, yvals)
    m = (basis * hvals) @ basis.conj().T
    return hermitian(refold(m, x.shape))
