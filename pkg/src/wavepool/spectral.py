"""Spectral operators: normalized Laplacian, Chebyshev-approximated wavelet
bases with pseudoinverses, and the orthogonal cosine transform used by the
pooling layer.

The wavelet basis at scale ``f`` is a degree-``M`` Chebyshev polynomial in
the shifted Laplacian ``L - I`` (spectrum mapped from [0, 2] to [-1, 1]).
Two coefficient modes exist:

* ``fitted_kernel`` - Chebyshev-Gauss quadrature fit of the low-pass kernel
  ``g(x) = exp(-f (x + 1))``, i.e. ``exp(-f lambda)`` on the Laplacian
  spectrum. This is the default and converges to the dense eigendecomposition
  reference as M grows.
* ``closed_form`` - coefficients ``2 exp(-f) J_i(-f)`` built from first-kind
  Bessel values. Kept as an opt-in alternative; its reconstruction target is
  oscillatory rather than low-pass, so only internal convergence is asserted.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, DomainError, NumericError

MODE_CLOSED_FORM = "closed_form"
MODE_FITTED_KERNEL = "fitted_kernel"
_MODES = (MODE_CLOSED_FORM, MODE_FITTED_KERNEL)

BESSEL_MAX_ARG = 50.0
BESSEL_TERM_TOL = 1e-16


@dataclass(frozen=True)
class WaveletBasis:
    scale: float
    order: int
    coefficients: np.ndarray  # length order + 1
    psi: np.ndarray           # (n, n), symmetric
    psi_pinv: np.ndarray      # (n, n), Moore-Penrose pseudoinverse of psi
    mode: str

    @property
    def size(self) -> int:
        return self.psi.shape[0]


@dataclass(frozen=True)
class SpectralTransform:
    size: int
    matrix: np.ndarray  # (n, n), orthogonal


def normalized_laplacian(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.

    Rows and columns of isolated nodes are all zero, which makes them
    eigenvectors with eigenvalue 0 and therefore fixed points of any wavelet
    whose kernel satisfies g(0) = 1.
    """
    adj = np.asarray(adjacency, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ContractViolationError(f"adjacency must be square, got {adj.shape}")
    if not np.allclose(adj, adj.T):
        raise ContractViolationError("adjacency must be symmetric")
    if np.any(np.diag(adj) != 0):
        raise ContractViolationError("adjacency must have a zero diagonal")
    degrees = adj.sum(axis=1)
    inv_sqrt = np.where(degrees > 0, 1.0 / np.sqrt(np.maximum(degrees, 1e-300)), 0.0)
    lap = -inv_sqrt[:, None] * adj * inv_sqrt[None, :]
    lap[np.diag_indices_from(lap)] = (degrees > 0).astype(float)
    return lap


def chebyshev_apply(l_scaled, order: int, operand=None) -> list:
    """Chebyshev terms T_0 .. T_order of a matrix (or scalar) argument.

    Uses the three-term recurrence T_i = 2 x T_{i-1} - T_{i-2}. The argument's
    spectrum must lie in [-1, 1]; callers pass the shifted Laplacian L - I.
    When ``operand`` is given, returns each T_i applied to it (T_i @ operand).
    """
    if order < 0:
        raise ContractViolationError(f"Chebyshev order must be >= 0, got {order}")
    if np.isscalar(l_scaled):
        x = float(l_scaled)
        base = 1.0 if operand is None else operand
        terms = [base]
        if order >= 1:
            terms.append(x * base)
        for _ in range(2, order + 1):
            terms.append(2.0 * x * terms[-1] - terms[-2])
        return terms

    mat = np.asarray(l_scaled, dtype=float)
    base = np.eye(mat.shape[0]) if operand is None else np.asarray(operand, dtype=float)
    terms = [base]
    if order >= 1:
        terms.append(mat @ base)
    for _ in range(2, order + 1):
        terms.append(2.0 * (mat @ terms[-1]) - terms[-2])
    return terms


def bessel_j(order: int, x: float) -> float:
    """First-kind Bessel function J_i(x) by its power series.

    Terms are generated by the ratio recurrence and summation stops once the
    next term's magnitude drops below 1e-16. Arguments are limited to
    |x| <= 50; alternating-term cancellation amplifies roundoff as |x| grows,
    so full double precision holds only for small |x| (the wavelet scales
    used here stay below 5).
    """
    if order < 0:
        raise ContractViolationError(f"Bessel order must be >= 0, got {order}")
    if abs(x) > BESSEL_MAX_ARG:
        raise DomainError(f"|x| = {abs(x)} outside series validity window [0, {BESSEL_MAX_ARG}]")
    half = x / 2.0
    term = half**order / math.factorial(order)
    total = term
    k = 1
    ratio = -(half * half)
    while True:
        term = term * ratio / (k * (k + order))
        if abs(term) < BESSEL_TERM_TOL:
            break
        total += term
        k += 1
        if k > 400:  # unreachable within the validity window
            raise NumericError("Bessel series failed to converge")
    return total


def wavelet_coefficients(scale: float, order: int, mode: str = MODE_FITTED_KERNEL) -> np.ndarray:
    """Chebyshev expansion coefficients c_0 .. c_order for scale ``scale``.

    closed_form: c_i = 2 exp(-f) J_i(-f).
    fitted_kernel: Chebyshev-Gauss quadrature of exp(-f (x + 1)) on [-1, 1]
    with 4 (order + 1) nodes.
    """
    if scale < 0:
        raise ContractViolationError(f"scale must be >= 0, got {scale}")
    if order < 1:
        raise ContractViolationError(f"order must be >= 1, got {order}")
    if mode not in _MODES:
        raise ContractViolationError(f"unknown mode {mode!r}")
    if mode == MODE_CLOSED_FORM:
        return np.array([2.0 * math.exp(-scale) * bessel_j(i, -scale) for i in range(order + 1)])
    nodes = 4 * (order + 1)
    theta = math.pi * (np.arange(nodes) + 0.5) / nodes
    values = np.exp(-scale * (np.cos(theta) + 1.0))
    i = np.arange(order + 1)
    return (2.0 / nodes) * (np.cos(np.outer(i, theta)) @ values)


def pseudoinverse(matrix: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below n * machine_epsilon * sigma_max are treated as zero
    (standard rank-revealing cutoff).
    """
    mat = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(mat)):
        raise ContractViolationError("pseudoinverse requires finite entries")
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    cutoff = max(mat.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    s_inv = np.where(s > cutoff, 1.0 / np.maximum(s, 1e-300), 0.0)
    return (vt.T * s_inv) @ u.T


def wavelet_basis(
    l_tilde: np.ndarray, scale: float, order: int, mode: str = MODE_FITTED_KERNEL
) -> WaveletBasis:
    """Wavelet basis psi = c_0/2 I + sum_i c_i T_i(L - I) plus its pseudoinverse."""
    return wavelet_bases(l_tilde, [scale], order, mode)[0]


def wavelet_bases(
    l_tilde: np.ndarray, scales, order: int, mode: str = MODE_FITTED_KERNEL
) -> list[WaveletBasis]:
    """Bases for several scales sharing one Chebyshev recurrence pass."""
    lap = np.asarray(l_tilde, dtype=float)
    shifted = lap - np.eye(lap.shape[0])
    terms = chebyshev_apply(shifted, order)
    bases = []
    for scale in scales:
        coeffs = wavelet_coefficients(scale, order, mode)
        psi = 0.5 * coeffs[0] * terms[0].copy()
        for i in range(1, order + 1):
            psi += coeffs[i] * terms[i]
        psi = 0.5 * (psi + psi.T)  # polynomial of a symmetric matrix; kill rounding skew
        bases.append(
            WaveletBasis(
                scale=float(scale),
                order=order,
                coefficients=coeffs,
                psi=psi,
                psi_pinv=pseudoinverse(psi),
                mode=mode,
            )
        )
    return bases


def exact_wavelet_oracle(l_tilde: np.ndarray, scale: float, kernel) -> np.ndarray:
    """Dense eigendecomposition reference: U diag(kernel(scale * lambda)) U^T.

    Cubic in n; intended for tests and small graphs only (n <= 500).
    """
    lap = np.asarray(l_tilde, dtype=float)
    if lap.shape[0] > 500:
        raise ContractViolationError("oracle limited to n <= 500")
    try:
        eigvals, eigvecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    filtered = np.array([kernel(scale * lam) for lam in eigvals])
    return (eigvecs * filtered) @ eigvecs.T


@lru_cache(maxsize=64)
def cosine_transform(n: int) -> SpectralTransform:
    """Orthonormal DCT-II matrix; row k holds frequency k, and xi @ xi.T = I."""
    if n < 1:
        raise ContractViolationError(f"transform size must be >= 1, got {n}")
    j = np.arange(n)
    k = np.arange(n)[:, None]
    xi = np.cos(np.pi * (2 * j + 1) * k / (2 * n))
    xi[0] *= np.sqrt(1.0 / n)
    xi[1:] *= np.sqrt(2.0 / n)
    xi.setflags(write=False)
    return SpectralTransform(size=n, matrix=xi)


# ---------------------------------------------------------------------------
# Binary cache format for wavelet bases

_MAGIC = b"WVBS"


def save_wavelet_basis(path: str | Path, basis: WaveletBasis) -> None:
    """Dump a basis as little-endian float64 blocks with a fixed header."""
    n = basis.size
    mode_flag = _MODES.index(basis.mode)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqdq", n, basis.order, basis.scale, mode_flag))
        fh.write(basis.coefficients.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.psi, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.psi_pinv, dtype="<f8").tobytes())


def load_wavelet_basis(path: str | Path) -> WaveletBasis:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ContractViolationError(f"{path}: not a wavelet basis dump")
        n, order, scale, mode_flag = struct.unpack("<qqdq", fh.read(32))
        coeffs = np.frombuffer(fh.read(8 * (order + 1)), dtype="<f8").copy()
        psi = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
        psi_pinv = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
    return WaveletBasis(
        scale=scale, order=order, coefficients=coeffs, psi=psi, psi_pinv=psi_pinv,
        mode=_MODES[mode_flag],
    )
