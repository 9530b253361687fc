"""Forward computations for the pipeline layers.

All operations consume and produce autodiff ``Var`` nodes so the training
module can backpropagate through them. Learnable tensors are allocated at a
configured maximum size and sliced to each graph's node count; the leading
rows/columns of the pooling filter correspond to the lowest frequencies of
the cosine transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .errors import ContractViolationError, NumericError, PoolingDegenerateError
from .spectral import SpectralTransform, WaveletBasis

ACTIVATIONS = ("relu", "identity")


def activate(x: Var, activation: str) -> Var:
    if activation == "relu":
        return ad.relu(x)
    if activation == "identity":
        return x
    raise ContractViolationError(f"unknown activation {activation!r}")


def activation_lipschitz(activation: str) -> float:
    if activation not in ACTIVATIONS:
        raise ContractViolationError(f"unknown activation {activation!r}")
    return 1.0  # both relu and identity are 1-Lipschitz


def _check_finite(name: str, var: Var) -> None:
    if not np.all(np.isfinite(var.value)):
        raise ContractViolationError(f"parameter {name} contains non-finite entries")


@dataclass
class GwcLayerParams:
    """Multi-scale wavelet convolution: per-scale node filters plus a bias."""

    scales: tuple[float, ...]
    thetas: list[Var]  # one (n_max, n_max) filter per scale
    bias: Var          # (n_max, feature_dim)
    activation: str = "relu"

    def __post_init__(self):
        if len(self.scales) < 1 or len(self.thetas) != len(self.scales):
            raise ContractViolationError("need one theta per scale and at least one scale")
        for k, theta in enumerate(self.thetas):
            _check_finite(f"gwc.theta.{k}", theta)
        _check_finite("gwc.bias", self.bias)


@dataclass
class SpectralPoolParams:
    """Frequency-domain assignment filter; rows map to pooled nodes."""

    target_size: int
    theta: Var  # (m_max, n_max)
    softmax_rows: bool = True

    def __post_init__(self):
        if self.target_size < 1:
            raise ContractViolationError("target_size must be positive")
        _check_finite("pool.theta", self.theta)


@dataclass
class GcnLayerParams:
    weight: Var  # (l_in, l_out)
    activation: str = "relu"

    def __post_init__(self):
        _check_finite("gcn.weight", self.weight)


@dataclass
class ClassifierParams:
    weight: Var  # (m_out * l, c)
    bias: Var    # (c,)

    def __post_init__(self):
        _check_finite("classifier.weight", self.weight)
        _check_finite("classifier.bias", self.bias)


def gwc_forward(h: Var, params: GwcLayerParams, bases: list[WaveletBasis]) -> Var:
    """Wavelet convolution: average over scales of act(psi theta psi^+ h + bias).

    The per-scale filter acts in the wavelet domain; products are evaluated
    right-to-left so the cost stays at n^2 l per scale.
    """
    n, width = h.value.shape
    if len(bases) != len(params.scales):
        raise ContractViolationError(
            f"got {len(bases)} bases for {len(params.scales)} scales"
        )
    n_max = params.thetas[0].value.shape[0]
    if n > n_max:
        raise ContractViolationError(f"graph size {n} exceeds theta allocation {n_max}")
    if params.bias.value.shape[1] != width:
        raise ContractViolationError(
            f"bias width {params.bias.value.shape[1]} != feature width {width}"
        )
    bias = params.bias[:n, :]
    total = None
    for theta_full, basis in zip(params.thetas, bases):
        if basis.size != n:
            raise ContractViolationError(
                f"basis for scale {basis.scale} has size {basis.size}, graph has {n}"
            )
        theta = theta_full[:n, :n]
        psi = ad.constant(basis.psi)
        psi_pinv = ad.constant(basis.psi_pinv)
        filtered = psi @ (theta @ (psi_pinv @ h))
        scaled = activate(filtered + bias, params.activation)
        total = scaled if total is None else total + scaled
    return ad.scale(total, 1.0 / len(params.scales))


def spectral_pool_assign(
    n: int,
    params: SpectralPoolParams,
    xi_n: SpectralTransform,
    xi_m: SpectralTransform,
) -> Var:
    """Assignment matrix S = xi_m theta_slice xi_n^T, optionally row-softmaxed.

    The pooled size is xi_m.size; it must be strictly smaller than n.
    """
    m = xi_m.size
    if m >= n:
        raise PoolingDegenerateError(f"pooled size {m} must be < graph size {n}")
    if xi_n.size != n:
        raise ContractViolationError(f"xi_n has size {xi_n.size}, graph has {n}")
    mm, nm = params.theta.value.shape
    if m > mm or n > nm:
        raise ContractViolationError(
            f"pool filter allocation {params.theta.value.shape} too small for ({m}, {n})"
        )
    theta = params.theta[:m, :n]
    raw = ad.constant(xi_m.matrix) @ theta @ ad.constant(xi_n.matrix.T)
    if params.softmax_rows:
        return ad.row_softmax(raw)
    return raw


def pool_apply(s: Var, adjacency: Var, features: Var) -> tuple[Var, Var]:
    """Pool structure and features: A' = S A S^T, X' = S X."""
    m, n = s.value.shape
    if adjacency.value.shape != (n, n):
        raise ContractViolationError(
            f"adjacency shape {adjacency.value.shape} incompatible with S {s.value.shape}"
        )
    if features.value.shape[0] != n:
        raise ContractViolationError(
            f"features rows {features.value.shape[0]} incompatible with S columns {n}"
        )
    pooled_adj = s @ adjacency @ ad.transpose(s)
    pooled_feats = s @ features
    return pooled_adj, pooled_feats


def gcn_forward(adjacency: Var, features: Var, params: GcnLayerParams) -> Var:
    """Renormalized graph convolution act(D^{-1/2} (A + I) D^{-1/2} X W).

    The adjacency may carry real (pooled) weights; a row of A + I whose sum
    is not positive cannot be normalized and raises.
    """
    n = adjacency.value.shape[0]
    a_hat = adjacency + ad.constant(np.eye(n))
    sums = ad.row_sum(a_hat)
    if np.any(sums.value <= 0):
        bad = int(np.argmax(sums.value.ravel() <= 0))
        raise NumericError(f"row {bad} of A + I has nonpositive sum; cannot normalize")
    inv_sqrt = ad.rsqrt(sums)
    normalized = inv_sqrt * a_hat * ad.transpose(inv_sqrt)
    return activate(normalized @ features @ params.weight, params.activation)


def diffpool_assign(adjacency: Var, features: Var, weight: Var) -> Var:
    """Assignment S = softmax(GCN(A, X)) with clusters along columns (n x m)."""
    gcn = GcnLayerParams(weight=weight, activation="identity")
    return ad.row_softmax(gcn_forward(adjacency, features, gcn))


def classify(x_final: Var, params: ClassifierParams) -> tuple[Var, Var]:
    """Flatten the fixed-size pooled features and apply the linear head.

    Returns (logits, probabilities), both length-c vectors.
    """
    q, c = params.weight.value.shape
    rows, width = x_final.value.shape
    if rows * width != q:
        raise ContractViolationError(
            f"classifier expects {q} inputs, pipeline produced {rows}x{width}; "
            "the pooled size is wrong"
        )
    flat = ad.reshape(x_final, (1, q))
    logits = flat @ params.weight + params.bias
    probs = ad.row_softmax(logits)
    return ad.reshape(logits, (c,)), ad.reshape(probs, (c,))
