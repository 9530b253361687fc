"""Pipeline assembly: convolution, two-stage pooling, classifier head.

One parameter set serves every graph size up to ``n_max``: node-indexed
tensors are allocated at the maximum and sliced per graph, so cross-scale
batches share weights. The pooling schedule is size-adaptive:

  n > m_out      conv -> pool to max(ceil(n/4), m_out) -> conv -> pool to m_out
  n <= m_out     conv -> conv -> zero-pad features to m_out rows

Checkpoints are a single binary file: a JSON manifest (configuration plus
tensor shapes) followed by raw little-endian float64 tensor data.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .errors import ContractViolationError, FormatError
from .graphs import Graph
from .layers import (
    ACTIVATIONS,
    ClassifierParams,
    GcnLayerParams,
    GwcLayerParams,
    SpectralPoolParams,
    classify,
    diffpool_assign,
    gcn_forward,
    gwc_forward,
    pool_apply,
    spectral_pool_assign,
)
from .spectral import (
    MODE_CLOSED_FORM,
    MODE_FITTED_KERNEL,
    WaveletBasis,
    cosine_transform,
    normalized_laplacian,
    wavelet_bases,
)

# Ablation grid in fixed reporting order: convolution x pooling.
VARIANTS = ("gcn_diffpool", "gcn_spectral", "wavelet_diffpool", "wavelet_spectral")

CHECKPOINT_MAGIC = b"WPCK"
CHECKPOINT_VERSION = 1

_INIT_STREAM = 0x494E4954  # distinct RNG stream per purpose, mixed with the seed


@dataclass(frozen=True)
class ModelConfig:
    feature_dim: int
    class_count: int
    variant: str = "wavelet_spectral"
    n_max: int = 1000
    m_out: int = 4
    scales: tuple[float, ...] = (1.0, 2.0, 3.0)
    order: int = 16
    basis_mode: str = MODE_FITTED_KERNEL
    activation: str = "relu"
    softmax_rows: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractViolationError(
                f"unknown variant {self.variant!r}; expected one of {VARIANTS}"
            )
        if self.feature_dim < 1 or self.class_count < 2:
            raise ContractViolationError("need feature_dim >= 1 and class_count >= 2")
        if self.m_out < 1 or self.n_max < self.m_out:
            raise ContractViolationError("need 1 <= m_out <= n_max")
        if len(self.scales) < 1 or any(s <= 0 for s in self.scales):
            raise ContractViolationError("scales must be positive and nonempty")
        if self.order < 1:
            raise ContractViolationError("order must be >= 1")
        if self.basis_mode not in (MODE_CLOSED_FORM, MODE_FITTED_KERNEL):
            raise ContractViolationError(f"unknown basis mode {self.basis_mode!r}")
        if self.activation not in ACTIVATIONS:
            raise ContractViolationError(f"unknown activation {self.activation!r}")

    @property
    def mid_size_max(self) -> int:
        """Largest possible first-stage pooled size."""
        return max(math.ceil(self.n_max / 4), self.m_out)

    @property
    def uses_wavelets(self) -> bool:
        return self.variant.startswith("wavelet")

    @property
    def uses_spectral_pool(self) -> bool:
        return self.variant.endswith("spectral")


def mid_pool_size(n: int, m_out: int) -> int:
    """First-stage target for an n-node graph: a quarter, floored at m_out."""
    return max(math.ceil(n / 4), m_out)


@dataclass
class PoolStage:
    """One pooling step, recorded for the structure loss.

    ``clusters`` says which axis of the assignment indexes pooled nodes:
    "rows" for the frequency-filter assignment (m x n), "cols" for the
    learned-membership assignment (n x m).
    """

    adjacency: Var   # pre-pool adjacency (n x n)
    assignment: Var
    clusters: str    # "rows" | "cols"


@dataclass
class ForwardResult:
    logits: Var  # (c,)
    probs: Var   # (c,)
    stages: list[PoolStage] = field(default_factory=list)
    pooled_adjacencies: list[Var] = field(default_factory=list)

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.logits.value))


def _glorot(rng: np.random.Generator, shape: tuple[int, ...],
            fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def parameter_names(config: ModelConfig) -> tuple[str, ...]:
    names: list[str] = []
    if config.uses_wavelets:
        names += [f"gwc.theta.{k}" for k in range(len(config.scales))]
        names.append("gwc.bias")
    else:
        names.append("conv1.weight")
    if config.uses_spectral_pool:
        names += ["pool1.theta", "pool2.theta"]
    else:
        names += ["pool1.assign", "pool2.assign"]
    names += ["gcn.weight", "classifier.weight", "classifier.bias"]
    return tuple(sorted(names))


def init_parameters(config: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """Seeded initial tensors for the given variant, keyed by name.

    Node filters start at identity plus uniform Glorot noise so the wavelet
    convolution begins near a smoothing pass-through; biases start at zero.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _INIT_STREAM])))
    n, l, c = config.n_max, config.feature_dim, config.class_count
    m1, m2 = config.mid_size_max, config.m_out
    tensors: dict[str, np.ndarray] = {}
    if config.uses_wavelets:
        for k in range(len(config.scales)):
            tensors[f"gwc.theta.{k}"] = np.eye(n) + _glorot(rng, (n, n), n, n)
        tensors["gwc.bias"] = np.zeros((n, l))
    else:
        tensors["conv1.weight"] = _glorot(rng, (l, l), l, l)
    if config.uses_spectral_pool:
        tensors["pool1.theta"] = _glorot(rng, (m1, n), n, m1)
        tensors["pool2.theta"] = _glorot(rng, (m2, m1), m1, m2)
    else:
        tensors["pool1.assign"] = _glorot(rng, (l, m1), l, m1)
        tensors["pool2.assign"] = _glorot(rng, (l, m2), l, m2)
    tensors["gcn.weight"] = _glorot(rng, (l, l), l, l)
    tensors["classifier.weight"] = _glorot(rng, (m2 * l, c), m2 * l, c)
    tensors["classifier.bias"] = np.zeros(c)
    return tensors


class CrossScaleModel:
    """Graph classifier with shared parameters across graph sizes."""

    def __init__(self, config: ModelConfig, seed: int = 0,
                 tensors: dict[str, np.ndarray] | None = None):
        self.config = config
        self.seed = seed
        if tensors is None:
            tensors = init_parameters(config, seed)
        expected = set(parameter_names(config))
        if set(tensors) != expected:
            missing = expected - set(tensors)
            extra = set(tensors) - expected
            raise ContractViolationError(
                f"parameter names mismatch (missing={sorted(missing)}, extra={sorted(extra)})"
            )
        self.params: dict[str, Var] = {
            name: ad.parameter(np.array(value, dtype=np.float64))
            for name, value in sorted(tensors.items())
        }
        self._basis_cache: dict[str, list[WaveletBasis]] = {}
        self._wire()

    def _wire(self) -> None:
        cfg, p = self.config, self.params
        if cfg.uses_wavelets:
            self.gwc = GwcLayerParams(
                scales=cfg.scales,
                thetas=[p[f"gwc.theta.{k}"] for k in range(len(cfg.scales))],
                bias=p["gwc.bias"],
                activation=cfg.activation,
            )
        else:
            self.conv1 = GcnLayerParams(p["conv1.weight"], cfg.activation)
        if cfg.uses_spectral_pool:
            self.pool1 = SpectralPoolParams(cfg.mid_size_max, p["pool1.theta"], cfg.softmax_rows)
            self.pool2 = SpectralPoolParams(cfg.m_out, p["pool2.theta"], cfg.softmax_rows)
        self.gcn = GcnLayerParams(p["gcn.weight"], cfg.activation)
        self.classifier = ClassifierParams(p["classifier.weight"], p["classifier.bias"])

    # -- parameter access -------------------------------------------------

    def state(self) -> dict[str, np.ndarray]:
        return {name: var.value.copy() for name, var in self.params.items()}

    def load_state(self, tensors: dict[str, np.ndarray]) -> None:
        if set(tensors) != set(self.params):
            raise ContractViolationError("checkpoint tensor names do not match model")
        for name, value in tensors.items():
            arr = np.asarray(value, dtype=np.float64)
            if arr.shape != self.params[name].value.shape:
                raise ContractViolationError(
                    f"tensor {name} has shape {arr.shape}, "
                    f"expected {self.params[name].value.shape}"
                )
            self.params[name].value = arr.copy()

    # -- forward ----------------------------------------------------------

    def bases_for(self, graph: Graph) -> list[WaveletBasis]:
        key = graph.id
        if key and key in self._basis_cache:
            return self._basis_cache[key]
        l_tilde = normalized_laplacian(graph.adjacency)
        bases = wavelet_bases(l_tilde, self.config.scales, self.config.order,
                              self.config.basis_mode)
        if key:
            self._basis_cache[key] = bases
        return bases

    def _assign(self, stage: int, adjacency: Var, features: Var,
                n: int, m: int) -> PoolStage:
        if self.config.uses_spectral_pool:
            params = self.pool1 if stage == 1 else self.pool2
            s = spectral_pool_assign(n, params, cosine_transform(n), cosine_transform(m))
            return PoolStage(adjacency, s, "rows")
        weight = self.params[f"pool{stage}.assign"][:, :m]
        s = diffpool_assign(adjacency, features, weight)
        return PoolStage(adjacency, s, "cols")

    def forward(self, graph: Graph) -> ForwardResult:
        cfg = self.config
        n = graph.node_count
        if n > cfg.n_max:
            raise ContractViolationError(f"graph has {n} nodes, model allocated for {cfg.n_max}")
        if graph.feature_dim != cfg.feature_dim:
            raise ContractViolationError(
                f"graph features have width {graph.feature_dim}, model expects {cfg.feature_dim}"
            )
        adjacency = ad.constant(graph.adjacency)
        features = ad.constant(graph.features)
        if cfg.uses_wavelets:
            h = gwc_forward(features, self.gwc, self.bases_for(graph))
        else:
            h = gcn_forward(adjacency, features, self.conv1)
        stages: list[PoolStage] = []
        pooled_adjacencies: list[Var] = []
        if n > cfg.m_out:
            m1 = mid_pool_size(n, cfg.m_out)
            stage1 = self._assign(1, adjacency, h, n, m1)
            stages.append(stage1)
            s1 = stage1.assignment if stage1.clusters == "rows" else ad.transpose(stage1.assignment)
            adjacency, h = pool_apply(s1, adjacency, h)
            pooled_adjacencies.append(adjacency)
            h = gcn_forward(adjacency, h, self.gcn)
            if m1 > cfg.m_out:
                stage2 = self._assign(2, adjacency, h, m1, cfg.m_out)
                stages.append(stage2)
                s2 = (stage2.assignment if stage2.clusters == "rows"
                      else ad.transpose(stage2.assignment))
                adjacency, h = pool_apply(s2, adjacency, h)
                pooled_adjacencies.append(adjacency)
        else:
            h = gcn_forward(adjacency, h, self.gcn)
            if n < cfg.m_out:
                h = ad.pad_rows(h, cfg.m_out)
        logits, probs = classify(h, self.classifier)
        return ForwardResult(logits, probs, stages, pooled_adjacencies)

    def predict(self, graph: Graph) -> int:
        return self.forward(graph).prediction


# -- checkpoint serialization ---------------------------------------------


def config_to_dict(config: ModelConfig) -> dict:
    d = asdict(config)
    d["scales"] = list(config.scales)
    return d


def config_from_dict(d: dict) -> ModelConfig:
    d = dict(d)
    d["scales"] = tuple(float(s) for s in d.get("scales", ()))
    return ModelConfig(**d)


def save_checkpoint(path, config: ModelConfig, tensors: dict[str, np.ndarray],
                    extra: dict | None = None) -> None:
    """Single-file checkpoint: JSON manifest + raw float64 tensors."""
    names = sorted(tensors)
    manifest = {
        "format": "wavepool-checkpoint",
        "version": CHECKPOINT_VERSION,
        "config": config_to_dict(config),
        "tensors": {name: list(np.asarray(tensors[name]).shape) for name in names},
        "extra": extra or {},
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
    buf.write(blob)
    for name in names:
        arr = np.ascontiguousarray(np.asarray(tensors[name], dtype=np.float64))
        buf.write(arr.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> tuple[ModelConfig, dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint file (bad magic)")
    version, blob_len = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    try:
        manifest = json.loads(data[offset:offset + blob_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt checkpoint manifest: {exc}") from exc
    offset += blob_len
    tensors: dict[str, np.ndarray] = {}
    for name, shape in manifest["tensors"].items():
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(data):
            raise FormatError(f"{path}: truncated tensor data for {name}")
        flat = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        tensors[name] = flat.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after tensors")
    return config_from_dict(manifest["config"]), tensors, manifest.get("extra", {})


def model_from_checkpoint(path, seed: int = 0) -> CrossScaleModel:
    config, tensors, _ = load_checkpoint(path)
    return CrossScaleModel(config, seed=seed, tensors=tensors)
