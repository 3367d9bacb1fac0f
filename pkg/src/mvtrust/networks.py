"""Learnable sub-networks.

Per-view mappers lift raw features into a shared width, a common extractor
and per-view specific extractors produce the two representations, a
discriminator guesses the source view of common representations, a
prediction head supervises the common subspace, evidence heads emit
non-negative per-class evidence, and three small square matrices drive the
inter-view attention.  Forward passes on shared read-only parameters are
safe concurrently; mutation belongs to the training loop.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import autodiff as ad
from .errors import ContractError, ShapeError

CHECKPOINT_FORMAT = "mvtrust-checkpoint/1"

_ACTIVATIONS = {
    "linear": lambda t: t,
    "relu": ad.relu,
    "sigmoid": ad.sigmoid,
    "softplus": ad.softplus,
    "softmax": ad.softmax_rows,
}


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input first) plus activation tags and an init seed."""

    widths: tuple
    hidden_activation: str = "relu"
    output_activation: str = "linear"
    seed: int = 0

    def __post_init__(self):
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ContractError(f"MlpSpec needs >= 1 layer of positive widths, got {self.widths}")
        for tag in (self.hidden_activation, self.output_activation):
            if tag not in _ACTIVATIONS:
                raise ContractError(f"unknown activation tag {tag!r}")


class Mlp:
    """Dense layers with uniform fan-in initialization (+-1/sqrt(fan_in))."""

    def __init__(self, spec: MlpSpec):
        self.spec = spec
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(ad.Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out))))
            self.biases.append(ad.Tensor(rng.uniform(-bound, bound, size=fan_out)))

    def forward(self, x, detach_params=False):
        if x.shape[-1] != self.spec.widths[0]:
            raise ShapeError(
                f"mlp: input width {x.shape[-1]} does not match expected {self.spec.widths[0]}"
            )
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if detach_params:
                w, b = w.detach(), b.detach()
            x = x @ w + b
            tag = self.spec.output_activation if i == n_layers - 1 else self.spec.hidden_activation
            x = _ACTIVATIONS[tag](x)
        return x

    def named_params(self, prefix):
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"{prefix}.w{i}", w))
            out.append((f"{prefix}.b{i}", b))
        return out


@dataclass(frozen=True)
class ModelSpec:
    """Shape table for the full model; the parameter count follows from it."""

    view_dims: tuple
    n_classes: int
    subspace_dim: int = 64
    disc_hidden: int = 64
    evidence_hidden: int = 64
    evidence_activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        if len(self.view_dims) < 1 or any(d < 1 for d in self.view_dims):
            raise ContractError(f"view_dims must be positive, got {self.view_dims}")
        if self.n_classes < 2:
            raise ContractError("need at least two classes")
        if self.evidence_activation not in ("relu", "softplus"):
            raise ContractError(f"evidence activation must be relu or softplus, got {self.evidence_activation!r}")

    @property
    def n_views(self):
        return len(self.view_dims)


class Model:
    """All learnable parameters plus the forward passes of each sub-network."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        v, l, q = spec.n_views, spec.subspace_dim, spec.n_classes
        seeds = np.random.SeedSequence(spec.seed).generate_state(3 * v + 6)
        s = iter(int(x) for x in seeds)

        self.view_mappers = [
            Mlp(MlpSpec((d, l), output_activation="relu", seed=next(s))) for d in spec.view_dims
        ]
        self.common_extractor = Mlp(MlpSpec((l, l), output_activation="relu", seed=next(s)))
        self.specific_extractors = [
            Mlp(MlpSpec((d, l), output_activation="relu", seed=next(s))) for d in spec.view_dims
        ]
        self.discriminator = Mlp(
            MlpSpec((l, spec.disc_hidden, v), output_activation="softmax", seed=next(s))
        )
        self.common_predictor = Mlp(MlpSpec((l, q), output_activation="sigmoid", seed=next(s)))
        self.evidence_common = Mlp(
            MlpSpec((l, spec.evidence_hidden, q), output_activation=spec.evidence_activation, seed=next(s))
        )
        self.evidence_specific = [
            Mlp(MlpSpec((l, spec.evidence_hidden, q), output_activation=spec.evidence_activation, seed=next(s)))
            for _ in range(v)
        ]
        rng = np.random.default_rng(np.random.SeedSequence(next(s)))
        bound = 1.0 / np.sqrt(v)
        self.w_query = ad.Tensor(rng.uniform(-bound, bound, size=(v, v)))
        self.w_key = ad.Tensor(rng.uniform(-bound, bound, size=(v, v)))
        self.w_value = ad.Tensor(rng.uniform(-bound, bound, size=(v, v)))

    # -- forward passes -----------------------------------------------------

    def encode_common(self, x, view):
        """Common-subspace representation of view ``view`` features."""
        return self.common_extractor.forward(self.view_mappers[view].forward(x))

    def encode_specific(self, x, view):
        """View-specific representation of view ``view`` features."""
        return self.specific_extractors[view].forward(x)

    def discriminate(self, c, detach_params=False):
        """Row-softmax view probabilities for common representations."""
        return self.discriminator.forward(c, detach_params=detach_params)

    def predict_common(self, c):
        """Per-class sigmoid outputs of the common prediction head."""
        return self.common_predictor.forward(c)

    def evidence_from_common(self, c):
        return self.evidence_common.forward(c)

    def evidence_from_specific(self, s, view):
        return self.evidence_specific[view].forward(s)

    # -- parameter bookkeeping ----------------------------------------------

    def named_params(self):
        out = []
        for i, m in enumerate(self.view_mappers):
            out.extend(m.named_params(f"mapper{i}"))
        out.extend(self.common_extractor.named_params("common"))
        for i, m in enumerate(self.specific_extractors):
            out.extend(m.named_params(f"specific{i}"))
        out.extend(self.discriminator.named_params("disc"))
        out.extend(self.common_predictor.named_params("pred"))
        out.extend(self.evidence_common.named_params("ev_common"))
        for i, m in enumerate(self.evidence_specific):
            out.extend(m.named_params(f"ev_specific{i}"))
        out.append(("attn.w_query", self.w_query))
        out.append(("attn.w_key", self.w_key))
        out.append(("attn.w_value", self.w_value))
        return out

    def params(self):
        return [t for _, t in self.named_params()]

    def trainable_params(self, uniform_attention=False):
        """Parameters that actually receive gradients under the given switches."""
        skip = {"attn.w_query", "attn.w_key"} if uniform_attention else set()
        return [t for name, t in self.named_params() if name not in skip]

    def param_count(self):
        return sum(t.size for t in self.params())

    # -- checkpoint io --------------------------------------------------------

    def save(self, path, extra_meta=None):
        """Write a versioned .npz checkpoint: parameter arrays plus JSON headers."""
        arrays = {name: t.data for name, t in self.named_params()}
        arrays["__format__"] = np.array(CHECKPOINT_FORMAT)
        arrays["__spec__"] = np.array(json.dumps(asdict(self.spec), sort_keys=True))
        arrays["__meta__"] = np.array(json.dumps(extra_meta or {}, sort_keys=True))
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path):
        """Rebuild a model from ``save`` output; returns (model, extra_meta)."""
        with np.load(path, allow_pickle=False) as bundle:
            fmt = str(bundle["__format__"])
            if fmt != CHECKPOINT_FORMAT:
                raise ContractError(f"unsupported checkpoint format {fmt!r}")
            spec_dict = json.loads(str(bundle["__spec__"]))
            spec_dict["view_dims"] = tuple(spec_dict["view_dims"])
            spec = ModelSpec(**spec_dict)
            model = cls(spec)
            for name, tensor in model.named_params():
                stored = bundle[name]
                if stored.shape != tensor.data.shape:
                    raise ContractError(
                        f"checkpoint entry {name} has shape {stored.shape}, expected {tensor.data.shape}"
                    )
                tensor.data = stored.astype(np.float64)
            meta = json.loads(str(bundle["__meta__"]))
        return model, meta
