"""Fully-connected UDF evaluator loaded from serialized weights.

Weight files are JSON with keys ``encoding_order``, ``layer_sizes``,
``weights`` (row-major matrices, one row per output unit), ``biases``,
``latent_dim`` and ``d_max``. Input coordinates pass through a Fourier
feature map before the first layer: for each coordinate x the features are
[x] followed by [sin(2^k pi x), cos(2^k pi x)] for k = 0..order-1, sines of
all three coordinates before cosines within each octave. An optional latent
code is appended after the encoded coordinates. Hidden layers use the
rectifier; the final scalar passes through an absolute value (and an
optional clamp at ``d_max``) so the field is a valid unsigned distance.

Spatial gradients and latent sensitivities come from a hand-rolled
reverse-mode pass over the same weights.
"""

from __future__ import annotations

import json

import numpy as np

from .fields import UdfField


class WeightFileError(ValueError):
    pass


def encoded_dim(order: int) -> int:
    return 3 * (1 + 2 * order)


def positional_encoding(pts: np.ndarray, order: int) -> np.ndarray:
    feats = [pts]
    for k in range(order):
        w = (2.0 ** k) * np.pi
        feats.append(np.sin(w * pts))
        feats.append(np.cos(w * pts))
    return np.concatenate(feats, axis=1)


def _encoding_jacobian_apply(pts: np.ndarray, order: int, grad_enc: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. encoded features back to the raw coordinates."""
    g = grad_enc[:, 0:3].copy()
    col = 3
    for k in range(order):
        w = (2.0 ** k) * np.pi
        g += grad_enc[:, col:col + 3] * (w * np.cos(w * pts))
        col += 3
        g += grad_enc[:, col:col + 3] * (-w * np.sin(w * pts))
        col += 3
    return g


class MlpUdf(UdfField):
    """Rectifier MLP over Fourier-encoded coordinates plus a latent code."""

    def __init__(self, weights, biases, encoding_order: int = 5,
                 latent_dim: int = 0, latent=None, d_max: float | None = None):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64).reshape(-1) for b in biases]
        self.encoding_order = int(encoding_order)
        self.latent_dim = int(latent_dim)
        self.d_max = None if d_max is None else float(d_max)
        self.param_dim = self.latent_dim
        if latent is None:
            latent = np.zeros(self.latent_dim)
        # copy: fields are immutable, so never alias caller arrays
        self.latent = np.array(latent, dtype=np.float64).reshape(-1)
        self._validate()

    def _validate(self):
        if len(self.weights) != len(self.biases):
            raise WeightFileError("weights and biases count differ")
        if not self.weights:
            raise WeightFileError("network has no layers")
        expected_in = encoded_dim(self.encoding_order) + self.latent_dim
        if self.weights[0].shape[1] != expected_in:
            raise WeightFileError(
                f"layer 0 expects {self.weights[0].shape[1]} inputs but the "
                f"encoding convention (order {self.encoding_order}, latent "
                f"{self.latent_dim}) produces {expected_in}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2:
                raise WeightFileError(f"layer {i}: weight matrix must be 2-D")
            if b.shape[0] != w.shape[0]:
                raise WeightFileError(
                    f"layer {i}: bias length {b.shape[0]} != output size {w.shape[0]}")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise WeightFileError(
                    f"layer {i}: input size {w.shape[1]} does not match "
                    f"layer {i - 1} output size {self.weights[i - 1].shape[0]}")
        if self.weights[-1].shape[0] != 1:
            raise WeightFileError("final layer must produce a single scalar")
        if len(self.latent) != self.latent_dim:
            raise WeightFileError(
                f"latent code length {len(self.latent)} != latent_dim {self.latent_dim}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def with_latent(self, latent) -> "MlpUdf":
        return MlpUdf(self.weights, self.biases, self.encoding_order,
                      self.latent_dim, latent, self.d_max)

    # alias so fitting code can treat any parametric field uniformly
    def with_params(self, params) -> "MlpUdf":
        return self.with_latent(params)

    @property
    def params(self) -> np.ndarray:
        return self.latent.copy()

    # -- forward / reverse ---------------------------------------------------

    def _forward(self, pts: np.ndarray, want_grad: bool):
        enc = positional_encoding(pts, self.encoding_order)
        if self.latent_dim:
            lat = np.broadcast_to(self.latent, (len(pts), self.latent_dim))
            h = np.concatenate([enc, lat], axis=1)
        else:
            h = enc
        pre_acts = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = h @ w.T + b
            if i < len(self.weights) - 1:
                pre_acts.append(a)
                h = np.maximum(a, 0.0)
            else:
                h = a
        raw = h[:, 0]
        u = np.abs(raw)
        clamped = None
        if self.d_max is not None:
            clamped = u >= self.d_max
            u = np.minimum(u, self.d_max)
        if not want_grad:
            return u, None

        delta = np.sign(raw)[:, None]
        if clamped is not None:
            delta = np.where(clamped[:, None], 0.0, delta)
        for i in range(len(self.weights) - 1, 0, -1):
            delta = delta @ self.weights[i]
            delta = delta * (pre_acts[i - 1] > 0)
        grad_in = delta @ self.weights[0]
        return u, grad_in

    def _eval(self, pts):
        return self._forward(pts, want_grad=False)[0]

    def hidden_sign_pattern(self, pts) -> np.ndarray:
        """Concatenated rectifier on/off pattern plus the output sign.

        Finite differences are only trustworthy where this pattern is
        constant across the probe points (the network is piecewise linear).
        """
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
        enc = positional_encoding(pts, self.encoding_order)
        if self.latent_dim:
            lat = np.broadcast_to(self.latent, (len(pts), self.latent_dim))
            h = np.concatenate([enc, lat], axis=1)
        else:
            h = enc
        signs = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = h @ w.T + b
            if i < len(self.weights) - 1:
                signs.append(a > 0)
                h = np.maximum(a, 0.0)
            else:
                signs.append(a > 0)
        return np.concatenate(signs, axis=1)

    def _grad(self, pts):
        _, grad_in = self._forward(pts, want_grad=True)
        enc_cols = encoded_dim(self.encoding_order)
        return _encoding_jacobian_apply(pts, self.encoding_order, grad_in[:, :enc_cols])

    def _sens(self, pts):
        _, grad_in = self._forward(pts, want_grad=True)
        enc_cols = encoded_dim(self.encoding_order)
        return grad_in[:, enc_cols:].copy()

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "encoding_order": self.encoding_order,
            "layer_sizes": self.layer_sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "latent_dim": self.latent_dim,
            "d_max": self.d_max,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict, latent=None) -> "MlpUdf":
        for key in ("encoding_order", "layer_sizes", "weights", "biases", "latent_dim"):
            if key not in data:
                raise WeightFileError(f"weight file missing field {key!r}")
        net = cls(data["weights"], data["biases"], data["encoding_order"],
                  data["latent_dim"], latent, data.get("d_max"))
        sizes = [int(s) for s in data["layer_sizes"]]
        if net.layer_sizes != sizes:
            raise WeightFileError(
                f"declared layer_sizes {sizes} do not match weight shapes {net.layer_sizes}")
        return net

    @classmethod
    def from_file(cls, path, latent=None) -> "MlpUdf":
        with open(path) as fh:
            data = json.load(fh)
        return cls.from_dict(data, latent)


def random_mlp(hidden=(32, 32), encoding_order: int = 5, latent_dim: int = 0,
               d_max: float | None = None, seed: int = 0,
               weight_scale: float | None = None) -> MlpUdf:
    """Small random network for experiments; He-style scaling by default."""
    rng = np.random.default_rng(seed)
    sizes = [encoded_dim(encoding_order) + latent_dim, *hidden, 1]
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        scale = weight_scale if weight_scale is not None else np.sqrt(2.0 / sizes[i])
        weights.append(rng.normal(0.0, scale, size=(sizes[i + 1], sizes[i])))
        biases.append(rng.normal(0.0, 0.1, size=sizes[i + 1]))
    return MlpUdf(weights, biases, encoding_order, latent_dim, None, d_max)
