import json

import numpy as np
import pytest

from udfmesh import MlpUdf, WeightFileError, random_mlp
from udfmesh.mlp import encoded_dim

from oracles import scripted_mlp_forward


def zero_network(final_bias: float, encoding_order: int = 2) -> MlpUdf:
    d = encoded_dim(encoding_order)
    return MlpUdf(
        weights=[np.zeros((4, d)), np.zeros((1, 4))],
        biases=[np.zeros(4), np.array([final_bias])],
        encoding_order=encoding_order,
    )


def abs_x0_network() -> MlpUdf:
    """Hand-built net computing |x0|: relu(x0) + relu(-x0) through the raw
    coordinate feature."""
    order = 2
    d = encoded_dim(order)
    w0 = np.zeros((2, d))
    w0[0, 0] = 1.0   # raw x0 feature is column 0
    w0[1, 0] = -1.0
    w1 = np.array([[1.0, 1.0]])
    return MlpUdf([w0, w1], [np.zeros(2), np.zeros(1)], encoding_order=order)


class TestForward:
    def test_zero_weights_yield_final_bias(self, rng):
        field = zero_network(final_bias=-0.7)
        pts = rng.uniform(-1, 1, (50, 3))
        np.testing.assert_allclose(field.eval(pts), 0.7)

    def test_hand_built_abs_x0(self):
        field = abs_x0_network()
        assert field.eval((0.3, 0.0, 0.0)) == pytest.approx(0.3)
        assert field.eval((-0.25, 0.4, -0.9)) == pytest.approx(0.25)

    def test_matches_independent_scripted_forward(self, rng, tmp_path):
        field = random_mlp(hidden=(8, 8), encoding_order=3, latent_dim=0,
                           d_max=0.9, seed=11)
        path = tmp_path / "net.json"
        field.save(path)
        data = json.load(open(path))
        reloaded = MlpUdf.from_file(path)
        for p in rng.uniform(-1, 1, (20, 3)):
            expect = scripted_mlp_forward(data, tuple(p))
            assert reloaded.eval(p) == pytest.approx(expect, rel=1e-12)


class TestGradients:
    def finite_difference_grad(self, field, pts, h=1e-4):
        g = np.empty_like(pts)
        for axis in range(3):
            hi, lo = pts.copy(), pts.copy()
            hi[:, axis] += h
            lo[:, axis] -= h
            g[:, axis] = (field.eval(hi) - field.eval(lo)) / (2 * h)
        return g

    def smooth_probe_mask(self, field, pts, h):
        """Points whose +-h probes stay on one linear piece of the network."""
        ref = field.hidden_sign_pattern(pts)
        ok = np.ones(len(pts), dtype=bool)
        for axis in range(3):
            for sign in (1, -1):
                q = pts.copy()
                q[:, axis] += sign * h
                ok &= (field.hidden_sign_pattern(q) == ref).all(axis=1)
        return ok

    def test_grad_x_matches_finite_differences(self, rng):
        field = random_mlp(hidden=(16, 16), encoding_order=4, seed=2)
        pts = rng.uniform(-1, 1, (300, 3))
        h = 1e-4
        pts = pts[(field.eval(pts) > 0.05) & self.smooth_probe_mask(field, pts, h)]
        assert len(pts) > 100
        g = field.grad_x(pts)
        fd = self.finite_difference_grad(field, pts, h)
        rel = np.linalg.norm(g - fd, axis=1) / np.linalg.norm(fd, axis=1)
        assert rel.max() < 1e-3

    def test_grad_exact_on_all_active_network(self, rng):
        # large positive biases keep every unit on: the net is smooth, so
        # the comparison isolates the encoding jacobian and the backward pass
        field = random_mlp(hidden=(12,), encoding_order=5, seed=9,
                           weight_scale=0.05)
        field.biases[0][:] = 5.0
        pts = rng.uniform(-1, 1, (100, 3))
        pts = pts[field.eval(pts) > 0.05]
        g = field.grad_x(pts)
        fd = self.finite_difference_grad(field, pts)
        rel = np.linalg.norm(g - fd, axis=1) / np.linalg.norm(fd, axis=1)
        assert rel.max() < 1e-3

    def test_latent_sensitivity_matches_finite_differences(self, rng):
        field = random_mlp(hidden=(16,), encoding_order=3, latent_dim=6, seed=7)
        field = field.with_latent(rng.normal(size=6) * 0.3)
        pts = rng.uniform(-1, 1, (200, 3))
        pts = pts[field.eval(pts) > 0.05]
        sens = field.param_sensitivity(pts)
        h = 1e-4
        fd = np.empty_like(sens)
        stable = np.ones(len(pts), dtype=bool)
        ref = field.hidden_sign_pattern(pts)
        for c in range(6):
            z = field.latent.copy()
            z[c] += h
            up_field = field.with_latent(z)
            z[c] -= 2 * h
            dn_field = field.with_latent(z)
            stable &= (up_field.hidden_sign_pattern(pts) == ref).all(axis=1)
            stable &= (dn_field.hidden_sign_pattern(pts) == ref).all(axis=1)
            fd[:, c] = (up_field.eval(pts) - dn_field.eval(pts)) / (2 * h)
        assert stable.sum() > 50
        denom = np.maximum(np.abs(fd[stable]), 1e-9)
        assert (np.abs(sens[stable] - fd[stable]) / denom).max() < 1e-3


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        field = random_mlp(hidden=(8,), encoding_order=5, latent_dim=3,
                           d_max=0.5, seed=1)
        path = tmp_path / "net.json"
        field.save(path)
        back = MlpUdf.from_file(path, latent=[0.1, -0.2, 0.3])
        pts = rng.uniform(-1, 1, (20, 3))
        ref = field.with_latent([0.1, -0.2, 0.3])
        np.testing.assert_allclose(back.eval(pts), ref.eval(pts))

    def test_layer_shape_mismatch_names_layer(self):
        d = encoded_dim(2)
        with pytest.raises(WeightFileError, match="layer 1"):
            MlpUdf(weights=[np.zeros((4, d)), np.zeros((1, 5))],
                   biases=[np.zeros(4), np.zeros(1)], encoding_order=2)

    def test_bias_mismatch_names_layer(self):
        d = encoded_dim(2)
        with pytest.raises(WeightFileError, match="layer 0"):
            MlpUdf(weights=[np.zeros((4, d))], biases=[np.zeros(3)],
                   encoding_order=2)

    def test_encoding_convention_mismatch_fails_loudly(self):
        # net built for order 2 but declared order 3 in the file
        field = random_mlp(hidden=(4,), encoding_order=2, seed=0)
        data = field.to_dict()
        data["encoding_order"] = 3
        with pytest.raises(WeightFileError, match="encoding convention"):
            MlpUdf.from_dict(data)

    def test_declared_layer_sizes_checked(self, tmp_path):
        field = random_mlp(hidden=(4,), encoding_order=2, seed=0)
        data = field.to_dict()
        data["layer_sizes"] = [99, 4, 1]
        path = tmp_path / "bad.json"
        json.dump(data, open(path, "w"))
        with pytest.raises(WeightFileError, match="layer_sizes"):
            MlpUdf.from_file(path)

    def test_missing_field_rejected(self):
        with pytest.raises(WeightFileError, match="missing field"):
            MlpUdf.from_dict({"weights": [], "biases": []})
