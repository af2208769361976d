import numpy as np
import pytest

import curbprice.mlp as mlp_mod
from curbprice.errors import ConfigError, DataError, DimensionError
from curbprice.mlp import HIDDEN_UNITS, LmConfig, MlpModel, _lm_step, forward, \
    init_network, residual_jacobian, train_lm

rng = np.random.default_rng(21)


def reference_forward(model, X):
    """Per-sample, per-unit loops with explicit sigmoids."""

    def sig(z):
        return 1.0 / (1.0 + np.exp(-z))

    out = np.empty(len(X))
    for k, x in enumerate(X):
        h = np.empty(HIDDEN_UNITS)
        for j in range(HIDDEN_UNITS):
            z = model.b1[j]
            for i in range(model.d_in):
                z += x[i] * model.w1[i, j]
            h[j] = sig(z)
        z = model.b2
        for j in range(HIDDEN_UNITS):
            z += h[j] * model.w2[j]
        out[k] = z if model.linear_output else sig(z)
    return out


def fd_jacobian(model, X, y, h=1e-6):
    theta0 = model.pack()
    J = np.empty((len(X), theta0.size))
    probe = MlpModel(model.w1.copy(), model.b1.copy(), model.w2.copy(), model.b2,
                     linear_output=model.linear_output)
    for c in range(theta0.size):
        for sign, store in ((1.0, 0), (-1.0, 1)):
            theta = theta0.copy()
            theta[c] += sign * h
            probe.unpack(theta)
            vals = forward(probe, X)
            if store == 0:
                plus = vals
            else:
                minus = vals
        J[:, c] = (plus - minus) / (2.0 * h)
    return J


class TestArchitecture:
    def test_parameter_counts(self):
        assert init_network(4, seed=0).n_params == 25
        assert init_network(260, seed=0).n_params == 1049

    def test_layer_sizes(self):
        assert init_network(7, seed=0).layer_sizes == [7, 4, 1]

    def test_zero_weights_propagate_half(self):
        model = MlpModel(np.zeros((3, 4)), np.zeros(4), np.zeros(4), 0.0)
        assert forward(model, np.zeros(3)) == pytest.approx(0.5)
        assert forward(model, rng.normal(size=3)) == pytest.approx(0.5)

    def test_init_bounds_and_determinism(self):
        model = init_network(10, seed=5)
        r1 = np.sqrt(6.0 / (10 + 4))
        r2 = np.sqrt(6.0 / (4 + 1))
        assert np.abs(model.w1).max() <= r1 and np.abs(model.b1).max() <= r1
        assert np.abs(model.w2).max() <= r2 and abs(model.b2) <= r2
        again = init_network(10, seed=5)
        np.testing.assert_array_equal(model.pack(), again.pack())
        assert not np.array_equal(model.pack(), init_network(10, seed=6).pack())

    def test_output_bounded(self):
        model = init_network(3, seed=1)
        X = rng.normal(scale=500.0, size=(50, 3))
        out = forward(model, X)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)
        moderate = forward(model, rng.normal(size=(50, 3)))
        assert np.all(moderate > 0.0) and np.all(moderate < 1.0)

    def test_pack_unpack_round_trip(self):
        model = init_network(6, seed=2)
        theta = model.pack()
        clone = init_network(6, seed=9)
        clone.unpack(theta)
        np.testing.assert_array_equal(clone.w1, model.w1)
        np.testing.assert_array_equal(clone.b1, model.b1)
        np.testing.assert_array_equal(clone.w2, model.w2)
        assert clone.b2 == model.b2

    def test_dimension_mismatch_raises(self):
        with pytest.raises(DimensionError):
            forward(init_network(3, seed=0), np.zeros(4))
        with pytest.raises(ConfigError):
            init_network(0, seed=0)


class TestForwardAndJacobian:
    def test_forward_matches_looped_reference(self):
        for d_in in (1, 4, 9):
            model = init_network(d_in, seed=d_in)
            X = rng.normal(size=(7, d_in))
            np.testing.assert_allclose(forward(model, X), reference_forward(model, X),
                                       rtol=1e-12, atol=1e-15)

    def test_linear_output_matches_looped_reference(self):
        model = init_network(5, seed=3)
        model.linear_output = True
        X = rng.normal(size=(6, 5))
        np.testing.assert_allclose(forward(model, X), reference_forward(model, X),
                                   rtol=1e-12, atol=1e-15)

    def test_jacobian_matches_finite_differences(self):
        for trial in range(20):
            r = np.random.default_rng(trial)
            d_in = int(r.integers(1, 30))
            n = int(r.integers(1, 20))
            model = init_network(d_in, seed=trial)
            model.linear_output = bool(trial % 5 == 0)
            X = r.normal(size=(n, d_in))
            y = r.uniform(0.1, 0.9, n)
            _, J = residual_jacobian(model, X, y)
            J_fd = fd_jacobian(model, X, y)
            scale = max(1.0, np.abs(J).max())
            assert np.abs(J - J_fd).max() / scale < 1e-4

    def test_residuals_are_prediction_errors(self):
        model = init_network(3, seed=4)
        X = rng.normal(size=(8, 3))
        y = rng.uniform(0, 1, 8)
        r, _ = residual_jacobian(model, X, y)
        np.testing.assert_allclose(r, forward(model, X) - y, rtol=1e-15)

    def test_duplicated_rows_share_jacobian_rows(self):
        model = init_network(5, seed=6)
        row = rng.normal(size=5)
        X = np.vstack([row, rng.normal(size=5), row])
        y = np.array([0.2, 0.5, 0.8])
        _, J = residual_jacobian(model, X, y)
        np.testing.assert_array_equal(J[0], J[2])

    def test_shape_mismatch_raises(self):
        model = init_network(2, seed=0)
        with pytest.raises(DataError):
            residual_jacobian(model, np.zeros((3, 2)), np.zeros(2))


class TestLmStep:
    def test_dual_route_matches_primal_formula(self):
        for lam in (1e-3, 0.1, 10.0):
            J = rng.normal(size=(5, 30))
            r = rng.normal(size=5)
            reference = np.linalg.solve(J.T @ J + lam * np.eye(30), -J.T @ r)
            np.testing.assert_allclose(_lm_step(J, r, lam), reference,
                                       rtol=1e-8, atol=1e-10)

    def test_zero_gradient_columns_stay_put(self):
        J = rng.normal(size=(4, 12))
        J[:, 3] = 0.0
        delta = _lm_step(J, rng.normal(size=4), 0.5)
        assert np.isfinite(delta).all()
        assert delta[3] == pytest.approx(0.0, abs=1e-15)

    def test_large_damping_becomes_gradient_descent(self):
        J = rng.normal(size=(8, 6))
        r = rng.normal(size=8)
        lam = 1e8
        np.testing.assert_allclose(_lm_step(J, r, lam), -(J.T @ r) / lam, rtol=1e-6)


class TestTraining:
    def test_fits_identity_on_unit_interval(self):
        X = np.linspace(0.05, 0.95, 40)[:, None]
        y = X.ravel()
        model = init_network(1, seed=0)
        model, hist = train_lm(model, (X, y), (X, y), LmConfig(max_epochs=50, seed=0))
        assert min(hist.train_mse) < 1e-4

    def test_solves_xor_for_most_seeds(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0.1, 0.9, 0.9, 0.1])
        solved = 0
        for seed in range(10):
            model = init_network(2, seed=seed)
            model, hist = train_lm(model, (X, y), (X, y),
                                   LmConfig(max_epochs=200, seed=seed))
            if np.mean((forward(model, X) - y) ** 2) < 1e-3:
                solved += 1
        assert solved >= 8

    def test_accepted_steps_strictly_decrease_train_sse(self):
        X = rng.uniform(0, 1, (30, 3))
        y = rng.uniform(0.2, 0.8, 30)
        model = init_network(3, seed=2)
        initial_mse = float(np.mean((forward(model, X) - y) ** 2))
        model, hist = train_lm(model, (X, y), (X, y), LmConfig(max_epochs=40, seed=2))
        prev = initial_mse
        for k, acc in enumerate(hist.accepted):
            if acc:
                assert hist.train_mse[k] < prev
            else:
                assert hist.train_mse[k] == pytest.approx(prev, rel=1e-12)
            prev = hist.train_mse[k]

    def test_early_stop_rule_on_scripted_validation_series(self, monkeypatch):
        """Validation MSE 0.5, 0.4, 0.41, 0.42 with patience 2 stops at epoch 4
        and keeps the epoch-2 weights."""
        script = iter([0.5, 0.4, 0.41, 0.42, 0.43, 0.44])
        X = rng.uniform(0, 1, (12, 2))
        y = rng.uniform(0.2, 0.8, 12)
        sentinel = np.full((1, 2), -123.0)
        real = mlp_mod._forward_parts

        def scripted(model, A):
            A = np.asarray(A)
            if A.shape == sentinel.shape and np.array_equal(A, sentinel):
                return None, np.array([np.sqrt(next(script))])
            return real(model, A)

        monkeypatch.setattr(mlp_mod, "_forward_parts", scripted)
        model = init_network(2, seed=0)
        _, hist = train_lm(model, (X, y), (sentinel, np.zeros(1)),
                           LmConfig(max_epochs=50, patience=2, seed=0))
        assert hist.stop_reason == "early_stop"
        assert len(hist.val_mse) == 4
        assert hist.best_epoch == 2
        np.testing.assert_allclose(hist.val_mse, [0.5, 0.4, 0.41, 0.42])

    def test_returns_best_validation_snapshot(self):
        r = np.random.default_rng(11)
        X = r.uniform(0, 1, (60, 4))
        y = np.clip(0.5 + 0.4 * np.sin(6 * X[:, 0]) * X[:, 1] + r.normal(0, 0.05, 60), 0, 1)
        Xv = r.uniform(0, 1, (30, 4))
        yv = np.clip(0.5 + 0.4 * np.sin(6 * Xv[:, 0]) * Xv[:, 1] + r.normal(0, 0.05, 30), 0, 1)
        model = init_network(4, seed=1)
        model, hist = train_lm(model, (X, y), (Xv, yv), LmConfig(max_epochs=120, seed=1))
        final_val = float(np.mean((forward(model, Xv) - yv) ** 2))
        assert final_val == pytest.approx(min(hist.val_mse), rel=1e-12)
        assert hist.best_epoch == int(np.argmin(hist.val_mse)) + 1

    def test_training_is_deterministic(self):
        X = rng.uniform(0, 1, (20, 3))
        y = rng.uniform(0.2, 0.8, 20)
        runs = []
        for _ in range(2):
            model = init_network(3, seed=7)
            model, hist = train_lm(model, (X, y), (X, y), LmConfig(max_epochs=25, seed=7))
            runs.append((model.pack(), tuple(hist.train_mse)))
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        assert runs[0][1] == runs[1][1]

    def test_test_series_recorded_when_given(self):
        X = rng.uniform(0, 1, (16, 2))
        y = rng.uniform(0.2, 0.8, 16)
        model = init_network(2, seed=3)
        _, hist = train_lm(model, (X, y), (X, y), LmConfig(max_epochs=5, seed=3),
                           test=(X, y))
        assert len(hist.test_mse) == len(hist.train_mse)

    def test_empty_parts_rejected(self):
        model = init_network(2, seed=0)
        with pytest.raises(DataError):
            train_lm(model, (np.zeros((0, 2)), np.zeros(0)),
                     (np.zeros((1, 2)), np.zeros(1)), LmConfig())

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            LmConfig(lambda0=0.0)
        with pytest.raises(ConfigError):
            LmConfig(lambda_up=1.0)
        with pytest.raises(ConfigError):
            LmConfig(patience=0)


class TestModelRoundTrip:
    def test_json_round_trip_is_exact(self):
        model = init_network(8, seed=4)
        clone = MlpModel.from_json(model.to_json())
        np.testing.assert_array_equal(clone.w1, model.w1)
        np.testing.assert_array_equal(clone.b1, model.b1)
        np.testing.assert_array_equal(clone.w2, model.w2)
        assert clone.b2 == model.b2 and clone.linear_output == model.linear_output
        X = rng.normal(size=(5, 8))
        np.testing.assert_array_equal(forward(clone, X), forward(model, X))

    def test_rejects_unknown_document(self):
        with pytest.raises(DataError):
            MlpModel.from_json('{"format": "svr-model/1"}')

    def test_history_csv(self, tmp_path):
        from curbprice.mlp import TrainHistory
        hist = TrainHistory(train_mse=[0.5, 0.25], val_mse=[0.6, 0.3],
                            test_mse=[0.7, 0.4], accepted=[True, True],
                            best_epoch=2, stop_reason="max_epochs")
        path = tmp_path / "h.csv"
        hist.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_mse,val_mse,test_mse"
        assert lines[1] == "1,0.5,0.6,0.7"
        assert lines[2] == "2,0.25,0.3,0.4"
