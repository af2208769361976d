import json

import numpy as np
import pytest

from curbprice.errors import DataError, UndefinedMetricError
from curbprice.metrics import evaluate, mse, r_squared, r_value, sse, sst

rng = np.random.default_rng(7)


class TestMse:
    def test_perfect_prediction(self):
        y = rng.random(10)
        assert mse(y, y) == 0.0

    def test_constant_offset(self):
        y = rng.random(50)
        assert mse(y + 1.0, y) == pytest.approx(1.0, rel=1e-12)

    def test_matches_two_pass_oracle(self):
        yhat, y = rng.random(100), rng.random(100)
        naive = sum((a - b) ** 2 for a, b in zip(yhat, y)) / 100
        assert mse(yhat, y) == pytest.approx(naive, rel=1e-12)

    def test_translation_invariance(self):
        yhat, y = rng.random(60), rng.random(60)
        c = 123.456
        assert mse(yhat + c, y + c) == pytest.approx(mse(yhat, y), rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            mse([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            mse([1.0, 2.0], [1.0])


class TestRSquared:
    def test_perfect_is_one(self):
        y = rng.random(20)
        assert r_squared(y, y) == 1.0

    def test_mean_predictor_is_zero(self):
        y = rng.random(20)
        yhat = np.full_like(y, y.mean())
        assert r_squared(yhat, y) == pytest.approx(0.0, abs=1e-12)

    def test_hand_case(self):
        # SSE = 1, SST = 2 -> 0.5
        assert r_squared([1.0, 2.0, 4.0], [1.0, 2.0, 3.0]) == pytest.approx(0.5)

    def test_worse_than_mean_goes_negative(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared([3.0, 3.0, 0.0], y) < 0.0

    def test_zero_variance_signals(self):
        with pytest.raises(UndefinedMetricError):
            r_squared([1.0, 2.0], [5.0, 5.0])

    def test_ols_predictor_matches_r_value_squared(self):
        x = rng.random(200)
        y = 3.0 * x + 0.5 + 0.1 * rng.standard_normal(200)
        slope, intercept = np.polyfit(x, y, 1)
        yhat = slope * x + intercept
        assert r_squared(yhat, y) == pytest.approx(r_value(yhat, y) ** 2, abs=1e-9)


class TestRValue:
    def test_identity_is_one(self):
        y = rng.random(30)
        assert r_value(y, y) == pytest.approx(1.0, abs=1e-12)

    def test_anticorrelation(self):
        y = rng.random(30)
        assert r_value(-y + 2.0, y) == pytest.approx(-1.0, abs=1e-12)

    def test_affine_invariance(self):
        y = rng.random(30)
        assert r_value(2.5 * y + 0.3, y) == pytest.approx(1.0, abs=1e-12)

    def test_zero_variance_signals(self):
        with pytest.raises(UndefinedMetricError):
            r_value([1.0, 1.0], [1.0, 2.0])


class TestEvalReport:
    def test_fields_consistent(self):
        yhat, y = rng.random(40), rng.random(40)
        rep = evaluate(yhat, y)
        assert rep.mse == pytest.approx(rep.sse / rep.n, rel=1e-12)
        assert rep.r_squared == pytest.approx(1 - rep.sse / rep.sst, rel=1e-9)
        assert rep.n == 40 and rep.scale == "normalized"

    def test_degenerate_targets_yield_none(self):
        rep = evaluate([1.0, 1.2, 1.1], [2.0, 2.0, 2.0])
        assert rep.r_squared is None and rep.r_value is None

    def test_single_sample_yields_none_correlations(self):
        rep = evaluate([1.5], [2.0])
        assert rep.mse == pytest.approx(0.25)
        assert rep.r_squared is None and rep.r_value is None
        with pytest.raises(UndefinedMetricError):
            r_squared([1.5], [2.0])

    def test_scale_relation_normalized_vs_usd(self):
        lo, hi = 22_000.0, 5_858_000.0
        y_usd = rng.uniform(lo, hi, 64)
        yhat_usd = y_usd + rng.normal(0, 50_000, 64)
        yn = (y_usd - lo) / (hi - lo)
        yhatn = (yhat_usd - lo) / (hi - lo)
        rep_n = evaluate(yhatn, yn, scale="normalized")
        rep_u = evaluate(yhat_usd, y_usd, scale="usd")
        assert rep_u.mse == pytest.approx(rep_n.mse * (hi - lo) ** 2, rel=1e-9)

    def test_json_round_trip(self):
        rep = evaluate([1.0, 2.0], [1.5, 2.5])
        doc = json.loads(rep.to_json())
        assert doc["n"] == 2 and doc["mse"] == pytest.approx(0.25)

    def test_bad_scale_rejected(self):
        with pytest.raises(DataError):
            evaluate([1.0], [1.0], scale="eur")


class TestSums:
    def test_sse_sst_hand_values(self):
        assert sse([1.0, 2.0, 4.0], [1.0, 2.0, 3.0]) == 1.0
        assert sst([1.0, 2.0, 3.0]) == 2.0
