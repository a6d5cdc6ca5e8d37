import numpy as np
import pytest

from shortcast import fixtures, ingest
from shortcast.diagnostics import Diagnostics
from shortcast.errors import InsufficientData, RankDeficient
from shortcast.ingest import EMISSION, PRODUCTION, SeriesTable
from shortcast.selftest import VAR2_COEF, VAR2_INTERCEPT, simulate_var
from shortcast.stationarity import DiffMeta
from shortcast.var import (
    ColumnTransform,
    VarModel,
    feasible_lag,
    fit,
    fit_all_products,
    fit_product,
    fit_table,
    forecast,
    load_model,
    min_rows,
    model_from_dict,
    model_to_dict,
    prepare,
    save_model,
)


def _table(data, names=None, kinds=None, start=1961):
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    names = names or [f"v{j}" for j in range(data.shape[1])]
    return SeriesTable(list(range(start, start + len(data))), names, data, kinds)


def _model(intercept, coefs, last_rows, transforms=None):
    intercept = np.asarray(intercept, float)
    coefs = np.asarray(coefs, float)
    p, k = coefs.shape[0], len(intercept)
    transforms = transforms or [ColumnTransform.identity() for _ in range(k)]
    return VarModel([f"v{j}" for j in range(k)], p, intercept, coefs, np.eye(k), transforms,
                    np.asarray(last_rows, float).reshape(p, k), 2020, 50, 0.5)


def test_forecast_zero_model():
    fc = forecast(_model([0.0, 0.0], np.zeros((1, 2, 2)), [3.0, -1.0]), 3)
    assert np.all(fc.values == 0.0)


def test_forecast_fixed_point():
    fc = forecast(_model([2.0], [[[0.5]]], [4.0]), 3)
    assert list(fc.values[:, 0]) == [4.0, 4.0, 4.0]
    assert fc.years == [2021, 2022, 2023]


def test_forecast_geometric_decay():
    fc = forecast(_model([0.0], [[[0.5]]], [8.0]), 3)
    assert list(fc.values[:, 0]) == [4.0, 2.0, 1.0]


def test_forecast_destandardizes_and_integrates():
    t = ColumnTransform(DiffMeta(1, (10.0,)), (10.0,), mean=1.0, std=2.0)
    fc = forecast(_model([0.5], [[[0.0]]], [0.0], [t]), 2)
    # z = 0.5 -> diff = 2.0 -> levels 12, 14
    assert list(fc.values[:, 0]) == [12.0, 14.0]


def test_forecast_unstable_warns_and_clamps():
    diag = Diagnostics()
    m = _model([0.0], [[[10.0]]], [1.0])
    m.spectral_radius = 10.0
    fc = forecast(m, 30, diag)
    assert np.all(np.isfinite(fc.values)) and fc.values.max() <= 1e15
    assert any("spectral radius" in d.message for d in diag.for_module("var"))


def test_one_step_matches_recursion():
    rng = np.random.default_rng(3)
    y = simulate_var(rng, VAR2_INTERCEPT, VAR2_COEF, 200)
    m = fit(_table(y), 2)
    expected = m.intercept + m.coefficients[0] @ y[-1] + m.coefficients[1] @ y[-2]
    np.testing.assert_allclose(forecast(m, 1).values[0], expected, rtol=0, atol=1e-12)


def test_fit_recovers_var2():
    rng = np.random.default_rng(4)
    y = simulate_var(rng, VAR2_INTERCEPT, VAR2_COEF, 2000)
    m = fit(_table(y), 2)
    np.testing.assert_allclose(m.coefficients, VAR2_COEF, atol=0.08)
    np.testing.assert_allclose(m.intercept, VAR2_INTERCEPT, atol=0.1)
    assert m.stable and m.spectral_converged
    truth = np.abs(np.linalg.eigvals(np.block([[VAR2_COEF[0], VAR2_COEF[1]], [np.eye(3), np.zeros((3, 3))]]))).max()
    assert abs(m.spectral_radius - truth) < 0.05


def test_residuals_orthogonal_to_regressors():
    rng = np.random.default_rng(5)
    y = simulate_var(rng, VAR2_INTERCEPT, VAR2_COEF, 150)
    p, T = 2, len(y)
    m = fit(_table(y), p)
    X = np.hstack([np.ones((T - p, 1)), y[1:T - 1], y[0:T - 2]])
    fitted = np.array([m.predict_next(y[t - p:t]) for t in range(p, T)])
    resid = y[p:] - fitted
    assert np.abs(X.T @ resid).max() < 1e-8 * np.abs(X.T @ y[p:]).max()


def test_residual_covariance_dof():
    rng = np.random.default_rng(6)
    y = rng.normal(size=(80, 2))
    m = fit(_table(y), 1)
    X = np.hstack([np.ones((79, 1)), y[:-1]])
    B, *_ = np.linalg.lstsq(X, y[1:], rcond=None)
    r = y[1:] - X @ B
    np.testing.assert_allclose(m.residual_sigma, r.T @ r / (79 - 3), rtol=1e-10)


def test_insufficient_data_boundary():
    k, p = 2, 3
    rng = np.random.default_rng(0)
    bad = k * p + p + 1
    with pytest.raises(InsufficientData) as info:
        fit(_table(rng.normal(size=(bad, k))), p)
    assert info.value.needed == min_rows(k, p) == bad + 1
    fit(_table(rng.normal(size=(bad + 1, k))), p)


def test_rank_deficient_names_regressor():
    x = np.random.default_rng(1).normal(size=40)
    with pytest.raises(RankDeficient) as info:
        fit(_table(np.column_stack([x, 2 * x]), ["a", "b"]), 1)
    assert "b.L1" in str(info.value)


def test_frozen_column_is_held_constant():
    rng = np.random.default_rng(2)
    y = np.column_stack([rng.normal(size=60), np.full(60, 3.0)])
    m = fit(_table(y), 2)
    assert m.intercept[1] == 3.0 and np.all(m.coefficients[:, 1, :] == 0) and np.all(m.coefficients[:, :, 1] == 0)
    assert np.all(forecast(m, 5).values[:, 1] == 3.0)


def test_prepare_roundtrips_to_original_units():
    rng = np.random.default_rng(7)
    walk = np.cumsum(rng.normal(size=59)) + 50
    noise = rng.normal(size=59) * 3 + 10
    table = _table(np.column_stack([walk, noise]), ["walk", "noise"])
    transformed, transforms = prepare(table)
    drop = max(t.diff.order for t in transforms)
    assert transformed.n_rows == 59 - drop and transformed.years[0] == 1961 + drop
    for j, t in enumerate(transforms):
        z = transformed.data[:, j]
        assert abs(z.mean()) < 1e-12 and abs(z.std(ddof=1) - 1) < 1e-12
        d = np.diff(table.data[:, j], n=t.diff.order)[drop - t.diff.order:]
        np.testing.assert_allclose(z * t.std + t.mean, d, atol=1e-9)
        # the tail anchors integration right after the last training year
        np.testing.assert_allclose(t.inverse(t.forward(table.data[-3:, j] + 1.0)), table.data[-3:, j] + 1.0, atol=1e-9)


def test_transform_forward_inverse():
    t = ColumnTransform(DiffMeta(2, (0.0, 0.0)), (4.0, 1.0), mean=0.3, std=1.7)
    x = np.array([5.0, 9.0, 11.0, 20.0])
    np.testing.assert_allclose(t.inverse(t.forward(x)), x, atol=1e-12)


def test_feasible_lag():
    assert feasible_lag(57, 9, 6) == 5
    assert feasible_lag(59, 2, 6) == 6
    assert feasible_lag(5, 4, 6) is None


def _wide(n_emission, rows=59, seed=0):
    rng = np.random.default_rng(seed)
    names = [f"gas{i} | Emissions" for i in range(n_emission)] + ["Wheat | Yield"]
    kinds = [EMISSION] * n_emission + [PRODUCTION]
    data = np.cumsum(rng.normal(size=(rows, len(names))), axis=0) + 100
    return _table(data, names, kinds)


def test_lag_reduced_for_many_emission_columns():
    diag = Diagnostics()
    pf = fit_product(_wide(8), "Wheat", 6, diag=diag)
    assert pf.ok and pf.lag_used < 6
    T, k = pf.model.n_obs + pf.model.lag, pf.model.k
    assert k == 9 and T - pf.lag_used >= k * pf.lag_used + 2
    assert any("lag reduced from 6" in d.message for d in diag.for_module("var"))


def test_fit_product_failure_is_captured():
    diag = Diagnostics()
    pf = fit_product(_wide(8, rows=12), "Wheat", 6, diag=diag)
    assert not pf.ok and pf.error.startswith("var:")


def test_fit_product_granger_report_and_filter(tmp_path):
    fixtures.write_var_dataset(tmp_path, noise=0.5, seed=3)
    full = ingest.load_area(tmp_path, fixtures.AREA)
    report = fit_product(full, "Millet", 1)
    assert report.granger is not None and report.model.k == 2
    filtered = fit_product(full, "Millet", 1, granger_filter=True, threshold=0.0)
    assert filtered.model.variables == ["Millet | Yield"]


def test_fit_all_products_one_per_product(shortage_dir):
    full = ingest.load_area(shortage_dir, fixtures.AREA)
    fits = fit_all_products(full, 6)
    assert [f.product.split(" | ")[0] for f in fits] == ["A", "B", "C", "D", "E"]
    assert all(f.ok for f in fits)


def test_model_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    table = _table(np.cumsum(rng.normal(size=(59, 2)), axis=0), ["a", "b"])
    m = fit_table(table, 2)
    path = tmp_path / "model.json"
    save_model(m, path)
    back = load_model(path)
    assert back.variables == m.variables and back.transforms == m.transforms
    np.testing.assert_array_equal(forecast(back, 5).values, forecast(m, 5).values)
    assert model_to_dict(model_from_dict(model_to_dict(m))) == model_to_dict(m)


def test_model_schema_checked():
    with pytest.raises(ValueError):
        model_from_dict({"schema": "other"})
