"""Seeded Monte Carlo checks of the statistical machinery."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .causality import granger_matrix
from .ingest import SeriesTable
from .stationarity import adf_test
from .var import fit


@dataclass
class PropertyResult:
    name: str
    passed: bool | None  # None means skipped
    detail: str

    def line(self) -> str:
        status = "SKIP" if self.passed is None else ("PASS" if self.passed else "FAIL")
        return f"{status}  {self.name}: {self.detail}"


def _ar1(rng, n: int, phi: float) -> np.ndarray:
    e = rng.normal(size=n + 50)
    x = np.zeros(n + 50)
    for t in range(1, n + 50):
        x[t] = phi * x[t - 1] + e[t]
    return x[50:]


def adf_power(rng, trials: int, n: int) -> PropertyResult:
    hits = sum(adf_test(_ar1(rng, n, 0.5), 10).is_stationary_5pct for _ in range(trials))
    need = 0.90 * trials
    return PropertyResult("adf_power", hits >= need, f"AR(1) phi=0.5 rejected in {hits}/{trials} (need >= 90%)")


def adf_size(rng, trials: int, n: int) -> PropertyResult:
    hits = sum(adf_test(np.cumsum(rng.normal(size=n)), 10).is_stationary_5pct for _ in range(trials))
    return PropertyResult("adf_size", hits <= 0.15 * trials,
                          f"random walk falsely rejected in {hits}/{trials} (need <= 15%)")


def _pair_table(a, b, names=("x", "y")) -> SeriesTable:
    return SeriesTable(list(range(len(a))), list(names), np.column_stack([a, b]))


def granger_detection(rng, trials: int, n: int) -> PropertyResult:
    hits = 0
    for _ in range(trials):
        x = rng.normal(size=n)
        e = rng.normal(size=n)
        y = np.empty(n)
        y[0] = e[0]
        y[1:] = 0.8 * x[:-1] + e[1:]
        g = granger_matrix(_pair_table(x, y), max_lag=1)
        hits += g.p("x", "y") < 0.01 and g.p("y", "x") > 0.05
    return PropertyResult("granger_detection", hits >= 0.90 * trials,
                          f"x->y detected without reverse in {hits}/{trials} (need >= 90%)")


def granger_false_positive(rng, trials: int, n: int) -> PropertyResult:
    hits = 0
    for _ in range(trials):
        g = granger_matrix(_pair_table(rng.normal(size=n), rng.normal(size=n)), max_lag=1)
        hits += g.p("x", "y") < 0.05
    return PropertyResult("granger_false_positive", hits <= 0.15 * trials,
                          f"independent pair flagged in {hits}/{trials} (need <= 15%)")


VAR2_INTERCEPT = np.array([0.1, -0.2, 0.3])
VAR2_COEF = np.array([
    [[0.5, 0.1, 0.0], [0.0, 0.3, 0.1], [0.1, 0.0, 0.4]],
    [[0.1, 0.0, 0.0], [0.05, 0.1, 0.0], [0.0, 0.0, -0.1]],
])


def simulate_var(rng, intercept, coef, n: int, burn: int = 100) -> np.ndarray:
    p, k = coef.shape[0], len(intercept)
    y = np.zeros((n + burn, k))
    for t in range(p, n + burn):
        y[t] = intercept + sum(coef[i] @ y[t - 1 - i] for i in range(p)) + rng.normal(size=k)
    return y[burn:]


def var_recovery(rng, trials: int, n: int) -> PropertyResult:
    errs, unstable = [], 0
    truth = np.concatenate([VAR2_COEF.ravel(), VAR2_INTERCEPT])
    for _ in range(trials):
        y = simulate_var(rng, VAR2_INTERCEPT, VAR2_COEF, n)
        m = fit(SeriesTable(list(range(n)), ["a", "b", "c"], y), 2)
        est = np.concatenate([m.coefficients.ravel(), m.intercept])
        errs.append(float(np.mean(np.abs(est - truth))))
        unstable += not m.stable
    mean_err = float(np.mean(errs))
    return PropertyResult("var_recovery", mean_err < 0.08 and unstable == 0,
                          f"mean |coef error| {mean_err:.4f} (need < 0.08), unstable fits {unstable}")


# (name, check, default trials, default length, minimum length)
PROPERTIES: list[tuple[str, Callable, int, int, int]] = [
    ("adf_power", adf_power, 100, 200, 50),
    ("adf_size", adf_size, 100, 200, 50),
    ("granger_detection", granger_detection, 100, 300, 30),
    ("granger_false_positive", granger_false_positive, 100, 300, 30),
    ("var_recovery", var_recovery, 20, 500, 50),
]


def run(seed: int, trials: int | None = None, length: int | None = None) -> list[PropertyResult]:
    """Run every property with its own child RNG so results do not depend on order."""
    children = np.random.SeedSequence(seed).spawn(len(PROPERTIES))
    results = []
    for (name, check, d_trials, d_len, min_len), ss in zip(PROPERTIES, children):
        n_trials = d_trials if trials is None else trials
        n = d_len if length is None else length
        if n < min_len or n_trials < 10:
            results.append(PropertyResult(name, None, f"skipped: needs length >= {min_len} and >= 10 trials "
                                                      f"(got length {n}, trials {n_trials})"))
            continue
        results.append(check(np.random.default_rng(ss), n_trials, n))
    return results
