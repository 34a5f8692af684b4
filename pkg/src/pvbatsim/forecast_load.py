"""Day-ahead consumption forecast with a 95% prediction interval.

Two-level structure: week days are clustered on their total consumption
(k-means, silhouette-selected k), and the target day is assigned to a
cluster by weekday. Within each cluster the daily energy level is
extrapolated by an ARIMA model fitted to the cluster's daily totals, and the
hourly profile comes from the cluster's mean day shape. Distributing the
daily-level sigma over the shape makes the summed hourly band coincide with
the daily-level 95% band.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from sklearn.cluster import KMeans
from sklearn.metrics import silhouette_score

from .core import HOUR, HourlyForecast, HourlyTimeSeries
from .errors import InsufficientHistory, NonConvergence, UnfittedModel

DEFAULT_ORDER_GRID = tuple((p, d, q) for d in (0, 1) for p in (0, 1, 2) for q in (0, 1, 2))
MIN_CLUSTER_HISTORY_DAYS = 14
MIN_ARIMA_SAMPLES = 7


@dataclass
class ClusterModel:
    k: int
    centroids: list[float]                 # daily total Wh, ascending by cluster id
    weekday_to_cluster: dict[int, int]     # 0 = Monday .. 6 = Sunday
    member_days: dict[int, list[date]]

    def __post_init__(self):
        if not 1 <= self.k <= 7:
            raise ValueError("k must lie in [1, 7]")
        if set(self.weekday_to_cluster) != set(range(7)):
            raise ValueError("every weekday must be mapped to a cluster")


@dataclass
class ArimaModel:
    """ARIMA(p, d, q) fitted by conditional least squares."""

    order: tuple[int, int, int]
    ar_coeffs: list[float]
    ma_coeffs: list[float]
    intercept: float
    residual_std: float
    converged: bool = True
    aic: float = math.nan

    def __post_init__(self):
        if self.residual_std < 0:
            raise ValueError("residual_std must be >= 0")


def _daily_blocks(history: HourlyTimeSeries, tz_offset_h: int):
    """Complete local calendar days in the series as (date, 24-array) pairs."""
    local_start = history.start + timedelta(hours=tz_offset_h)
    lead = (24 - local_start.hour) % 24
    blocks = []
    i = lead
    while i + 24 <= len(history.values):
        day = (local_start + HOUR * i).date()
        blocks.append((day, history.values[i:i + 24]))
        i += 24
    return blocks


def _brute_silhouette_guard(k, n):
    return 2 <= k <= n - 1


def cluster_days(history: HourlyTimeSeries, k_max: int = 7, seed: int = 0,
                 tz_offset_h: int = 0) -> ClusterModel:
    """Cluster historical days on their total energy and map weekdays.

    k-means runs for k = 2..min(k_max, 7) with 10 seeded restarts; the k with
    the best mean silhouette wins (ties toward smaller k). If every daily
    total is identical the model degenerates to a single cluster. Cluster ids
    are assigned in ascending centroid order, and each weekday maps to the
    cluster holding the majority of its historical instances (ties toward the
    lower cluster id).
    """
    blocks = _daily_blocks(history, tz_offset_h)
    if len(blocks) < MIN_CLUSTER_HISTORY_DAYS:
        raise InsufficientHistory(
            f"need >= {MIN_CLUSTER_HISTORY_DAYS} complete days, have {len(blocks)}")
    days = [d for d, _ in blocks]
    totals = np.array([float(vals.sum()) for _, vals in blocks])
    X = totals.reshape(-1, 1)

    if np.ptp(totals) == 0:
        labels = np.zeros(len(totals), dtype=int)
        centroids = [float(totals[0])]
        best_k = 1
    else:
        best_k, best_score, best_labels = None, -np.inf, None
        for k in range(2, min(k_max, 7) + 1):
            if not _brute_silhouette_guard(k, len(totals)):
                continue
            km = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(X)
            score = silhouette_score(X, km.labels_)
            if score > best_score:
                best_k, best_score, best_labels = k, score, km.labels_
        if best_k is None:
            raise InsufficientHistory("too few days for any cluster count")
        # canonical ids: ascending centroid
        raw_centroids = [totals[best_labels == c].mean() for c in range(best_k)]
        order = np.argsort(raw_centroids, kind="stable")
        remap = {int(old): new for new, old in enumerate(order)}
        labels = np.array([remap[int(l)] for l in best_labels])
        centroids = [float(raw_centroids[int(old)]) for old in order]

    member_days = {c: [days[i] for i in range(len(days)) if labels[i] == c]
                   for c in range(best_k)}
    weekday_to_cluster = {}
    for wd in range(7):
        counts = [0] * best_k
        for i, d in enumerate(days):
            if d.weekday() == wd:
                counts[labels[i]] += 1
        if sum(counts) == 0:
            raise InsufficientHistory(f"weekday {wd} absent from history")
        weekday_to_cluster[wd] = int(np.argmax(counts))  # argmax ties -> lower id
    return ClusterModel(best_k, centroids, weekday_to_cluster, member_days)


# ---------------------------------------------------------------------------
# ARIMA by conditional least squares
# ---------------------------------------------------------------------------

def _css_residuals(w, p, q, params):
    """One-step residuals of an ARMA(p, q) with intercept, zeros before t=p."""
    c = params[0]
    phi = params[1:1 + p]
    theta = params[1 + p:1 + p + q]
    n = len(w)
    eps = np.zeros(n)
    for t in range(p, n):
        acc = w[t] - c
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                acc -= theta[j] * eps[t - 1 - j]
        if abs(acc) > 1e15:
            # non-invertible region explored by the optimizer; cap the
            # explosion so the search backs off without overflowing
            eps[t:] = 1e15
            return eps
        eps[t] = acc
    return eps


def _ols_ar_fit(w, p):
    """Exact conditional least squares for pure AR(p) with intercept."""
    n = len(w)
    if p == 0:
        c = float(np.mean(w))
        return np.array([c])
    cols = [np.ones(n - p)] + [w[p - 1 - i: n - 1 - i] for i in range(p)]
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, w[p:], rcond=None)
    return coef


def _ar_stationary(phi) -> bool:
    if len(phi) == 0:
        return True
    roots = np.roots(np.concatenate(([1.0], -np.asarray(phi))))
    return bool(np.all(np.abs(roots) < 1.0 - 1e-9))


def _ma_invertible(theta) -> bool:
    if len(theta) == 0:
        return True
    roots = np.roots(np.concatenate(([1.0], np.asarray(theta))))
    return bool(np.all(np.abs(roots) < 1.0 - 1e-9))


def _fit_order(x, p, d, q):
    """Fit one (p, d, q); returns (params, eps_x_aligned, converged) or None.

    The differenced series is scale-normalized before optimization so the
    search path (and hence order selection) does not depend on the unit of
    the input. Non-stationary AR or non-invertible MA fits are discarded.
    """
    w = np.diff(x, n=d) if d else x
    if len(w) <= p + q + 2:
        return None
    scale = float(np.std(w))
    if scale == 0.0 or not np.isfinite(scale):
        scale = 1.0
    wn = w / scale
    converged = True
    if q == 0:
        params_n = _ols_ar_fit(wn, p)
    else:
        x0 = np.concatenate([_ols_ar_fit(wn, p), np.zeros(q)])
        try:
            res = least_squares(lambda th: _css_residuals(wn, p, q, th)[p:],
                                x0, method="lm", max_nfev=300 * (p + q + 1))
            params_n = res.x
            converged = bool(res.success)
        except Exception:
            return None
    phi = params_n[1:1 + p]
    theta = params_n[1 + p:]
    if not _ar_stationary(phi) or not _ma_invertible(theta):
        return None
    params = np.concatenate(([params_n[0] * scale], phi, theta))
    eps_w = _css_residuals(w, p, q, params)
    # Align residuals to the undifferenced series: w[t] predicts x[t + d].
    eps_x = np.full(len(x), np.nan)
    eps_x[p + d:] = eps_w[p:]
    return params, eps_x, converged


def fit_arima(series, order_grid=None) -> ArimaModel:
    """Grid-fit ARIMA orders by conditional least squares and pick by AIC.

    Every candidate's one-step residuals are compared on the same trailing
    window of the original series (dropping the largest conditioning length
    in the grid), so AIC values are comparable across orders. Ties break
    toward fewer parameters, then lower d.
    """
    x = np.asarray(series, dtype=float)
    grid = list(order_grid) if order_grid is not None else list(DEFAULT_ORDER_GRID)
    if len(x) < max(MIN_ARIMA_SAMPLES, max(p + d + q + 3 for p, d, q in grid)):
        raise InsufficientHistory(f"series of {len(x)} samples is too short to fit")

    skip = max(p + d for p, d, _ in grid)
    n_common = len(x) - skip
    candidates = []
    for (p, d, q) in grid:
        if (p + q) > 0 and n_common < 5 * (p + q + 1):
            continue  # too few samples per parameter for a meaningful fit
        fit = _fit_order(x, p, d, q)
        if fit is None:
            continue
        params, eps_x, converged = fit
        sse_common = float(np.nansum(eps_x[skip:] ** 2))
        n_params = 1 + p + q
        sigma2 = max(sse_common / n_common, 1e-300)
        aic = n_common * math.log(sigma2) + 2 * (n_params + 1)
        own = eps_x[~np.isnan(eps_x)]
        dof = max(1, len(own) - n_params)
        residual_std = float(np.sqrt(np.sum(own ** 2) / dof))
        model = ArimaModel((p, d, q), [float(v) for v in params[1:1 + p]],
                           [float(v) for v in params[1 + p:]], float(params[0]),
                           residual_std, converged, aic)
        candidates.append((aic, p + d + q, d, p, q, model))
    if not candidates:
        raise NonConvergence("no ARIMA order in the grid produced a valid fit")
    candidates.sort(key=lambda t: t[:5])
    return candidates[0][5]


def _psi_weights(phi, theta, n):
    p, q = len(phi), len(theta)
    psi = np.zeros(n)
    psi[0] = 1.0
    for j in range(1, n):
        acc = theta[j - 1] if j <= q else 0.0
        for i in range(1, min(j, p) + 1):
            acc += phi[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def arima_forecast(model: ArimaModel, history, steps: int):
    """Multi-step mean and standard-deviation paths from the end of history.

    The history is re-run through the residual recursion to condition the
    forecast; a short (or empty) history is padded with the model's
    stationary mean, which collapses to the unconditional forecast.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    p, d, q = model.order
    phi = np.asarray(model.ar_coeffs)
    theta = np.asarray(model.ma_coeffs)
    c = model.intercept

    x = np.asarray(history, dtype=float)
    tails = []
    w = x
    for _ in range(d):
        tails.append(float(w[-1]) if len(w) else 0.0)
        w = np.diff(w)

    denom = 1.0 - float(np.sum(phi))
    mu = c / denom if abs(denom) > 1e-12 else c
    params = np.concatenate(([c], phi, theta))
    if len(w) >= max(p, 1):
        eps = _css_residuals(w, p, q, params)
        w_ext = list(w)
        eps_ext = list(eps)
    else:
        w_ext = [mu] * p
        eps_ext = [0.0] * p

    means = []
    for _ in range(steps):
        acc = c
        for i in range(p):
            acc += phi[i] * w_ext[-1 - i]
        for j in range(q):
            if len(eps_ext) > j:
                acc += theta[j] * eps_ext[-1 - j]
        w_ext.append(acc)
        eps_ext.append(0.0)
        means.append(acc)

    forecast = np.asarray(means)
    for tail in reversed(tails):
        forecast = tail + np.cumsum(forecast)

    psi = _psi_weights(phi, theta, steps)
    for _ in range(d):
        psi = np.cumsum(psi)
    std = model.residual_std * np.sqrt(np.cumsum(psi ** 2))
    return forecast, std


# ---------------------------------------------------------------------------
# Forecaster: clusters + shapes + level models
# ---------------------------------------------------------------------------

@dataclass
class LoadForecaster:
    clusters: ClusterModel
    shapes: dict[int, np.ndarray]
    level_models: dict[int, ArimaModel]
    level_history: dict[int, list[tuple[date, float]]]
    tz_offset_h: int = 0


def fit_load_forecaster(history: HourlyTimeSeries, k_max: int = 7, seed: int = 0,
                        order_grid=None, tz_offset_h: int = 0) -> LoadForecaster:
    clusters = cluster_days(history, k_max=k_max, seed=seed, tz_offset_h=tz_offset_h)
    blocks = dict(_daily_blocks(history, tz_offset_h))
    shapes, level_models, level_history = {}, {}, {}
    for c, member in clusters.member_days.items():
        days = sorted(member)
        profile = np.mean([blocks[d] for d in days], axis=0)
        total = float(profile.sum())
        shapes[c] = profile / total if total > 0 else np.zeros(24)
        lam = [(d, float(blocks[d].sum())) for d in days]
        if len(lam) < MIN_ARIMA_SAMPLES:
            raise InsufficientHistory(
                f"cluster {c} has only {len(lam)} days, need >= {MIN_ARIMA_SAMPLES}")
        level_models[c] = fit_arima([v for _, v in lam], order_grid)
        level_history[c] = lam
    return LoadForecaster(clusters, shapes, level_models, level_history, tz_offset_h)


def _steps_ahead(forecaster: LoadForecaster, cluster: int, last_known: date | None,
                 target: date) -> int:
    if last_known is None or target <= last_known:
        return 1
    steps = 0
    d = last_known + timedelta(days=1)
    mapping = forecaster.clusters.weekday_to_cluster
    while d <= target:
        if mapping[d.weekday()] == cluster:
            steps += 1
        d += timedelta(days=1)
    return max(1, steps)


def forecast_load_24h(forecaster: LoadForecaster, target_date: date,
                      z: float = 1.96) -> HourlyForecast:
    """24-hour consumption forecast for a local calendar day.

    The daily energy level is the ARIMA forecast conditioned on the cluster
    days strictly before the target (replayed days therefore see only their
    past); the hourly expectation spreads that level over the cluster shape.
    The lower band is clamped at zero.
    """
    if not isinstance(forecaster, LoadForecaster):
        raise UnfittedModel("load forecaster not fitted")
    cluster = forecaster.clusters.weekday_to_cluster.get(target_date.weekday())
    if cluster is None or cluster not in forecaster.level_models:
        raise UnfittedModel(f"no fitted cluster for weekday {target_date.weekday()}")

    prefix = [(d, v) for d, v in forecaster.level_history[cluster] if d < target_date]
    last_known = prefix[-1][0] if prefix else None
    steps = _steps_ahead(forecaster, cluster, last_known, target_date)
    mean_path, std_path = arima_forecast(
        forecaster.level_models[cluster], [v for _, v in prefix], steps)
    level = max(0.0, float(mean_path[-1]))
    sigma = float(std_path[-1])

    shape = forecaster.shapes[cluster]
    exp = level * shape
    band = z * sigma * shape
    low = np.maximum(0.0, exp - band)
    up = exp + band
    local_midnight = datetime.combine(target_date, time(0), tzinfo=timezone.utc)
    start = local_midnight - timedelta(hours=forecaster.tz_offset_h)
    return HourlyForecast(start, low, exp, up)


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def forecaster_to_dict(f: LoadForecaster) -> dict:
    return {
        "tz_offset_h": f.tz_offset_h,
        "clusters": {
            "k": f.clusters.k,
            "centroids": f.clusters.centroids,
            "weekday_to_cluster": {str(k): v for k, v in f.clusters.weekday_to_cluster.items()},
            "member_days": {str(c): [d.isoformat() for d in days]
                            for c, days in f.clusters.member_days.items()},
        },
        "per_cluster": {
            str(c): {
                "shape": f.shapes[c].tolist(),
                "model": {
                    "order": list(f.level_models[c].order),
                    "ar_coeffs": f.level_models[c].ar_coeffs,
                    "ma_coeffs": f.level_models[c].ma_coeffs,
                    "intercept": f.level_models[c].intercept,
                    "residual_std": f.level_models[c].residual_std,
                    "converged": f.level_models[c].converged,
                },
                "level_history": [[d.isoformat(), v] for d, v in f.level_history[c]],
            }
            for c in f.shapes
        },
    }


def forecaster_from_dict(doc: dict) -> LoadForecaster:
    cl = doc["clusters"]
    clusters = ClusterModel(
        cl["k"], list(cl["centroids"]),
        {int(k): v for k, v in cl["weekday_to_cluster"].items()},
        {int(c): [date.fromisoformat(d) for d in days]
         for c, days in cl["member_days"].items()},
    )
    shapes, models, history = {}, {}, {}
    for c_str, entry in doc["per_cluster"].items():
        c = int(c_str)
        shapes[c] = np.asarray(entry["shape"], dtype=float)
        m = entry["model"]
        models[c] = ArimaModel(tuple(m["order"]), list(m["ar_coeffs"]),
                               list(m["ma_coeffs"]), m["intercept"],
                               m["residual_std"], m.get("converged", True))
        history[c] = [(date.fromisoformat(d), float(v)) for d, v in entry["level_history"]]
    return LoadForecaster(clusters, shapes, models, history, doc.get("tz_offset_h", 0))


def save_forecaster(f: LoadForecaster, path) -> None:
    Path(path).write_text(json.dumps(forecaster_to_dict(f), indent=2))


def load_forecaster(path) -> LoadForecaster:
    return forecaster_from_dict(json.loads(Path(path).read_text()))
