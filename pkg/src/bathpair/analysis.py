"""Scientific post-processing: entanglement traces, peaks, critical distances.

Distances are bisected against exact zeros of the logarithmic negativity:
E vanishes on open sets (the separability clamp is exact), so root finding
targets the boundary of the zero set with a small positive threshold that
sits above quadrature noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import (
    CovarianceMatrix,
    channel_asymptotic_moments,
    channel_blocks,
    covariance_asymptotic,
    covariance_time_series,
    ground_state_covariance,
)
from .entanglement import log_negativity
from .greens import DurbinSettings, four_by_four, greens_time
from .model import ModelParams

__all__ = [
    "EntanglementTrace",
    "CriticalDistanceResult",
    "SlopeFit",
    "trace",
    "short_time_expansion",
    "asymptotic_log_negativity",
    "measured_initial_slope",
    "find_d0",
    "find_d1",
    "fit_slope",
    "detect_peaks",
    "second_peak_height",
    "oscillation_frequency",
    "BracketError",
    "AmbiguousPeakError",
]

ZERO_THRESHOLD = 1e-8    # entanglement below this counts as zero


class BracketError(ValueError):
    """The bisection bracket does not straddle the zero boundary."""


class AmbiguousPeakError(RuntimeError):
    """First and second peaks are unresolvable in the requested regime."""


@dataclass(frozen=True)
class EntanglementTrace:
    times: np.ndarray
    values: np.ndarray
    params: ModelParams
    peaks: list = field(default_factory=list)     # (time, height) tuples
    asymptote: float = math.nan


@dataclass(frozen=True)
class CriticalDistanceResult:
    d0: float = math.nan
    d1: float = math.nan
    slope_a: float = math.nan
    bracket: tuple = (math.nan, math.nan)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    residual: float
    ill_conditioned: bool


# ---------------------------------------------------------------------------
# traces


def _grid_step(params: ModelParams, dt: float) -> float:
    h_max = min(0.01, 0.1 / params.omega_cut)
    if params.distance > 0:
        h_max = min(h_max, max(params.distance / 20.0, 2.5e-3))
    m = max(1, int(math.ceil(dt / (2.0 * h_max))))
    return dt / (2.0 * m)


def trace(params: ModelParams, t_max: float, dt: float,
          c0: CovarianceMatrix | None = None, tol: float = 1e-5,
          omega_max: float | None = None,
          durbin_settings: DurbinSettings | None = None) -> EntanglementTrace:
    """E(t) on a uniform grid, with detected peaks and the asymptote."""
    if t_max <= 0 or dt <= 0:
        raise ValueError("t_max and dt must be positive")
    n_out = int(round(t_max / dt))
    if abs(n_out * dt - t_max) > 1e-9 * t_max:
        n_out = int(math.ceil(t_max / dt))
    t_end = n_out * dt
    h = _grid_step(params, dt)
    n_grid = int(round(t_end / h))
    grid = np.linspace(0.0, t_end, n_grid + 1)
    greens = greens_time(grid, params, durbin_settings)
    times = np.linspace(0.0, t_end, n_out + 1)
    c0 = c0 if c0 is not None else ground_state_covariance()
    covs = covariance_time_series(greens, params, times, c0=c0, tol=tol,
                                  omega_max=omega_max)
    values = np.array([log_negativity(c.entries) for c in covs])
    peaks = detect_peaks(times, values)
    try:
        asym = asymptotic_log_negativity(params, c0=c0, strict=False)
    except ValueError:   # undamped limits have no initial-state-free asymptote
        asym = math.nan
    return EntanglementTrace(times=times, values=values, params=params,
                             peaks=peaks, asymptote=asym)


def asymptotic_log_negativity(params: ModelParams,
                              c0: CovarianceMatrix | None = None,
                              strict: bool = True) -> float:
    """Late-time E.  At r = 0 the relative coordinate never thermalizes, so
    its initial block is frozen and combined with the stationary symmetric
    channel; for r > 0 this is just the asymptotic-covariance route."""
    if params.distance > 0:
        return log_negativity(covariance_asymptotic(params).entries)
    if strict:
        raise ValueError("asymptotic covariance requires r > 0")
    omega_max = 40.0 * max(params.omega_cut, params.omega0)
    ap, bp, _ = channel_asymptotic_moments(params, +1, omega_max, tol=1e-6)
    c0_entries = np.eye(4) if c0 is None else c0.entries
    _, minus_block, _ = channel_blocks(c0_entries)
    c4 = four_by_four(np.diag([ap, bp]), minus_block)
    return log_negativity(CovarianceMatrix(entries=c4, time_label="asymptotic").entries)


def short_time_expansion(t, params: ModelParams):
    """Leading short-time behavior of E(t) at zero temperature.

    E(t) ~ (4/ln 2)(gamma/omega0) { e^{-r Omega/c} Omega t - a(Omega t) (Omega t)^2 }
    with a(x) ~ 0.2937 - ln(x)/pi, clamped at zero from below.
    Valid for 0 < Omega t << 1; rejects T > 0.
    """
    if params.temperature != 0.0:
        raise ValueError("short-time expansion is derived at zero temperature")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("short-time expansion needs t > 0")
    x = params.omega_cut * t
    alpha = 0.2937 - np.log(x) / math.pi
    val = (4.0 / math.log(2.0)) * (params.gamma / params.omega0) * (
        math.exp(-params.distance * params.omega_cut) * x - alpha * x * x)
    out = np.maximum(val, 0.0)
    return out if out.ndim else float(out)


def measured_initial_slope(params: ModelParams, x_lo: float = 1e-3,
                           x_hi: float = 1e-2, n_points: int = 10) -> float:
    """dE/dt measured from the covariance pipeline over Omega*t in [x_lo, x_hi]."""
    t_lo, t_hi = x_lo / params.omega_cut, x_hi / params.omega_cut
    step = (t_hi - t_lo) / (n_points - 1)
    h = step / 4.0
    n_grid = int(round(t_hi / h))
    grid = np.linspace(0.0, t_hi, n_grid + 1)
    greens = greens_time(grid, params)
    times = np.linspace(t_lo, t_hi, n_points)
    covs = covariance_time_series(greens, params, times, tol=1e-7)
    values = np.array([log_negativity(c.entries) for c in covs])
    return float(np.polyfit(times, values, 1)[0])


# ---------------------------------------------------------------------------
# peaks


def detect_peaks(times, values, floor: float = 1e-10) -> list:
    """Local maxima with parabolic refinement; returns [(time, height), ...]."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    peaks = []
    for i in range(1, v.size - 1):
        if v[i] <= floor:
            continue
        if v[i] >= v[i - 1] and v[i] >= v[i + 1] and (v[i] > v[i - 1] or v[i] > v[i + 1]):
            d = 0.5 * (t[i + 1] - t[i - 1])
            curv = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (d * d)
            slope = (v[i + 1] - v[i - 1]) / (2.0 * d)
            if curv < 0:
                dt_off = float(np.clip(-slope / curv, -d, d))
                peaks.append((t[i] + dt_off, v[i] - 0.5 * slope * slope / curv))
            else:
                peaks.append((float(t[i]), float(v[i])))
    return peaks


def _peak_onset(times, values, i_peak: int, floor: float = 1e-10) -> float:
    """Time of the last zero or local minimum preceding a peak sample."""
    v = np.asarray(values, dtype=float)
    j = i_peak
    while j > 0:
        if v[j - 1] <= floor:
            return float(times[j - 1])
        if j >= 2 and v[j - 1] <= v[j] and v[j - 1] <= v[j - 2]:
            return float(times[j - 1])
        j -= 1
    return float(times[0])


def second_peak_height(trace_obj: EntanglementTrace) -> float:
    """Height of the tallest peak whose onset lies beyond 0.8 r/c.

    Boson-exchange causality separates the peaks: anything switched on
    before ~r/c belongs to the initial (bath-preexisting) peak.
    """
    r = trace_obj.params.distance
    t = trace_obj.times
    v = trace_obj.values
    best = 0.0
    for i in range(1, v.size - 1):
        if v[i] <= 1e-10 or not (v[i] >= v[i - 1] and v[i] >= v[i + 1]):
            continue
        if _peak_onset(t, v, i) > 0.8 * r:
            best = max(best, float(v[i]))
    return best


def oscillation_frequency(trace_obj: EntanglementTrace, t_lo: float,
                          t_hi: float) -> float:
    """Angular frequency 2*pi / (mean peak spacing) within [t_lo, t_hi]."""
    pts = [p for p in detect_peaks(trace_obj.times, trace_obj.values)
           if t_lo <= p[0] <= t_hi]
    if len(pts) < 2:
        raise ValueError("need at least two peaks in the window")
    spacings = np.diff([p[0] for p in pts])
    return float(2.0 * math.pi / np.mean(spacings))


# ---------------------------------------------------------------------------
# critical distances


def find_d0(params: ModelParams, r_bracket: tuple = (0.02, 0.5),
            tol: float = 1e-3, threshold: float = ZERO_THRESHOLD) -> CriticalDistanceResult:
    """Bisection for the distance where the asymptotic E vanishes."""
    lo, hi = float(r_bracket[0]), float(r_bracket[1])

    def entangled(r: float) -> bool:
        return asymptotic_log_negativity(params.with_(distance=r)) > threshold

    if not entangled(lo):
        raise BracketError(f"asymptotic E already zero at r = {lo}")
    if entangled(hi):
        raise BracketError(f"asymptotic E still positive at r = {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if entangled(mid):
            lo = mid
        else:
            hi = mid
    return CriticalDistanceResult(d0=0.5 * (lo + hi), bracket=(lo, hi))


def _d1_probe(params: ModelParams, r: float, dt: float | None = None) -> float:
    Om = params.omega_cut
    t_max = r + 14.0 / Om
    if dt is None:
        dt = min(0.01, 1.0 / (10.0 * Om), t_max / 150.0)
    tr = trace(params.with_(distance=r), t_max=t_max, dt=dt, tol=1e-7)
    return second_peak_height(tr)


def find_d1(params: ModelParams, r_bracket: tuple, tol: float = 2e-3,
            threshold: float = ZERO_THRESHOLD) -> CriticalDistanceResult:
    """Bisection for the distance where the boson-exchange peak vanishes.

    Refuses brackets reaching into r*Omega/c < 1, where the two peaks
    overlap and the onset classification is meaningless.
    """
    lo, hi = float(r_bracket[0]), float(r_bracket[1])
    if lo * params.omega_cut < 1.0:
        raise AmbiguousPeakError(
            f"bracket low end r = {lo} has r*Omega < 1; peaks unresolvable")
    if _d1_probe(params, lo) <= threshold:
        raise BracketError(f"second peak already gone at r = {lo}")
    if _d1_probe(params, hi) > threshold:
        raise BracketError(f"second peak still present at r = {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _d1_probe(params, mid) > threshold:
            lo = mid
        else:
            hi = mid
    return CriticalDistanceResult(d1=0.5 * (lo + hi), bracket=(lo, hi))


def fit_slope(d0_samples) -> SlopeFit:
    """Least-squares line through the origin for d0 versus 1/Omega.

    Duplicated points change nothing (the normal equations are ratios of
    sums).  The fit is flagged ill-conditioned when the RMS residual
    exceeds 20% of the mean d0.
    """
    pts = np.asarray(list(d0_samples), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least three (1/Omega, d0) samples")
    x, y = pts[:, 0], pts[:, 1]
    slope = float(np.sum(x * y) / np.sum(x * x))
    residual = float(np.sqrt(np.mean((y - slope * x) ** 2)))
    return SlopeFit(slope=slope, residual=residual,
                    ill_conditioned=residual > 0.2 * float(np.mean(np.abs(y))))
