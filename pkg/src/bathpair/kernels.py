"""Damping kernel, its Laplace transform, and the bath noise spectrum.

The memory kernel at separation d is

    Gamma_d(t) = gamma * Omega * (exp(-Omega|t - d|) + exp(-Omega|t + d|))

with the closed-form Laplace transform

    Gamma_d^(s) = 2 gamma Omega (Omega e^{-s d} - s e^{-Omega d}) / (Omega^2 - s^2),

analytic for Re(s) > -Omega (the apparent singularity at s = +Omega is
removable).  The noise spectrum is

    S(omega) = (8 gamma / (pi omega0)) * omega * Omega^2/(Omega^2+omega^2) * coth(omega/2T)

which carries the doubling of the covariance convention used throughout
(vacuum covariance = identity); quadratic noise forms therefore integrate
against S/2 (see `covariance`).  The time-domain kernel entries built from
S are provided only as a diagnostic: they are log-divergent at coincident
arguments, so nothing on the covariance path ever samples them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._panels import cos_tail, gauss_panels, merge_edges
from .model import ModelParams

__all__ = [
    "coth",
    "damping_kernel",
    "damping_kernel_laplace",
    "NoiseSpectrum",
    "noise_spectrum",
    "noise_kernel_entry",
    "LogDivergentKernelError",
]


class LogDivergentKernelError(ValueError):
    """The requested time-domain kernel value is logarithmically divergent."""


def coth(x):
    """coth(x) for x > 0, stable at both ends.

    Uses 1 + 2/(e^{2x} - 1); below x = 1e-4 the series 1/x + x/3 avoids
    cancellation (the relative error of the dropped x^3/45 term is < 1e-12
    there).
    """
    x = np.asarray(x, dtype=float)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):     # expm1 -> inf is the right limit
        out = np.where(small, 1.0 / np.where(small, x, 1.0) + x / 3.0,
                       1.0 + 2.0 / np.expm1(2.0 * xs))
    return out if out.ndim else float(out)


def damping_kernel(t, d: float, params: ModelParams):
    """Gamma_d(t); total in t >= 0, d >= 0 (and even in t)."""
    t = np.asarray(t, dtype=float)
    g, Om = params.gamma, params.omega_cut
    out = g * Om * (np.exp(-Om * np.abs(t - d)) + np.exp(-Om * np.abs(t + d)))
    return out if out.ndim else float(out)


def damping_kernel_laplace(s, d: float, params: ModelParams):
    """Closed-form Laplace transform of Gamma_d, valid for Re(s) > -Omega.

    Vectorized over s.  Points with Re(s) <= -Omega (on or left of the
    convergence abscissa) are rejected.  Near the removable point s = Omega
    the expression is evaluated by its series to avoid 0/0.
    """
    s = np.asarray(s, dtype=complex)
    g, Om = params.gamma, params.omega_cut
    if np.any(s.real <= -Om * (1.0 - 1e-12)):
        raise ValueError(f"Laplace transform diverges for Re(s) <= -Omega = {-Om}")
    eps = s - Om
    near = np.abs(eps) < 1e-6 * Om
    s_safe = np.where(near, Om + 1.0, s)
    val = 2 * g * Om * (Om * np.exp(-s_safe * d) - s_safe * np.exp(-Om * d)) / (Om**2 - s_safe**2)
    if np.any(near):
        # limit gamma * e^{-Omega d} (1 + Omega d), first order in (s - Omega)
        lead = g * math.exp(-Om * d) * (1.0 + Om * d)
        corr = -g * math.exp(-Om * d) * (Om * d) ** 2 / 2.0 * (eps / Om)
        lim = lead + corr - lead * eps / (2 * Om)
        val = np.where(near, lim, val)
    return val if val.ndim else complex(val)


@dataclass(frozen=True)
class NoiseSpectrum:
    """Evaluator for the bath noise spectrum S(omega) at fixed parameters."""

    params: ModelParams

    def __call__(self, omega):
        return noise_spectrum(omega, self.params)


def noise_spectrum(omega, params: ModelParams):
    """S(omega) >= 0 for omega >= 0; finite for all omega when T > 0.

    At T = 0 the coth factor is exactly 1.  At T > 0 the omega -> 0 limit
    is 16 gamma T / (pi omega0).
    """
    omega = np.asarray(omega, dtype=float)
    g, Om, T, w0 = params.gamma, params.omega_cut, params.temperature, params.omega0
    drude = Om**2 / (Om**2 + omega**2)
    pref = 8.0 * g / (math.pi * w0)
    if T == 0.0:
        out = pref * omega * drude
    else:
        safe = np.where(omega > 0, omega, 1.0)
        th = coth(safe / (2.0 * T))
        out = np.where(omega > 0, pref * omega * drude * np.asarray(th), pref * 2.0 * T * drude)
    return out if out.ndim else float(out)


def _cos_transform(a: float, params: ModelParams, omega_max: float) -> float:
    """int_0^inf S(omega) cos(a omega) domega with an analytic 1/omega tail.

    Panels are aligned to half-periods of cos(a omega); beyond omega_max the
    Drude factor is expanded (Omega^2/omega - Omega^4/omega^3) and integrated
    exactly, with coth == 1 there to machine accuracy.
    """
    g, Om, w0 = params.gamma, params.omega_cut, params.omega0
    cap = min(Om / 4.0, math.pi / (2.0 * a) if a > 0 else np.inf, 2.0)
    n_panels = int(math.ceil(omega_max / cap))
    edges = merge_edges(np.linspace(0.0, omega_max, n_panels + 1),
                        [Om / 2, Om, 2 * Om], lo=0.0, hi=omega_max)
    x, w = gauss_panels(edges, n=12)
    val = float(np.sum(w * noise_spectrum(x, params) * np.cos(a * x)))
    pref = 8.0 * g / (math.pi * w0)
    if a > 0:
        # Drude tail omega/(Omega^2+omega^2) = 1/w - Omega^2/w^3 + Omega^4/w^5 - ...
        val += pref * (Om**2 * cos_tail(a, omega_max, 1)
                       - Om**4 * cos_tail(a, omega_max, 3)
                       + Om**6 * cos_tail(a, omega_max, 5))
    else:
        # the 1/omega tail with cos = 1 diverges; callers exclude this case
        raise LogDivergentKernelError("cosine transform of S diverges at zero phase")
    return val


def noise_kernel_entry(tau: float, r: float, params: ModelParams,
                       omega_max: float | None = None) -> float:
    """Time-domain noise kernel entry  int_0^inf S(omega) cos(omega tau) cos(omega r) domega.

    Diagnostic only; the covariance path works against S(omega) directly.
    With r = 0 this is the autocorrelation entry.  The integral is
    log-divergent when tau = r = 0 (the spectrum decays only like 1/omega),
    which is refused explicitly.
    """
    tau, r = float(tau), float(r)
    if tau < 0 or r < 0:
        raise ValueError("tau and r must be non-negative")
    if tau == r:
        # covers tau = r = 0 and the light-cone coincidence tau = r > 0: in
        # both cases the 1/omega spectral tail makes the integral log-divergent
        raise LogDivergentKernelError(
            f"noise kernel is log-divergent at tau = r (tau={tau}, r={r})")
    if omega_max is None:
        scale = max(tau, r, abs(tau - r))
        omega_max = max(50.0 * params.omega_cut, 50.0 / max(scale, 1e-3))
    # cos(wt) cos(wr) = [cos(w(t-r)) + cos(w(t+r))]/2
    return 0.5 * (_cos_transform(abs(tau - r), params, omega_max)
                  + _cos_transform(tau + r, params, omega_max))
