"""Transient and asymptotic covariance of the two oscillators.

All noise integration happens in the frequency domain against the bath
spectrum: the time-domain kernel is log-divergent at coincident arguments,
while for every frequency the noise contribution is a positive quadratic
form, absolutely convergent and numerically benign.  The covariance is the
doubled symmetrized moment matrix (vacuum = identity); the spectrum
`kernels.noise_spectrum` already carries that doubling, so quadratic forms
integrate against S(omega)/2.

Asymptotic state (gamma > 0, r > 0 so the initial state is forgotten):

    C_inf = int_0^infty domega (S/2) Herm[ g(omega) M(omega) g(omega)^dag ],

g(omega) the resolvent on the imaginary axis and M the noise structure
matrix (velocity sector, cross entries cos(omega r)).  In channel
coordinates M diagonalizes to weights (1 +- cos(omega r)) and C_inf is
diagonal per channel, which is the form actually integrated.

Transient state:

    C(t) = G(t) C0 G(t)^T + int domega (S/2) Herm[ h M h^dag ],
    h(omega, t) = int_0^t G(u) e^{i omega u} du,

with h accumulated incrementally over the stored G grid by a Filon rule
(quadratic interpolation of G per node pair, oscillatory factor exact), so
a full time series costs one sweep.  Beyond omega_max the integrand is
replaced by its large-frequency expansion and integrated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._panels import cos_tail, gauss_panels, merge_edges
from .entanglement import UnphysicalCovarianceError, symplectic_eigenvalues
from .greens import GreensFunction, channel_det, four_by_four
from .kernels import noise_spectrum
from .model import ModelParams

__all__ = [
    "CovarianceMatrix",
    "ground_state_covariance",
    "covariance_asymptotic",
    "covariance_time",
    "covariance_time_series",
    "channel_asymptotic_moments",
    "channel_blocks",
    "channel_resonance",
    "frequency_grid",
    "TruncationError",
]


class TruncationError(RuntimeError):
    """Frequency-truncation error estimate exceeded the requested tolerance."""


@dataclass(frozen=True)
class CovarianceMatrix:
    """4x4 real symmetric covariance in ordering (Q1, Q2, P1, P2).

    ``time_label`` is the time the matrix is valid at, or "asymptotic".
    Entries are symmetrized on construction; gross asymmetry is rejected.
    """

    entries: np.ndarray
    time_label: float | str = 0.0

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.shape != (4, 4):
            raise ValueError(f"covariance must be 4x4, got {arr.shape}")
        defect = np.max(np.abs(arr - arr.T))
        if defect > 1e-9 * max(1.0, np.max(np.abs(arr))):
            raise ValueError(f"covariance asymmetric by {defect:.3e}")
        arr = 0.5 * (arr + arr.T)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    def symplectic_eigenvalues(self) -> tuple[float, float]:
        return symplectic_eigenvalues(self.entries)


def ground_state_covariance() -> CovarianceMatrix:
    """Both oscillators in their ground state: the identity matrix."""
    return CovarianceMatrix(entries=np.eye(4), time_label=0.0)


def assert_physical(c: CovarianceMatrix, tol: float = 1e-4) -> None:
    lam = symplectic_eigenvalues(c.entries)
    if lam[0] < 1.0 - tol:
        raise UnphysicalCovarianceError(
            f"covariance at t={c.time_label} unphysical: min symplectic "
            f"eigenvalue {lam[0]:.8f} < 1 - {tol}")


# ---------------------------------------------------------------------------
# channel decomposition

_SQ2 = 1.0 / math.sqrt(2.0)
_T4 = np.array([
    [_SQ2, _SQ2, 0.0, 0.0],     # u_+
    [0.0, 0.0, _SQ2, _SQ2],     # udot_+
    [_SQ2, -_SQ2, 0.0, 0.0],    # u_-
    [0.0, 0.0, _SQ2, -_SQ2],    # udot_-
])


def channel_blocks(c4: np.ndarray):
    """Split a 4x4 covariance into (+, -, cross) channel blocks."""
    chan = _T4 @ np.asarray(c4, dtype=float) @ _T4.T
    return chan[:2, :2], chan[2:, 2:], chan[:2, 2:]


def _noise_weight(omega, params: ModelParams, sign: int):
    """Per-frequency quadratic-form weight (S/2) * (1 +- cos(omega r))."""
    omega = np.asarray(omega, dtype=float)
    return 0.5 * noise_spectrum(omega, params) * (1.0 + sign * np.cos(omega * params.distance))


def _tail_prefactor(params: ModelParams) -> float:
    """Large-frequency coefficient of the weight: (S/2) -> w_inf / omega."""
    return 4.0 * params.gamma * params.omega_cut**2 / (math.pi * params.omega0)


def channel_resonances(params: ModelParams, sign: int) -> list:
    """All sharp features of 1/|D(i omega)|^2: [(omega_res, width), ...].

    Zeros of Re D(i omega) mark resonances; their width is
    omega * Re Gamma^ / |d Re D / d omega|.  At large separation the
    imaginary kernel oscillates in omega, so Re D can cross zero several
    times, and crossings near nulls of the channel damping produce very
    narrow spikes; every crossing gets its own width estimate.
    """
    from .greens import channel_kernel_laplace

    w0, g = params.omega0, params.gamma
    om_hi = w0 * (3.0 + 3.0 * g / w0)
    step = min(0.01 * w0, math.pi / (10.0 * (params.distance + 1.0)))
    grid = np.arange(step, om_hi, step)
    red = np.real(channel_det(1j * grid, params, sign))

    def re_d(om):
        return float(np.real(channel_det(np.asarray(1j * om, dtype=complex),
                                         params, sign)))

    out = []
    flips = np.nonzero(np.diff(np.sign(red)) != 0)[0]
    for i in flips:
        om_res = brentq(re_d, grid[i], grid[i + 1], xtol=1e-13)
        gam_r = float(np.real(channel_kernel_laplace(
            np.asarray(1j * om_res, dtype=complex), params, sign)))
        d_red = abs(re_d(om_res + 1e-6) - re_d(om_res - 1e-6)) / 2e-6
        width = om_res * max(gam_r, 0.0) / max(d_red, 1e-9)
        out.append((om_res, max(width, 1e-9)))
    if not out:
        gam_r = float(np.real(channel_kernel_laplace(
            np.asarray(1j * w0, dtype=complex), params, sign)))
        out.append((w0, max(gam_r, 1e-9)))
    return out


def channel_resonance(params: ModelParams, sign: int):
    """Dominant (narrowest) resonance of the channel: (omega_res, width)."""
    res = channel_resonances(params, sign)
    return min(res, key=lambda pair: pair[1])


def frequency_grid(params: ModelParams, omega_max: float, t_scale: float = 0.0,
                   nodes_per_panel: int = 12):
    """Gauss-Legendre panel grid on [0, omega_max] for the noise integrals.

    Panel width is capped so that the fastest oscillation (set by the
    retardation r and the requested time horizon) stays resolved, with
    geometric refinement around each channel resonance; the antisymmetric
    one can be orders of magnitude narrower than everything else.
    """
    r = params.distance
    w0, Om = params.omega0, params.omega_cut
    cap = min(w0 / 2.0, Om / 4.0, 2.5 / max(t_scale, r, 1e-9))
    cap = max(cap, omega_max / 200000.0)
    n_panels = int(math.ceil(omega_max / cap))
    base = np.linspace(0.0, omega_max, n_panels + 1)

    clusters = []
    for sign in (+1, -1):
        for om_res, width in channel_resonances(params, sign):
            if width * 2.0 < cap:
                ladder = width * np.array([0.5, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512])
                ladder = ladder[ladder < 8.0 * cap]
                clusters.append(om_res + ladder)
                clusters.append(om_res - ladder)
                clusters.append([om_res])
    edges = merge_edges(base, [Om / 2, Om, 2 * Om], *clusters,
                        lo=0.0, hi=omega_max, min_gap=1e-10)
    return gauss_panels(edges, n=nodes_per_panel)


# ---------------------------------------------------------------------------
# asymptotic covariance


def channel_asymptotic_moments(params: ModelParams, sign: int,
                               omega_max: float, tol: float):
    """Stationary (position, velocity) variances of one channel.

    Returns (alpha, beta, tail_error_estimate).  The weight of the noise
    quadratic form against |col_2 of g|^2 gives exactly diag(1, omega^2)
    after taking the Hermitian part, so both moments are single integrals
    of weight / |D(i omega)|^2.
    """
    x, w = frequency_grid(params, omega_max, t_scale=0.0)
    wt = _noise_weight(x, params, sign)
    D = channel_det(1j * x, params, sign)
    core = w * wt / np.abs(D) ** 2
    alpha = float(np.sum(core))
    beta = float(np.sum(core * x * x))

    r = params.distance
    w_inf = _tail_prefactor(params)
    alpha += w_inf * (cos_tail(0.0, omega_max, 5) + sign * cos_tail(r, omega_max, 5))
    beta += w_inf * (cos_tail(0.0, omega_max, 3) + sign * cos_tail(r, omega_max, 3))
    # dropped orders: O(w_inf * (w0^2 + Gamma-scale) / omega_max^4) on beta
    c2 = 2.0 * params.omega0**2 + 4.0 * params.gamma * params.omega_cut
    tail_err = 2.0 * w_inf * c2 * cos_tail(0.0, omega_max, 5)
    if tail_err > tol:
        raise TruncationError(
            f"asymptotic tail estimate {tail_err:.3e} > tol {tol:.3e}; "
            f"raise omega_max (currently {omega_max})")
    return alpha, beta, tail_err


def covariance_asymptotic(params: ModelParams, omega_max: float | None = None,
                          tol: float = 1e-6) -> CovarianceMatrix:
    """Stationary covariance; requires gamma > 0 and r > 0.

    At r = 0 the relative coordinate decouples exactly and never forgets
    its initial state, so no initial-state-independent limit exists.
    """
    if params.gamma <= 0:
        raise ValueError("covariance_asymptotic requires gamma > 0")
    if params.distance <= 0:
        raise ValueError("covariance_asymptotic requires r > 0 "
                         "(relative coordinate undamped at r = 0)")
    if omega_max is None:
        omega_max = 40.0 * max(params.omega_cut, params.omega0)
    ap, bp, _ = channel_asymptotic_moments(params, +1, omega_max, tol)
    am, bm, _ = channel_asymptotic_moments(params, -1, omega_max, tol)
    c4 = four_by_four(np.diag([ap, bp]), np.diag([am, bm]))
    out = CovarianceMatrix(entries=c4, time_label="asymptotic")
    assert_physical(out, tol=1e-4)
    return out


# ---------------------------------------------------------------------------
# transient covariance


def _filon_base(theta: np.ndarray):
    """Filon moments for a quadratic through three equispaced samples.

    With theta = omega*h, the pair integral over [a, a+2h] is
    e^{i omega (a+h)} * h * (2 f1 s0 + i (f2 - f0) p1 + (f0 - 2 f1 + f2) s2).
    Small-theta branches keep full precision.
    """
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 5e-2
    th = np.where(small, 1.0, theta)
    s, c = np.sin(th), np.cos(th)
    t2 = theta * theta
    s0 = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, s / th)
    p1 = np.where(small, theta / 3.0 - t2 * theta / 30.0 + t2 * t2 * theta / 840.0,
                  (s - th * c) / (th * th))
    s2 = np.where(small, 1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0,
                  ((th * th - 2.0) * s + 2.0 * th * c) / (th**3))
    return s0, p1, s2


def _sin_tail3(a: float, W: float) -> float:
    """int_W^inf sin(a w)/w^3 dw via the sine integral (odd in a)."""
    from scipy.special import sici
    if a == 0.0:
        return 0.0
    sgn = 1.0 if a > 0 else -1.0
    a = abs(a)
    si = float(sici(a * W)[0])
    s, c = math.sin(a * W), math.cos(a * W)
    val = s / (2 * W**2) + (a / 2.0) * (c / W - a * (math.pi / 2.0 - si))
    return sgn * val


def _sin_tail4(a: float, W: float) -> float:
    """int_W^inf sin(a w)/w^4 dw (odd in a)."""
    if a == 0.0:
        return 0.0
    sgn = 1.0 if a > 0 else -1.0
    a = abs(a)
    k3 = cos_tail(a, W, 3)
    return sgn * (math.sin(a * W) / (3 * W**3) + (a / 3.0) * k3)


def _channel_noise_tail(params: ModelParams, sign: int, W: float, t: float,
                        g12: float, g22: float, dg12: float, dg22: float):
    """Closed-form frequency tail of the transient noise block beyond W.

    Built from the by-parts expansion h_col = X/(i omega) + Y/omega^2 of the
    accumulated oscillatory integrals; only even (cos) and odd (sin) tail
    moments of the weight survive.  Accurate to O(|G'|^2 / W^4).
    """
    r = params.distance
    w_inf = _tail_prefactor(params)

    def cc(a):
        return (cos_tail(a, W, 3)
                + sign * 0.5 * (cos_tail(abs(a - r), W, 3) + cos_tail(a + r, W, 3)))

    def ss(a):
        return (_sin_tail4(a, W)
                + sign * 0.5 * (_sin_tail4(a - r, W) + _sin_tail4(a + r, W)))

    n11 = w_inf * (g12 * g12 * cc(0.0) - 2.0 * g12 * ss(t))
    n12 = w_inf * (g12 * g22 * cc(0.0) - g12 * cc(t) + (dg12 - g22) * ss(t))
    n22 = w_inf * ((1.0 + g22 * g22) * cc(0.0) - 2.0 * g22 * cc(t)
                   + 2.0 * dg22 * ss(t))
    return np.array([[n11, n12], [n12, n22]])


def _series_derivative(series: np.ndarray, h: float) -> np.ndarray:
    """Centered first derivative of a sampled channel entry; one-sided ends."""
    d = np.gradient(series, h, edge_order=2)
    return d


def covariance_time_series(greens: GreensFunction, params: ModelParams, times,
                           c0: CovarianceMatrix | None = None,
                           tol: float = 1e-5,
                           omega_max: float | None = None) -> list[CovarianceMatrix]:
    """C(t) at the requested times (each must sit on the stored G pair grid).

    One sweep over the Green's function grid serves all requested times;
    cost is O(N_grid * N_omega).  The physicality of every output is
    checked (symplectic eigenvalues >= 1 - 1e-4).
    """
    if greens.spacing is None:
        raise ValueError("covariance_time_series needs a uniform Green's function grid")
    h = greens.spacing
    grid = greens.time_grid
    if grid[0] != 0.0:
        raise ValueError("Green's function grid must start at t = 0")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("negative times requested")
    if np.any(times > grid[-1] + 1e-9):
        raise ValueError(
            f"requested time beyond stored Green's function grid "
            f"(t_max = {grid[-1]})")

    pair_idx = times / (2.0 * h)
    pair_int = np.rint(pair_idx).astype(int)
    if np.any(np.abs(pair_idx - pair_int) > 1e-6):
        raise ValueError("requested times must lie on the pair grid of G "
                         f"(step {2 * h})")

    c0 = c0 if c0 is not None else ground_state_covariance()
    lam0 = symplectic_eigenvalues(c0.entries)
    if lam0[0] < 1.0 - 1e-6:
        raise UnphysicalCovarianceError(
            f"initial covariance unphysical (min symplectic {lam0[0]})")
    cp0, cm0, cx0 = channel_blocks(c0.entries)

    t_max = float(times.max())
    if omega_max is None:
        w_inf = _tail_prefactor(params)
        # omega_max large enough that the post-correction tail error is < tol
        need = (2.0 * w_inf * (1.0 + (1.0 + channel_kernel_zero_max(params)) ** 2)
                / max(tol, 1e-12)) ** 0.25
        omega_max = float(min(max(15.0 * params.omega_cut, 15.0, need),
                              80.0 * params.omega_cut))
    x, w = frequency_grid(params, omega_max, t_scale=max(t_max, params.distance))

    n_pairs_needed = int(pair_int.max())
    slots = {}
    for i, p in enumerate(pair_int):
        slots.setdefault(int(p), []).append(i)

    noise = {+1: {}, -1: {}}
    for sign in (+1, -1):
        wv = w * _noise_weight(x, params, sign)
        series = greens.channel_series[sign]
        noise[sign] = _stream_channel(series, x, wv, h, n_pairs_needed, slots)

    out: list[CovarianceMatrix | None] = [None] * times.size
    d12 = {s: _series_derivative(greens.channel_series[s][:, 0, 1], h) for s in (+1, -1)}
    d22 = {s: _series_derivative(greens.channel_series[s][:, 1, 1], h) for s in (+1, -1)}

    for p, idxs in slots.items():
        gi = 2 * p
        t = grid[gi]
        blocks = {}
        for sign in (+1, -1):
            g = greens.channel_series[sign][gi]
            if p == 0:
                nmat = np.zeros((2, 2))
            else:
                nmat = noise[sign][p] + _channel_noise_tail(
                    params, sign, omega_max, t,
                    g[0, 1], g[1, 1], d12[sign][gi], d22[sign][gi])
            c0_block = cp0 if sign > 0 else cm0
            blocks[sign] = g @ c0_block @ g.T + nmat
        cross = greens.channel_series[+1][gi] @ cx0 @ greens.channel_series[-1][gi].T
        c4 = four_by_four(blocks[+1], blocks[-1], cross)
        cov = (CovarianceMatrix(entries=c0.entries, time_label=0.0) if p == 0 and t == 0.0
               else CovarianceMatrix(entries=c4, time_label=float(t)))
        assert_physical(cov, tol=1e-4)
        for i in idxs:
            out[i] = cov
    return out  # type: ignore[return-value]


def channel_kernel_zero_max(params: ModelParams) -> float:
    from .greens import channel_kernel_zero
    return max(channel_kernel_zero(params, +1), channel_kernel_zero(params, -1))


def _stream_channel(series: np.ndarray, x: np.ndarray, wv: np.ndarray,
                    h: float, n_pairs: int, slots: dict):
    """Sweep the Filon accumulators over the G grid, emitting noise blocks.

    Returns {pair_index: 2x2 noise matrix} for every requested pair > 0.
    """
    theta = x * h
    s0, p1, s2 = _filon_base(theta)
    step = np.exp(2j * x * h)
    ph = np.exp(1j * x * h)
    P1 = np.zeros_like(ph)
    P2 = np.zeros_like(ph)
    g12 = series[:, 0, 1]
    g22 = series[:, 1, 1]
    out = {}
    for pair in range(n_pairs):
        i0 = 2 * pair
        f0, f1, f2 = g12[i0], g12[i0 + 1], g12[i0 + 2]
        P1 = P1 + ph * ((h * (2.0 * f1 * s0 + (f0 - 2.0 * f1 + f2) * s2))
                        + 1j * (h * (f2 - f0)) * p1)
        f0, f1, f2 = g22[i0], g22[i0 + 1], g22[i0 + 2]
        P2 = P2 + ph * ((h * (2.0 * f1 * s0 + (f0 - 2.0 * f1 + f2) * s2))
                        + 1j * (h * (f2 - f0)) * p1)
        ph = ph * step
        key = pair + 1
        if key in slots:
            n11 = float(wv @ (P1.real**2 + P1.imag**2))
            n22 = float(wv @ (P2.real**2 + P2.imag**2))
            n12 = float(wv @ (P1.real * P2.real + P1.imag * P2.imag))
            out[key] = np.array([[n11, n12], [n12, n22]])
    return out


def covariance_time(t: float, c0: CovarianceMatrix, greens: GreensFunction,
                    params: ModelParams, tol: float = 1e-5) -> CovarianceMatrix:
    """Single-time covariance; see `covariance_time_series` for the contract."""
    if t == 0.0:
        lam0 = symplectic_eigenvalues(c0.entries)
        if lam0[0] < 1.0 - 1e-6:
            raise UnphysicalCovarianceError("initial covariance unphysical")
        return CovarianceMatrix(entries=c0.entries, time_label=0.0)
    return covariance_time_series(greens, params, [t], c0=c0, tol=tol)[0]
