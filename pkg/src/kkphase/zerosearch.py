"""Time-domain search for right-half-plane transfer-function zeros.

The probe x(t) = (exp(beta*t) - 1) cos(omega*t), switched off at t_off,
has Laplace poles at beta +- j*omega and +- j*omega. When a growing probe
pole lands on a system zero, the growing component vanishes from the
output; integrating |y| over the drive window therefore dips sharply at
zero locations. Scanning (beta, omega) and detecting strict local minima
of that integral recovers every RHP zero without touching the phase.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .cavity import StateSpaceModel
from .errors import PoleEvaluation, Undersampled
from .signals import TimeSignal
from .statesim import (
    eval_pole_residue,
    pole_residue_of,
    probe_response_exact,
    rational_impulse_response,
)
from .tfcore import (
    ModalTransferFunction,
    RationalTransferFunction,
    find_rhp_zeros,
)

#: Minimum samples per period of the fastest oscillation in a simulation.
MIN_SAMPLES_PER_PERIOD = 20

#: Default sampling of generated impulse responses (periods of the
#: fastest pole); convolution accuracy dominates blind-test accuracy.
BLIND_SAMPLES_PER_PERIOD = 40

DEFAULT_PROMINENCE = 3.0
DEFAULT_NEIGHBORHOOD = 5


@dataclass(frozen=True)
class ProbeSignal:
    """Scaled exponential-cosine probe.

    x(t) = exp(-scale_constant*beta) * (exp(beta*t) - 1) * cos(omega*t)
    on [0, t_off], zero outside. With scale_constant = t_off the peak
    magnitude never exceeds 1 for any beta.
    """

    beta: float
    omega: float
    t_off: float
    scale_constant: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.t_off <= 0:
            raise ValueError("t_off must be positive")

    def sample(self, times):
        t = np.asarray(times, dtype=float)
        live = (t >= 0) & (t <= self.t_off)
        grow = np.exp(self.beta * (t - self.scale_constant), where=live, out=np.zeros_like(t))
        base = grow - np.exp(-self.beta * self.scale_constant)
        x = np.where(live, base * np.cos(self.omega * t), 0.0)
        return x


def make_probe(beta, omega, t_off, scale_constant) -> ProbeSignal:
    return ProbeSignal(beta=beta, omega=omega, t_off=t_off, scale_constant=scale_constant)


def probe_laplace(probe: ProbeSignal, s, pole_eps: float = 1e-9):
    """One-sided transform of the unscaled, never-switched-off probe core:

        F(s) = (s - beta)/((s - beta)^2 + omega^2) - s/(s^2 + omega^2),

    poles at beta +- j*omega and +- j*omega. Verification aid only; the
    switched-off signal's transform is entire.
    """
    b, w = probe.beta, probe.omega
    sv = np.asarray(s, dtype=complex) if np.ndim(s) else complex(s)
    for p in (b + 1j * w, b - 1j * w, 1j * w, -1j * w):
        if np.any(np.abs(sv - p) < pole_eps * max(1.0, abs(p))):
            raise PoleEvaluation(f"evaluation too close to probe pole {p}")
    return (sv - b) / ((sv - b) ** 2 + w * w) - sv / (sv * sv + w * w)


@dataclass(frozen=True)
class ImpulseResponse:
    """Causal impulse response on a uniform grid starting at t = 0."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 2 or v.shape != t.shape:
            raise ValueError("need matching 1-D arrays with at least 2 samples")
        dt = np.diff(t)
        if not np.all(np.abs(dt - dt[0]) <= 1e-9 * dt[0]):
            raise ValueError("time grid is not uniform")
        if abs(t[0]) > 1e-12 * dt[0]:
            raise ValueError("impulse response must start at t = 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        t.setflags(write=False)
        v.setflags(write=False)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _natural_frequencies(sys):
    if isinstance(sys, (ModalTransferFunction, StateSpaceModel)):
        return float(np.max(sys.omegas))
    if isinstance(sys, RationalTransferFunction):
        return float(max((abs(p.imag) for p in sys.poles), default=0.0))
    return 0.0


def _required_dt(sys, probe: ProbeSignal) -> float:
    w_max = max(_natural_frequencies(sys), probe.omega)
    if w_max == 0.0:
        return probe.t_off / 1000.0
    return 2 * np.pi / (w_max * MIN_SAMPLES_PER_PERIOD)


def _check_sampling(dt, sys, probe):
    need = _required_dt(sys, probe)
    if dt > need * (1 + 1e-9):
        raise Undersampled(
            f"dt = {dt:g} s exceeds {need:g} s "
            f"({MIN_SAMPLES_PER_PERIOD} samples per fastest period)"
        )


def _convolve_probe(imp: ImpulseResponse, probe: ProbeSignal, n_t: int):
    """Trapezoid-weighted discrete convolution of g with the probe."""
    dt = imp.dt
    t = imp.times[:n_t]
    g = imp.values[:n_t]
    x = probe.sample(t)
    y = fftconvolve(x, g)[:n_t] * dt
    y -= 0.5 * dt * g[0] * x  # x(0) = 0 kills the other end correction
    return t, y


def system_response(sys, probe: ProbeSignal, dt=None, t_end=None, method="exact") -> TimeSignal:
    """Response y(t) on [0, t_end] (default [0, t_off]) to the probe.

    Sampled impulse responses are convolved with trapezoid weighting;
    pole-residue systems (modal, state-space, rational) integrate exactly
    via the closed-form exponential expansion. method="rk45" forces an
    adaptive ODE solve instead, for cross-checking the closed form.
    """
    t_end = probe.t_off if t_end is None else t_end
    if isinstance(sys, ImpulseResponse):
        if dt is not None and abs(dt - sys.dt) > 1e-9 * sys.dt:
            raise ValueError("dt must match the impulse-response grid")
        _check_sampling(sys.dt, sys, probe)
        n_t = int(np.floor(t_end / sys.dt + 1e-9)) + 1
        if n_t > len(sys.times):
            raise ValueError("impulse response shorter than the requested window")
        t, y = _convolve_probe(sys, probe, n_t)
        return TimeSignal(times=t, values=y)

    if t_end > probe.t_off * (1 + 1e-12):
        raise ValueError(
            "closed-form routes expand the un-switched-off probe transform "
            "and are valid only on [0, t_off]; shorten t_end or convolve "
            "with a sampled impulse response"
        )
    if dt is None:
        dt = _required_dt(sys, probe) / 2.0
    _check_sampling(dt, sys, probe)
    n_t = int(np.floor(t_end / dt + 1e-9)) + 1
    t = np.arange(n_t) * dt
    if method == "rk45":
        return TimeSignal(times=t, values=_rk45_response(sys, probe, t))
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    poles, res = pole_residue_of(sys)
    y = probe_response_exact(poles, res, probe.beta, probe.omega, probe.scale_constant, t)
    return TimeSignal(times=t, values=y)


def _rk45_response(sys, probe, times):
    from scipy.integrate import solve_ivp

    poles, res = pole_residue_of(sys)
    g = lambda tt: np.real(np.sum(res * np.exp(poles * tt)))  # noqa: E731
    if isinstance(sys, (ModalTransferFunction, StateSpaceModel)):
        if isinstance(sys, ModalTransferFunction):
            om, b, c = sys.omegas, sys.couplings, np.ones_like(sys.omegas)
        else:
            om, b, c = sys.omegas, sys.b_entries, sys.c_entries
        n = len(om)

        def rhs(tt, state):
            u, v = state[:n], state[n:]
            x = probe.sample(tt)
            return np.concatenate([v, -om * om * u + b * x])

        sol = solve_ivp(
            rhs,
            (times[0], times[-1]),
            np.zeros(2 * n),
            t_eval=times,
            rtol=1e-9,
            atol=1e-12,
            max_step=(times[1] - times[0]),
        )
        return c @ sol.y[n:]
    raise TypeError("rk45 cross-check supports modal systems only")


def e_int(y: TimeSignal, t_off: float) -> float:
    """Integral of |y| over [0, t_off] by the trapezoid rule."""
    if t_off > y.times[-1] + 1e-9 * y.dt:
        raise ValueError("signal does not cover [0, t_off]")
    sel = y.times <= t_off * (1 + 1e-12)
    return float(np.trapezoid(np.abs(y.values[sel]), dx=y.dt))


@dataclass(frozen=True)
class EintGrid:
    """Output-magnitude integrals over a (beta, omega) probe grid."""

    betas: np.ndarray
    omegas: np.ndarray
    e_int: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        w = np.asarray(self.omegas, dtype=float)
        e = np.asarray(self.e_int, dtype=float)
        if np.any(np.diff(b) <= 0) or np.any(np.diff(w) <= 0):
            raise ValueError("grids must be strictly ascending")
        if e.shape != (len(b), len(w)):
            raise ValueError("e_int shape must be (len(betas), len(omegas))")
        if np.any(e < 0):
            raise ValueError("integrated output magnitudes cannot be negative")
        for arr, name in ((b, "betas"), (w, "omegas"), (e, "e_int")):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)


@dataclass(frozen=True)
class DetectedZero:
    """A strict local minimum of the scan grid, quadratically refined."""

    beta_hat: float
    omega_hat: float
    e_int_value: float
    prominence: float


def _scan_impulse(imp: ImpulseResponse, betas, omegas, t_off, scale_constant):
    dt = imp.dt
    n_t = int(np.floor(t_off / dt + 1e-9)) + 1
    if n_t > len(imp.times):
        raise ValueError("impulse response shorter than t_off")
    t = imp.times[:n_t]
    g = imp.values[:n_t]
    cos_wt = np.cos(np.outer(omegas, t))

    def one_row(i):
        b = betas[i]
        base = np.exp(b * (t - scale_constant)) - np.exp(-b * scale_constant)
        x = base[None, :] * cos_wt
        y = fftconvolve(x, g[None, :], axes=1)[:, :n_t] * dt
        y -= 0.5 * dt * g[0] * x
        return np.trapezoid(np.abs(y), dx=dt, axis=1)

    return one_row


def _scan_pole_residue(sys, betas, omegas, t_off, scale_constant, dt):
    poles, res = pole_residue_of(sys)
    n_t = int(np.floor(t_off / dt + 1e-9)) + 1
    t = np.arange(n_t) * dt
    # basis of system-pole exponentials, shared by every cell
    basis = np.exp(np.outer(poles, t))  # (np, nt) complex
    g_at = lambda s: eval_pole_residue(poles, res, s)  # noqa: E731
    cos_wt = np.cos(np.outer(omegas, t))
    sin_wt = np.sin(np.outer(omegas, t))

    def one_row(i):
        b = betas[i]
        if b == 0.0:
            return np.zeros(len(omegas))
        damp = np.exp(-scale_constant * b)
        # residues at system poles: r_k * X(p_k) per cell
        xk = np.empty((len(omegas), len(poles)), dtype=complex)
        for j, w in enumerate(omegas):
            pp, rp = _probe_terms_nudged(poles, b, w)
            xk[j] = np.sum(rp / (poles[:, None] - pp[None, :]), axis=1)
        y = damp * np.real((xk * res[None, :]) @ basis)
        # probe poles: growing pair G(b + jw) and steady pair G(jw)
        grow = np.exp(np.outer(np.full(len(omegas), b), t - scale_constant))
        for j, w in enumerate(omegas):
            pp, rp = _probe_terms_nudged(poles, b, w)
            if w == 0.0:
                y[j] += g_at(pp[0]).real * grow[j]
                y[j] -= g_at(pp[1]).real * damp
            else:
                gp = g_at(pp[0])
                y[j] += grow[j] * (gp.real * cos_wt[j] - gp.imag * sin_wt[j])
                g0 = g_at(pp[2])
                y[j] -= damp * (g0.real * cos_wt[j] - g0.imag * sin_wt[j])
        return np.trapezoid(np.abs(y), dx=dt, axis=1)

    return one_row


def _probe_terms_nudged(sys_poles, beta, omega, rtol=1e-9):
    """Probe poles, with omega nudged off exact system-pole collisions."""
    from .statesim import probe_pole_terms

    w = omega
    if w > 0:
        ords = np.abs(sys_poles.imag)
        close = np.abs(ords - w) <= rtol * np.maximum(ords, 1.0)
        if np.any(close):
            w = w * (1 + 10 * rtol) + 10 * rtol
    return probe_pole_terms(beta, w)


def scan(sys, betas, omegas, t_off, scale_constant, dt=None, threads=1) -> EintGrid:
    """E_int over the probe grid; cells are independent and deterministic.

    betas/omegas are ascending 1-D grids. For sampled impulse responses
    dt is the response's own grid; for pole-residue systems it defaults
    to half the sampling-rule step.
    """
    betas = np.asarray(betas, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    if betas.size == 0 or omegas.size == 0:
        raise ValueError("empty scan grid")
    probe_max = make_probe(float(betas[-1]), float(omegas[-1]), t_off, scale_constant)
    if isinstance(sys, ImpulseResponse):
        _check_sampling(sys.dt, sys, probe_max)
        one_row = _scan_impulse(sys, betas, omegas, t_off, scale_constant)
    else:
        if dt is None:
            dt = _required_dt(sys, probe_max) / 2.0
        _check_sampling(dt, sys, probe_max)
        one_row = _scan_pole_residue(sys, betas, omegas, t_off, scale_constant, dt)

    e = np.empty((len(betas), len(omegas)))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, row in enumerate(pool.map(one_row, range(len(betas)))):
                e[i] = row
    else:
        for i in range(len(betas)):
            e[i] = one_row(i)
    return EintGrid(betas=betas, omegas=omegas, e_int=e)


def _refine_parabolic(vals3) -> float:
    """Sub-cell offset of the minimum of a 3-point parabola, in cell units."""
    a, b, c = vals3
    denom = a - 2 * b + c
    if denom <= 0:
        return 0.0
    return float(np.clip(0.5 * (a - c) / denom, -1.0, 1.0))


def detect_minima(
    grid: EintGrid,
    prominence_threshold: float = DEFAULT_PROMINENCE,
    neighborhood_radius: int = DEFAULT_NEIGHBORHOOD,
    refine: bool = True,
):
    """Strict 8-neighborhood local minima with sufficient prominence.

    Prominence is the ratio of the neighborhood median (a square window of
    the given radius) to the center value. Conjugate partners at -omega
    are implied, not listed. Refinement fits one parabola per axis through
    the squared stencil values; the squared surface is smooth at the
    conical minimum a pole-zero cancellation produces.
    """
    e = grid.e_int
    nb, no = e.shape
    if no == 1 or nb == 1:
        return _detect_minima_1d(grid, prominence_threshold, neighborhood_radius, refine)
    if nb < 3 or no < 3:
        raise ValueError("grid must be at least 3 x 3 (or a single row/column)")
    out = []
    for i in range(1, nb - 1):
        for j in range(1, no - 1):
            c = e[i, j]
            patch = e[i - 1 : i + 2, j - 1 : j + 2]
            if c > patch.min() or np.sum(patch == c) > 1:
                continue
            i0, i1 = max(i - neighborhood_radius, 0), min(i + neighborhood_radius + 1, nb)
            j0, j1 = max(j - neighborhood_radius, 0), min(j + neighborhood_radius + 1, no)
            med = float(np.median(e[i0:i1, j0:j1]))
            prom = np.inf if c == 0 else med / c
            if prom < prominence_threshold:
                continue
            bi, wj = grid.betas[i], grid.omegas[j]
            if refine:
                sq = patch.astype(float) ** 2
                di = _refine_parabolic(sq[:, 1])
                dj = _refine_parabolic(sq[1, :])
                bi = bi + di * (grid.betas[i + 1] - grid.betas[i] if di >= 0 else grid.betas[i] - grid.betas[i - 1])
                wj = wj + dj * (grid.omegas[j + 1] - grid.omegas[j] if dj >= 0 else grid.omegas[j] - grid.omegas[j - 1])
            out.append(
                DetectedZero(
                    beta_hat=float(bi),
                    omega_hat=float(wj),
                    e_int_value=float(c),
                    prominence=float(prom),
                )
            )
    out.sort(key=lambda d: d.omega_hat)
    return out


def _detect_minima_1d(grid, prominence_threshold, neighborhood_radius, refine):
    """Degenerate sweep: one row (fixed beta) or one column (fixed omega)."""
    along_beta = grid.e_int.shape[1] == 1
    line = grid.e_int[:, 0] if along_beta else grid.e_int[0, :]
    axis = grid.betas if along_beta else grid.omegas
    if len(line) < 3:
        raise ValueError("1-D sweep needs at least 3 points")
    out = []
    for i in range(1, len(line) - 1):
        c = line[i]
        if not (c < line[i - 1] and c < line[i + 1]):
            continue
        i0 = max(i - neighborhood_radius, 0)
        i1 = min(i + neighborhood_radius + 1, len(line))
        med = float(np.median(line[i0:i1]))
        prom = np.inf if c == 0 else med / c
        if prom < prominence_threshold:
            continue
        pos = axis[i]
        if refine:
            sq = line[i - 1 : i + 2].astype(float) ** 2
            d = _refine_parabolic(sq)
            pos = pos + d * (axis[i + 1] - axis[i] if d >= 0 else axis[i] - axis[i - 1])
        beta_hat = float(pos) if along_beta else float(grid.betas[0])
        omega_hat = float(grid.omegas[0]) if along_beta else float(pos)
        out.append(
            DetectedZero(
                beta_hat=beta_hat,
                omega_hat=omega_hat,
                e_int_value=float(c),
                prominence=float(prom),
            )
        )
    out.sort(key=lambda d: d.omega_hat)
    return out


def refine_detections(
    sys,
    grid: EintGrid,
    detections,
    t_off: float,
    scale_constant: float,
    dt=None,
    window_cells: float = 1.2,
    zoom_points: int = 41,
    threads: int = 1,
):
    """Second-stage grid sweep around each detection.

    Localisation accuracy is limited by the sample density of the sweep;
    a zoomed sweep of +-window_cells coarse cells around each minimum
    recovers the sub-cell position without any continuous optimization.
    Returns refined DetectedZero entries in the input order.
    """
    d_beta = np.min(np.diff(grid.betas))
    d_omega = np.min(np.diff(grid.omegas))
    out = []
    for det in detections:
        b2 = np.linspace(
            max(det.beta_hat - window_cells * d_beta, grid.betas[0]),
            det.beta_hat + window_cells * d_beta,
            zoom_points,
        )
        w2 = np.linspace(
            det.omega_hat - window_cells * d_omega,
            det.omega_hat + window_cells * d_omega,
            zoom_points,
        )
        g2 = scan(sys, b2, w2, t_off, scale_constant, dt=dt, threads=threads)
        i, j = np.unravel_index(np.argmin(g2.e_int), g2.e_int.shape)
        i = min(max(i, 1), zoom_points - 2)
        j = min(max(j, 1), zoom_points - 2)
        sq = g2.e_int[i - 1 : i + 2, j - 1 : j + 2] ** 2
        bh = b2[i] + _refine_parabolic(sq[:, 1]) * (b2[1] - b2[0])
        wh = w2[j] + _refine_parabolic(sq[1, :]) * (w2[1] - w2[0])
        out.append(
            DetectedZero(
                beta_hat=float(bh),
                omega_hat=float(wh),
                e_int_value=float(g2.e_int[i, j]),
                prominence=det.prominence,
            )
        )
    return out


@dataclass(frozen=True)
class BlindTestSpec:
    """All-pass-over-pole family with hidden RHP zeros at mu_k.

    G(s) = i/(s + chi) * prod_k (s - mu_k)(s - conj(mu_k)) /
                                ((s + mu_k)(s + conj(mu_k)))

    with mu_k = beta_k + j*omega_k, all beta_k, omega_k, chi positive.
    On the axis |G(jw)| = |i| / |jw + chi|: the all-pass factors hide the
    zeros from the magnitude entirely. real_mus adds unpaired real-axis
    zeros x via factors (s - x)/(s + x), the target of the degenerate
    omega = 0 sweep.
    """

    mus: tuple
    chi: float
    current_scale: float = 1.0
    real_mus: tuple = ()

    def __post_init__(self):
        mus = tuple(complex(m) for m in self.mus)
        reals = tuple(float(x) for x in self.real_mus)
        if not mus and not reals:
            raise ValueError("need at least one hidden zero")
        for mu in mus:
            if mu.real <= 0 or mu.imag <= 0:
                raise ValueError(f"mu = {mu} must have positive real and imaginary parts")
        for x in reals:
            if x <= 0:
                raise ValueError("real zeros must be positive")
            if abs(x - self.chi) <= 1e-9 * max(x, self.chi):
                raise ValueError("a real zero at chi would cancel the pole at -chi")
        if self.chi <= 0:
            raise ValueError("chi must be positive")
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "real_mus", reals)

    def transfer_function(self) -> RationalTransferFunction:
        zeros, poles = [], [-self.chi + 0.0j]
        for mu in self.mus:
            zeros += [mu, np.conj(mu)]
            poles += [-mu, -np.conj(mu)]
        for x in self.real_mus:
            zeros.append(complex(x))
            poles.append(complex(-x))
        return RationalTransferFunction(
            zeros=tuple(zeros), poles=tuple(poles), gain=self.current_scale
        )


def random_blind_spec(
    rng_seed: int,
    n_pairs: int = 2,
    beta_range=(0.3, 2.0),
    omega_range=(2.0, 12.0),
    chi_range=(0.5, 2.0),
) -> BlindTestSpec:
    """Draw a hidden zero configuration for protocol-style exercises."""
    rng = np.random.default_rng(rng_seed)
    mus = [
        complex(rng.uniform(*beta_range), rng.uniform(*omega_range))
        for _ in range(n_pairs)
    ]
    return BlindTestSpec(mus=tuple(mus), chi=float(rng.uniform(*chi_range)))


def generate_blind_test(
    spec: BlindTestSpec,
    rng_seed: int | None = None,
    t_max: float | None = None,
    dt: float | None = None,
):
    """Sampled impulse response plus the sealed answer key.

    The response comes from the exact residue expansion of the hidden
    rational form. The returned RhpZeroSet is for post-hoc verification
    only and must not feed the search. rng_seed is unused for an explicit
    spec; it seeds random_blind_spec-style generation upstream.
    """
    tf = spec.transfer_function()
    w_fast = max(abs(p.imag) for p in tf.poles)
    if dt is None:
        dt = 2 * np.pi / (max(w_fast, 1.0) * BLIND_SAMPLES_PER_PERIOD)
    if t_max is None:
        slowest = min(abs(p.real) for p in tf.poles)
        t_max = 12.0 / slowest
    times = np.arange(0.0, t_max + dt, dt)
    values = rational_impulse_response(tf, times)
    return ImpulseResponse(times=times, values=values), find_rhp_zeros(tf)
