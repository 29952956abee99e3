"""Kramers-Kronig phase/magnitude reconstruction with all-pass corrections.

The core relation recovers the phase gamma of a causal response from its
log magnitude along the shifted line s = kappa + j*omega:

    gamma(w) = (1/pi) PV int  ln|G(j w' + kappa)| / (w' - w) dw'.

That holds only for minimum-phase responses. Right-half-plane zeros are
handled by an all-pass (Blaschke) phase correction, and a zero at infinite
frequency (G ~ 1/s^k) by the factor P(s) = (s/w_ref + 1)^k, giving

    gamma(w) = PV[ln|G| + (k/2) ln((w'/w_ref)^2 + 1)]
               - k*atan2(w/w_ref, 1) + arg B(jw).

Quadrature: the integral is folded to [0, w_max] using the even symmetry
of ln|G|, regularized by subtracting the singularity, integrated with the
composite trapezoid rule on the supplied grid, and closed with an analytic
tail that continues the integrand as c - k*ln(w') (phase direction) or
c + d/w' (magnitude direction) beyond the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spence

from .errors import GridTooCoarse
from .tfcore import RhpZeroSet, sample_on_axis

_NEAR_NODE_RTOL = 1e-12


@dataclass(frozen=True)
class MagnitudeSpectrum:
    """ln|G(j*omega + kappa)| samples on an ascending grid in [0, w_max]."""

    omegas: np.ndarray
    log_mag: np.ndarray
    kappa: float = 0.0

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        lm = np.asarray(self.log_mag, dtype=float)
        if om.ndim != 1 or om.size < 4 or lm.shape != om.shape:
            raise ValueError("need matching 1-D grids with at least 4 samples")
        if om[0] < 0 or np.any(np.diff(om) <= 0):
            raise ValueError("grid must be strictly ascending and non-negative")
        if not np.all(np.isfinite(lm)):
            raise ValueError("log magnitude must be finite everywhere "
                             "(kappa must clear on-axis zeros and poles)")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "log_mag", lm)
        om.setflags(write=False)
        lm.setflags(write=False)


@dataclass(frozen=True)
class PhaseCurve:
    """Unwrapped phase samples [rad] over omega >= 0; gamma(-w) = -gamma(w)."""

    omegas: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        if om.ndim != 1 or g.shape != om.shape:
            raise ValueError("omegas and gamma must be matching 1-D arrays")
        if np.any(np.diff(om) <= 0) or om[0] < 0:
            raise ValueError("grid must be strictly ascending and non-negative")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "gamma", g)
        om.setflags(write=False)
        g.setflags(write=False)


@dataclass(frozen=True)
class InfinityCorrection:
    """Multiplicity k of the zero at infinite frequency; G ~ 1/s^k.

    The correction factor is (s/omega_ref + 1)^k. The reference frequency
    fixes the unit scale of the factor's own corner and is 1 rad/s unless
    the problem's natural unit differs.
    """

    k: int = 0
    omega_ref: float = 1.0

    def __post_init__(self):
        if self.k < 0 or int(self.k) != self.k:
            raise ValueError("k must be a non-negative integer")
        if self.omega_ref <= 0:
            raise ValueError("omega_ref must be positive")


NO_CORRECTION = InfinityCorrection(k=0)
EMPTY_ZEROS = RhpZeroSet(pairs=(), real_zeros=())


def infinity_arg(corr: InfinityCorrection, omega):
    """(log-magnitude, phase) contributions of the infinity factor at omega."""
    w = np.asarray(omega, dtype=float) / corr.omega_ref
    log_term = 0.5 * corr.k * np.log(w * w + 1.0)
    arg_term = corr.k * np.arctan2(w, 1.0)
    if np.ndim(omega):
        return log_term, arg_term
    return float(log_term), float(arg_term)


def blaschke_arg(zeros: RhpZeroSet, omega, kappa: float = 0.0):
    """Phase of the all-pass factor that mirrors the given zeros.

    Each conjugate pair z = x + j y contributes

        atan2(2 x (y - w), x^2 - (y - w)^2) - atan2(2 x (y + w), x^2 - (y + w)^2)

    and an unpaired real zero contributes the single-factor term
    atan2(-2 x w, x^2 - w^2), i.e. -2 atan(w/x). The result is continuous
    in omega and zero at omega = 0.

    kappa shifts the mirror line to Re s = kappa: a response measured
    along that line sees a zero at x + j y at effective distance x - kappa.
    """
    w = np.asarray(omega, dtype=float)
    out = np.zeros_like(w)
    for z in zeros.pairs:
        x, y = z.real - kappa, z.imag
        if x <= 0:
            raise ValueError(
                f"zero {z} lies at or left of the evaluation line Re s = {kappa:g}"
            )
        um = y - w
        up = y + w
        out += np.arctan2(2 * x * um, x * x - um * um)
        out -= np.arctan2(2 * x * up, x * x - up * up)
    for x0 in zeros.real_zeros:
        x = x0 - kappa
        if x <= 0:
            raise ValueError(
                f"real zero {x0} lies at or left of the evaluation line Re s = {kappa:g}"
            )
        out += np.arctan2(-2 * x * w, x * x - w * w)
    return out if np.ndim(omega) else float(out)


def blaschke_product(zeros: RhpZeroSet, s):
    """B(s) as the explicit product over zero factors (s - z)/(-conj(z) - s)."""
    sv = np.asarray(s, dtype=complex) if np.ndim(s) else complex(s)
    out = np.ones(np.shape(sv), dtype=complex)
    for z in zeros.all_zeros():
        out = out * (sv - z) / (-np.conj(z) - sv)
    return out if np.ndim(s) else complex(out)


def _dilog_diff(a):
    """Li2(a) - Li2(-a) for 0 <= a < 1."""
    return spence(1.0 - a) - spence(1.0 + a)


def _tail_fit_phase(omegas, f):
    """Least-squares c - k*ln(w) over the top decade of the grid."""
    sel = omegas >= omegas[-1] / 10.0
    basis = np.stack([np.ones(np.sum(sel)), -np.log(omegas[sel])], axis=1)
    (c, k), *_ = np.linalg.lstsq(basis, f[sel], rcond=None)
    return float(c), float(k)


def _tail_fit_flat(omegas, f):
    """Least-squares c + d/w over the top decade of the grid."""
    sel = omegas >= omegas[-1] / 10.0
    basis = np.stack([np.ones(np.sum(sel)), 1.0 / omegas[sel]], axis=1)
    (c, d), *_ = np.linalg.lstsq(basis, f[sel], rcond=None)
    return float(c), float(d)


def _pv_fold_even(omegas, f, eval_omegas):
    """(1/pi) PV int_-inf^inf f(w')/(w' - w) dw' for even f.

    Folds to (2w/pi) PV int_0^W f/(w'^2 - w^2) dw' with singularity
    subtraction; beyond W the integrand continues as c - k*ln(w').
    """
    W = omegas[-1]
    c_fit, k_fit = _tail_fit_phase(omegas, f)
    om = omegas if omegas[0] == 0.0 else np.concatenate([[0.0], omegas])
    fg = f if omegas[0] == 0.0 else np.concatenate([[f[0]], f])
    out = np.empty(len(eval_omegas))
    om2 = om * om
    for i, w in enumerate(eval_omegas):
        if not 0.0 < w < W:
            raise ValueError(f"evaluation frequency {w:g} outside (0, {W:g})")
        fw = np.interp(w, omegas, f)
        denom = om2 - w * w
        k_near = int(np.argmin(np.abs(om - w)))
        safe = denom.copy()
        safe[k_near] = 1.0
        integrand = (fg - fw) * (2.0 * w) / safe
        # limit of the regularized integrand at the singular node is f'(w)
        lo, hi = max(k_near - 1, 0), min(k_near + 1, len(om) - 1)
        if abs(om[k_near] - w) <= _NEAR_NODE_RTOL * max(w, 1e-300):
            integrand[k_near] = (fg[hi] - fg[lo]) / (om[hi] - om[lo])
        else:
            integrand[k_near] = (fg[k_near] - fw) * (2.0 * w) / denom[k_near]
        total = np.trapezoid(integrand, om)
        total += fw * np.log((W - w) / (W + w))
        a = w / W
        kernel_tail = np.log((1.0 + a) / (1.0 - a))
        total += c_fit * kernel_tail
        total -= k_fit * (np.log(W) * kernel_tail + _dilog_diff(a))
        out[i] = total / np.pi
    return out


def _pv_fold_odd(omegas, f, eval_omegas, ref_omega):
    """(1/pi) PV int_-inf^inf f(w')/(w' - w) dw' for odd f, referenced.

    Folds to (1/pi) PV int_0^W f * 2w'/(w'^2 - w^2) dw'. The tail constant
    c makes the absolute integral diverge logarithmically, so the result
    is reported relative to ref_omega where the divergence cancels.
    """
    W = omegas[-1]
    c_fit, d_fit = _tail_fit_flat(omegas, f)
    om = omegas if omegas[0] == 0.0 else np.concatenate([[0.0], omegas])
    fg = f if omegas[0] == 0.0 else np.concatenate([[0.0], f])  # odd: f(0) = 0
    om2 = om * om
    evals = np.concatenate([eval_omegas, [ref_omega]])
    raw = np.empty(len(evals))
    for i, w in enumerate(evals):
        if not 0.0 < w < W:
            raise ValueError(f"evaluation frequency {w:g} outside (0, {W:g})")
        fw = np.interp(w, omegas, f)
        denom = om2 - w * w
        k_near = int(np.argmin(np.abs(om - w)))
        safe = denom.copy()
        safe[k_near] = 1.0
        integrand = (fg - fw) * (2.0 * om) / safe
        lo, hi = max(k_near - 1, 0), min(k_near + 1, len(om) - 1)
        if abs(om[k_near] - w) <= _NEAR_NODE_RTOL * max(w, 1e-300):
            integrand[k_near] = (fg[hi] - fg[lo]) / (om[hi] - om[lo])
        else:
            integrand[k_near] = (fg[k_near] - fw) * (2.0 * om[k_near]) / denom[k_near]
        total = np.trapezoid(integrand, om)
        total += fw * np.log((W * W - w * w) / (w * w))
        # tail relative to the divergent part: d/w' piece converges outright
        total += -c_fit * np.log(W * W - w * w)
        total += (d_fit / w) * np.log((W + w) / (W - w))
        raw[i] = total / np.pi
    return raw[:-1] - raw[-1]


def pv_phase_from_magnitude(
    mag: MagnitudeSpectrum,
    eval_omegas=None,
    phase_tol_rad: float | None = None,
) -> PhaseCurve:
    """Minimum-phase estimate from log magnitude alone.

    Evaluation defaults to the data-grid midpoints, which keeps the
    singular node off the data samples. With phase_tol_rad set, the result
    is compared against a half-resolution recomputation and GridTooCoarse
    is raised where the delta exceeds the tolerance.
    """
    eval_omegas = _default_eval(mag.omegas, eval_omegas)
    gamma = _pv_fold_even(mag.omegas, mag.log_mag, eval_omegas)
    if phase_tol_rad is not None:
        _check_refinement(mag.omegas, mag.log_mag, eval_omegas, gamma, phase_tol_rad)
    return PhaseCurve(omegas=eval_omegas, gamma=gamma)


def _default_eval(omegas, eval_omegas):
    if eval_omegas is None:
        return 0.5 * (omegas[:-1] + omegas[1:])
    ev = np.asarray(eval_omegas, dtype=float)
    if np.any(np.diff(ev) <= 0):
        raise ValueError("evaluation grid must be strictly ascending")
    return ev


def _check_refinement(omegas, f, eval_omegas, gamma, tol):
    coarse = _pv_fold_even(omegas[::2], f[::2], eval_omegas)
    delta = np.abs(gamma - coarse)
    worst = int(np.argmax(delta))
    if delta[worst] > tol:
        raise GridTooCoarse(
            f"estimated phase error {delta[worst]:.3e} rad at "
            f"omega = {eval_omegas[worst]:.6e} rad/s exceeds {tol:.3e} rad",
            omega=float(eval_omegas[worst]),
            error_estimate=float(delta[worst]),
        )


def reconstruct_phase(
    mag: MagnitudeSpectrum,
    zeros: RhpZeroSet = EMPTY_ZEROS,
    corr: InfinityCorrection = NO_CORRECTION,
    eval_omegas=None,
    *,
    shift_blaschke_by_kappa: bool = True,
    dc_sign: int = 1,
    phase_tol_rad: float | None = None,
) -> PhaseCurve:
    """Full phase reconstruction: dispersion integral plus corrections.

    The returned curve is continuous in omega by construction (integral,
    arctangent and all-pass terms are each continuous), anchored at
    gamma(0) = 0; the branch offset pi is added when dc_sign < 0, i.e.
    when the response is known to be negative at omega -> 0+. Identifying
    the curve with a principal-value argument is only possible mod 2*pi.

    shift_blaschke_by_kappa evaluates the all-pass correction for the
    line Re s = kappa that the magnitude data live on; with kappa much
    smaller than every zero's real part the shift is negligible.
    """
    eval_omegas = _default_eval(mag.omegas, eval_omegas)
    log_term, _ = infinity_arg(corr, mag.omegas)
    integrand = mag.log_mag + log_term
    gamma = _pv_fold_even(mag.omegas, integrand, eval_omegas)
    if phase_tol_rad is not None:
        _check_refinement(mag.omegas, integrand, eval_omegas, gamma, phase_tol_rad)
    _, arg_term = infinity_arg(corr, eval_omegas)
    gamma = gamma - arg_term
    if len(zeros):
        kappa = mag.kappa if shift_blaschke_by_kappa else 0.0
        gamma = gamma + blaschke_arg(zeros, eval_omegas, kappa=kappa)
    if dc_sign < 0:
        gamma = gamma + np.pi
    return PhaseCurve(omegas=eval_omegas, gamma=gamma)


def magnitude_from_phase(
    phase: PhaseCurve,
    zeros: RhpZeroSet = EMPTY_ZEROS,
    eval_omegas=None,
    corr: InfinityCorrection = NO_CORRECTION,
    *,
    ref_omega: float | None = None,
    ref_log_mag: float = 0.0,
    kappa: float = 0.0,
    shift_blaschke_by_kappa: bool = True,
) -> MagnitudeSpectrum:
    """Inverse relation: log magnitude from phase and known corrections.

    The dispersion integral determines ln|G| only up to an additive
    constant; the output is normalized to ln|G(ref_omega)| = ref_log_mag
    (ref_omega defaults to the geometric mid-point of the evaluation
    band).
    """
    eval_omegas = _default_eval(phase.omegas, eval_omegas)
    if ref_omega is None:
        ref_omega = float(np.sqrt(eval_omegas[0] * eval_omegas[-1]))
    f = -phase.gamma.copy()
    if len(zeros):
        kap = kappa if shift_blaschke_by_kappa else 0.0
        f = f + blaschke_arg(zeros, phase.omegas, kappa=kap)
    _, arg_term = infinity_arg(corr, phase.omegas)
    f = f - arg_term
    rel = _pv_fold_odd(phase.omegas, f, eval_omegas, ref_omega)
    log_ref, _ = infinity_arg(corr, ref_omega)
    log_here, _ = infinity_arg(corr, eval_omegas)
    log_mag = rel - (log_here - log_ref) + ref_log_mag
    return MagnitudeSpectrum(omegas=eval_omegas, log_mag=log_mag, kappa=kappa)


def refined_omega_grid(
    omega_min: float,
    omega_max: float,
    peaks=(),
    half_width: float | None = None,
    base_points: int = 20000,
    points_per_peak: int = 160,
    span: float = 40.0,
    log_base: bool = False,
):
    """Sampling grid with local refinement around sharp spectral features.

    peaks lists feature frequencies (resonances, notches); each gets
    points_per_peak extra nodes across +-span*half_width.
    """
    if log_base:
        base = np.logspace(np.log10(omega_min), np.log10(omega_max), base_points)
    else:
        base = np.linspace(omega_min, omega_max, base_points)
    parts = [base]
    if half_width is not None and len(peaks):
        for pk in peaks:
            lo = max(pk - span * half_width, omega_min)
            hi = min(pk + span * half_width, omega_max)
            if hi > lo:
                parts.append(np.linspace(lo, hi, points_per_peak))
    grid = np.unique(np.concatenate(parts))
    return grid[(grid >= omega_min) & (grid <= omega_max)]


def hybrid_omega_grid(
    omega_min: float,
    omega_mid: float,
    omega_max: float,
    n_linear: int = 60000,
    n_log: int = 6000,
    peaks=(),
    half_width: float | None = None,
    points_per_peak: int = 200,
    span: float = 40.0,
):
    """Linear grid through the feature band, log extension to the tail,
    plus local refinement around each peak."""
    parts = [
        np.linspace(omega_min, omega_mid, n_linear),
        np.logspace(np.log10(omega_mid), np.log10(omega_max), n_log),
    ]
    if half_width is not None:
        for pk in peaks:
            lo = max(pk - span * half_width, omega_min)
            hi = min(pk + span * half_width, omega_max)
            if hi > lo:
                parts.append(np.linspace(lo, hi, points_per_peak))
    grid = np.unique(np.concatenate(parts))
    return grid[(grid >= omega_min) & (grid <= omega_max)]


def spectral_features_of(tf):
    """Feature ordinates of a lossless modal response along the axis:
    resonances, on-axis zeros, and RHP-zero ordinates. Magnitude and
    phase vary over a width of order kappa around the first two, so
    sampling grids must refine there."""
    from .tfcore import ModalTransferFunction, modal_to_rational

    if not isinstance(tf, ModalTransferFunction):
        raise TypeError("spectral features are defined for modal responses")
    feats = [np.asarray(tf.omegas)]
    try:
        rat = modal_to_rational(tf)
    except Exception:
        rat = None
    if rat is not None:
        axis = [z.imag for z in rat.zeros if z.real == 0 and z.imag > 0]
        rhp = [abs(z.imag) for z in rat.zeros if z.real > 0 and z.imag > 0]
        feats.append(np.asarray(axis))
        feats.append(np.asarray(rhp))
    return np.unique(np.concatenate(feats))


def magnitude_spectrum_of(tf, kappa: float, omegas) -> MagnitudeSpectrum:
    """Sample ln|G(kappa + j*omega)| of a transfer function."""
    resp = sample_on_axis(tf, kappa, omegas)
    mags = np.abs(resp.values)
    if np.any(mags == 0.0):
        raise ValueError("magnitude vanished on the grid; increase kappa")
    return MagnitudeSpectrum(omegas=resp.omegas, log_mag=np.log(mags), kappa=kappa)


def direct_phase_of(tf, kappa: float, omegas) -> PhaseCurve:
    """Unwrapped arg G(kappa + j*omega), the comparison target for
    reconstructions. The grid must resolve every feature of width ~kappa,
    otherwise unwrapping can miss full turns."""
    resp = sample_on_axis(tf, kappa, omegas)
    gamma = np.unwrap(np.angle(resp.values))
    return PhaseCurve(omegas=resp.omegas, gamma=gamma)
