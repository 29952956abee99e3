"""Exact simulation primitives for lossless modal banks and rational systems.

Undamped oscillator modes drift under generic explicit steppers, so the
integrators here are closed-form: per-mode rotation with an exact
particular solution for piecewise-linear inputs, and pole-residue
expansions (exact sums of exponentials) for rational inputs like the
zero-search probe.
"""

from __future__ import annotations

import numpy as np

from .errors import PoleEvaluation

_COLLISION_RTOL = 1e-12


def modal_lsim(omegas, b_entries, c_entries, input_values, dt, initial_state=None):
    """Drive the oscillator bank with a sampled input, exactly per segment.

    The input is treated as linear between samples; each mode (u, v) with
    u' = v, v' = -omega^2 u + b*i(t) is advanced by its closed-form
    response to a linear drive, so the only error is the input
    interpolation itself. Returns (output samples, final state (u, v)).
    """
    om = np.asarray(omegas, dtype=float)
    b = np.asarray(b_entries, dtype=float)
    c = np.asarray(c_entries, dtype=float)
    x = np.asarray(input_values, dtype=float)
    n_t = len(x)
    if initial_state is None:
        u = np.zeros_like(om)
        v = np.zeros_like(om)
    else:
        u, v = (np.array(s, dtype=float) for s in initial_state)
    cos_h = np.cos(om * dt)
    sin_h = np.sin(om * dt)
    om2 = om * om
    y = np.empty(n_t)
    y[0] = float(np.dot(c, v))
    for j in range(n_t - 1):
        f0 = b * x[j]
        f1 = b * x[j + 1]
        alpha = f0
        beta = (f1 - f0) / dt
        up = alpha / om2
        vp = beta / om2
        w0 = u - up
        wv0 = v - vp
        u = w0 * cos_h + (wv0 / om) * sin_h + up + vp * dt
        v = -om * w0 * sin_h + wv0 * cos_h + vp
        y[j + 1] = float(np.dot(c, v))
    return y, (u, v)


def rational_residues(tf):
    """Simple-pole residues of a rational zeros/poles/gain form.

    Factors are consumed as interleaved ratios to keep partial products
    near unity. Repeated poles are rejected.
    """
    poles = np.asarray(tf.poles, dtype=complex)
    zeros = np.asarray(tf.zeros, dtype=complex)
    res = np.empty(len(poles), dtype=complex)
    for i, p in enumerate(poles):
        others = np.delete(poles, i)
        d = np.abs(others - p)
        if np.any(d <= _COLLISION_RTOL * max(1.0, abs(p))):
            raise ValueError(f"repeated pole {p}; residue expansion needs simple poles")
        zs = sorted(zeros, key=abs, reverse=True)
        ps = sorted(others, key=abs, reverse=True)
        r = complex(tf.gain)
        n = min(len(zs), len(ps))
        for z, q in zip(zs[:n], ps[:n]):
            r *= (p - z) / (p - q)
        for z in zs[n:]:
            r *= p - z
        for q in ps[n:]:
            r /= p - q
        res[i] = r
    return poles, res


def pole_residue_of(sys):
    """(poles, residues) of a strictly proper system.

    Modal banks expand as sum_v (c_v/2) [1/(s - j w_v) + 1/(s + j w_v)].
    """
    from .cavity import StateSpaceModel
    from .tfcore import ModalTransferFunction, RationalTransferFunction

    if isinstance(sys, ModalTransferFunction):
        om, cp = sys.omegas, sys.couplings
    elif isinstance(sys, StateSpaceModel):
        om, cp = sys.omegas, sys.b_entries * sys.c_entries
    elif isinstance(sys, RationalTransferFunction):
        if len(sys.zeros) >= len(sys.poles):
            raise ValueError("pole-residue form needs a strictly proper response")
        return rational_residues(sys)
    else:
        raise TypeError(f"unsupported system type {type(sys).__name__}")
    poles = np.concatenate([1j * om, -1j * om])
    res = np.concatenate([cp / 2.0, cp / 2.0]).astype(complex)
    return poles, res


def eval_pole_residue(poles, residues, s):
    """G(s) = sum_k r_k / (s - p_k), vectorized over s."""
    sv = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.sum(residues / (sv[..., None] - poles), axis=-1)
    return out.reshape(np.shape(s)) if np.ndim(s) else complex(out[0])


def rational_impulse_response(tf, times):
    """g(t) = sum_k r_k exp(p_k t); real for conjugate-symmetric systems."""
    poles, res = rational_residues(tf)
    t = np.asarray(times, dtype=float)
    g = np.zeros_like(t, dtype=complex)
    for p, r in zip(poles, res):
        g += r * np.exp(p * t)
    return g.real


def probe_pole_terms(beta, omega):
    """Laplace poles and residues of the unscaled probe (exp(bt)-1)cos(wt).

    For omega > 0 the poles are beta +- j*omega (residue 1/2 each) and
    +-j*omega (residue -1/2 each); for omega = 0 they collapse to beta
    (residue 1) and 0 (residue -1).
    """
    if omega == 0.0:
        return np.array([beta, 0.0], dtype=complex), np.array([1.0, -1.0], dtype=complex)
    poles = np.array(
        [beta + 1j * omega, beta - 1j * omega, 1j * omega, -1j * omega], dtype=complex
    )
    res = np.array([0.5, 0.5, -0.5, -0.5], dtype=complex)
    return poles, res


def probe_response_exact(sys_poles, sys_res, beta, omega, scale_constant, times):
    """Exact response of a pole-residue system to the scaled probe.

    Y(s) = G(s) X(s) with X the scaled probe transform; all poles simple,
    so y(t) is a finite sum of exponentials. System and probe poles must
    not collide (an on-resonance probe has no steady Laplace expansion);
    a probe pole on a system ZERO is fine and is the cancellation the
    zero search exploits. Exponents are combined before exponentiation so
    exp(beta*t)*exp(-scale*beta) never overflows for t <= scale.
    """
    t = np.asarray(times, dtype=float)
    if beta == 0.0:
        return np.zeros_like(t)
    p_probe, r_probe = probe_pole_terms(beta, omega)
    for pp in p_probe:
        d = np.abs(sys_poles - pp)
        if np.any(d <= _COLLISION_RTOL * max(1.0, abs(pp))):
            raise PoleEvaluation(
                f"probe pole {pp} collides with a system pole; "
                "nudge the scan grid off the resonance"
            )
    y = np.zeros_like(t, dtype=complex)
    # system poles: residue r_k * X(p_k)
    for p, r in zip(sys_poles, sys_res):
        xk = np.sum(r_probe / (p - p_probe))
        y += r * xk * np.exp(p * t - scale_constant * beta)
    # probe poles: residue G(p) * r_probe; growing poles carry beta in the
    # exponent, which the scale constant offsets inside the exp argument
    for pp, rp in zip(p_probe, r_probe):
        gk = np.sum(sys_res / (pp - sys_poles))
        y += gk * rp * np.exp(pp * t - scale_constant * beta)
    return y.real
