"""Rectangular PEC cavity eigenmodes and the dipole-to-field transfer function.

The cavity occupies [0,a] x [0,b] x [0,d] with perfectly conducting walls.
Mode patterns are the classical TE_mnp / TM_mnp closed forms (transverse
with respect to z) at unit pattern amplitude; the stored energy W_v carries
all normalization, which divides out of the transfer function

    [G(r_o, s)]_x = L * sum_v  E_vx(r_s) E_vx(r_o) / (2 W_v) * s / (s^2 + omega_v^2).

An x-directed point dipole drives the modes; the observed quantity is the
x component of the electric field at r_o.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import epsilon_0, mu_0

from .errors import DegenerateOutput, EmptyModeSet, OutOfDomain
from .tfcore import ModalTransferFunction


@dataclass(frozen=True)
class CavityGeometry:
    """Box edge lengths [m] and fill medium (vacuum by default)."""

    a: float
    b: float
    d: float
    epsilon: float = epsilon_0
    mu: float = mu_0

    def __post_init__(self):
        for name in ("a", "b", "d", "epsilon", "mu"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def wave_speed(self) -> float:
        return 1.0 / np.sqrt(self.epsilon * self.mu)

    def contains(self, r, tol: float = 0.0) -> bool:
        x, y, z = r
        return (
            -tol <= x <= self.a + tol
            and -tol <= y <= self.b + tol
            and -tol <= z <= self.d + tol
        )


@dataclass(frozen=True)
class ModeIndex:
    """TE/TM family tag plus the (m, n, p) half-wave counts."""

    family: str
    m: int
    n: int
    p: int

    def __post_init__(self):
        if self.family not in ("TE", "TM"):
            raise ValueError(f"family must be 'TE' or 'TM', got {self.family!r}")
        if min(self.m, self.n, self.p) < 0:
            raise ValueError("mode indices must be non-negative")
        if self.family == "TM" and (self.m < 1 or self.n < 1):
            raise ValueError("TM modes need m >= 1 and n >= 1")
        if self.family == "TE":
            if self.p < 1:
                raise ValueError("TE modes need p >= 1")
            if self.m == 0 and self.n == 0:
                raise ValueError("TE modes need m, n not both zero")

    def label(self) -> str:
        return f"{self.family}{self.m}{self.n}{self.p}"


@dataclass(frozen=True)
class CavityMode:
    """One resonant mode: index, resonance, stored energy, field pattern."""

    index: ModeIndex
    geometry: CavityGeometry
    omega_v: float = field(init=False)
    energy: float = field(init=False)

    def __post_init__(self):
        g = self.geometry
        kx, ky, kz = self.wavevector
        k = np.sqrt(kx * kx + ky * ky + kz * kz)
        object.__setattr__(self, "omega_v", g.wave_speed * k)
        object.__setattr__(self, "energy", mode_energy_closed_form(self.index, g))

    @property
    def wavevector(self):
        g, ix = self.geometry, self.index
        return (ix.m * np.pi / g.a, ix.n * np.pi / g.b, ix.p * np.pi / g.d)

    @property
    def frequency_hz(self) -> float:
        return self.omega_v / (2 * np.pi)

    def field(self, r):
        """Electric-field pattern at r, unit pattern amplitude [V/m]."""
        if not self.geometry.contains(r, tol=1e-12 * max(self.geometry.a, 1.0)):
            raise OutOfDomain(f"point {r} lies outside the cavity")
        x, y, z = r
        kx, ky, kz = self.wavevector
        ix = self.index
        if ix.family == "TM":
            ez = np.sin(kx * x) * np.sin(ky * y) * np.cos(kz * z)
            if ix.p == 0:
                return np.array([0.0, 0.0, ez])
            g2 = kx * kx + ky * ky
            ex = -(kx * kz / g2) * np.cos(kx * x) * np.sin(ky * y) * np.sin(kz * z)
            ey = -(ky * kz / g2) * np.sin(kx * x) * np.cos(ky * y) * np.sin(kz * z)
            return np.array([ex, ey, ez])
        ex = ky * np.cos(kx * x) * np.sin(ky * y) * np.sin(kz * z)
        ey = -kx * np.sin(kx * x) * np.cos(ky * y) * np.sin(kz * z)
        return np.array([ex, ey, 0.0])


def mode_field(mode: CavityMode, r):
    """Mode pattern evaluation; raises OutOfDomain outside the box."""
    return mode.field(r)


def mode_energy_closed_form(index: ModeIndex, geom: CavityGeometry) -> float:
    """W_v = (eps/2) * integral of |E_v|^2 over the box, analytic.

    Axis integrals of sin^2/cos^2 over a full span L are L/2 for a nonzero
    index and 0 / L for sin / cos at index zero.
    """
    a, b, d = geom.a, geom.b, geom.d
    kx, ky, kz = index.m * np.pi / a, index.n * np.pi / b, index.p * np.pi / d

    def s2(L, q):
        return 0.0 if q == 0 else L / 2

    def c2(L, q):
        return L if q == 0 else L / 2

    m, n, p = index.m, index.n, index.p
    if index.family == "TM":
        if p == 0:
            total = s2(a, m) * s2(b, n) * d
        else:
            g2 = kx * kx + ky * ky
            total = (
                (kx * kz / g2) ** 2 * c2(a, m) * s2(b, n) * s2(d, p)
                + (ky * kz / g2) ** 2 * s2(a, m) * c2(b, n) * s2(d, p)
                + s2(a, m) * s2(b, n) * c2(d, p)
            )
    else:
        total = ky**2 * c2(a, m) * s2(b, n) * s2(d, p) + kx**2 * s2(a, m) * c2(
            b, n
        ) * s2(d, p)
    return geom.epsilon / 2 * total


def mode_energy(mode: CavityMode, geom: CavityGeometry) -> float:
    return mode_energy_closed_form(mode.index, geom)


def enumerate_modes(geom: CavityGeometry, cutoff_hz: float):
    """All admissible TE and TM modes with resonance at or below cutoff_hz.

    Sorted ascending by resonance; ties broken TM before TE, then by
    (m, n, p). Raises EmptyModeSet when nothing resonates below cutoff.
    """
    kmax = 2 * np.pi * cutoff_hz / geom.wave_speed
    mmax = int(np.floor(kmax * geom.a / np.pi))
    nmax = int(np.floor(kmax * geom.b / np.pi))
    pmax = int(np.floor(kmax * geom.d / np.pi))
    modes = []
    for fam in ("TM", "TE"):
        for m in range(0, mmax + 1):
            for n in range(0, nmax + 1):
                for p in range(0, pmax + 1):
                    try:
                        ix = ModeIndex(fam, m, n, p)
                    except ValueError:
                        continue
                    mode = CavityMode(index=ix, geometry=geom)
                    if mode.frequency_hz <= cutoff_hz:
                        modes.append(mode)
    if not modes:
        raise EmptyModeSet(f"no mode resonates at or below {cutoff_hz:g} Hz")
    modes.sort(
        key=lambda mo: (
            mo.omega_v,
            mo.index.family != "TM",
            (mo.index.m, mo.index.n, mo.index.p),
        )
    )
    return modes


def select_modes(
    geom: CavityGeometry,
    cutoff_hz: float,
    n_te_max: int | None = None,
    n_tm_max: int | None = None,
):
    """Mode selection with optional per-family caps, lowest resonance first.

    Caps may exceed the population below cutoff_hz; enumeration then widens
    until each capped family is filled.
    """
    modes = enumerate_modes(geom, cutoff_hz)
    if n_te_max is None and n_tm_max is None:
        return modes

    def family(ms, fam):
        return [m for m in ms if m.index.family == fam]

    cutoff = cutoff_hz
    for _ in range(32):
        te, tm = family(modes, "TE"), family(modes, "TM")
        te_ok = n_te_max is None or len(te) >= n_te_max
        tm_ok = n_tm_max is None or len(tm) >= n_tm_max
        if te_ok and tm_ok:
            break
        cutoff *= 1.5
        modes = enumerate_modes(geom, cutoff)
    else:
        raise EmptyModeSet("could not fill the requested per-family mode caps")
    te, tm = family(modes, "TE"), family(modes, "TM")
    if n_te_max is not None:
        te = te[:n_te_max]
    if n_tm_max is not None:
        tm = tm[:n_tm_max]
    out = te + tm
    out.sort(
        key=lambda mo: (
            mo.omega_v,
            mo.index.family != "TM",
            (mo.index.m, mo.index.n, mo.index.p),
        )
    )
    return out


@dataclass(frozen=True)
class DipoleSource:
    """x-directed point dipole: position [m] and effective length [m]."""

    r_s: tuple
    length: float

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("dipole length must be positive")
        object.__setattr__(self, "r_s", tuple(float(c) for c in self.r_s))


@dataclass(frozen=True)
class StateSpaceModel:
    """Per-mode oscillator blocks with input and output coefficient vectors.

    State per mode is (integrated coefficient, coefficient); the implied
    block-diagonal state matrix has eigenvalues +-j omega_v. Input entries
    are L * E_vx(r_s) / (2 W_v); output entries are E_vx(r_o).
    """

    omegas: np.ndarray
    b_entries: np.ndarray
    c_entries: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        bv = np.asarray(self.b_entries, dtype=float)
        cv = np.asarray(self.c_entries, dtype=float)
        if not (om.shape == bv.shape == cv.shape) or om.ndim != 1:
            raise ValueError("omegas, b_entries, c_entries must be matching 1-D arrays")
        if np.any(om <= 0):
            raise ValueError("resonances must be positive")
        for arr, name in ((om, "omegas"), (bv, "b_entries"), (cv, "c_entries")):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)

    @property
    def n_states(self) -> int:
        return 2 * len(self.omegas)

    def a_matrix(self) -> np.ndarray:
        """Dense 2N x 2N state matrix, for verification only."""
        n = len(self.omegas)
        a = np.zeros((2 * n, 2 * n))
        for v, om in enumerate(self.omegas):
            a[2 * v, 2 * v + 1] = 1.0
            a[2 * v + 1, 2 * v] = -om * om
        return a


def build_state_space(modes, source: DipoleSource, r_o) -> StateSpaceModel:
    """Assemble the oscillator bank for a source/observer placement.

    Both points must lie inside the closed box; wall placement is legal
    for an x-directed dipole on a wall normal to x.
    """
    if not modes:
        raise ValueError("empty mode list")
    geom = modes[0].geometry
    r_o = tuple(float(c) for c in r_o)
    for name, r in (("source", source.r_s), ("observer", r_o)):
        if not geom.contains(r):
            raise OutOfDomain(f"{name} position {r} lies outside the cavity")
    omegas = np.array([m.omega_v for m in modes])
    b = np.array(
        [source.length * m.field(source.r_s)[0] / (2 * m.energy) for m in modes]
    )
    c = np.array([m.field(r_o)[0] for m in modes])
    return StateSpaceModel(omegas=omegas, b_entries=b, c_entries=c)


def cavity_transfer_function(
    ssm: StateSpaceModel, merge_rtol: float = 1e-9, coupling_rtol: float = 1e-14
) -> ModalTransferFunction:
    """Collapse the state-space model to the modal transfer function.

    Couplings are b_v * c_v; terms at equal resonance merge (degenerate
    modes sum) and zero-coupling terms drop. A pattern node evaluates to
    roundoff instead of zero (sin(pi) is 1.2e-16), so anything below
    coupling_rtol of the largest coupling counts as zero. Raises
    DegenerateOutput when every coupling vanishes.
    """
    coup = ssm.b_entries * ssm.c_entries
    order = np.argsort(ssm.omegas)
    merged_om, merged_cp = [], []
    for idx in order:
        om, cp = ssm.omegas[idx], coup[idx]
        if merged_om and abs(om - merged_om[-1]) <= merge_rtol * merged_om[-1]:
            merged_cp[-1] += cp
        else:
            merged_om.append(om)
            merged_cp.append(cp)
    om = np.array(merged_om)
    cp = np.array(merged_cp)
    keep = np.abs(cp) > coupling_rtol * np.max(np.abs(cp), initial=0.0)
    if not np.any(keep):
        raise DegenerateOutput("all mode couplings vanish for this placement")
    return ModalTransferFunction(omegas=om[keep], couplings=cp[keep])
