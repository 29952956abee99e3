"""Transfer functions in the complex s-plane.

Two representations are supported: a zeros/poles/gain rational form and a
modal sum of lossless resonances

    G(s) = sum_v  c_v * s / (s^2 + omega_v^2),

together with conversion between them and an analytic right-half-plane
zero finder that serves as the ground-truth oracle for the time-domain
zero search.

All frequencies are in rad/s internally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned, PoleEvaluation

#: |z - conj(w)| <= PAIR_RTOL * max(1, |z|) groups z, w as a conjugate pair.
PAIR_RTOL = 1e-6

#: |Im z| <= REAL_RTOL * max(1, |z|) classifies a root as real.
REAL_RTOL = 1e-9

#: Default relative guard distance for evaluation near poles.
POLE_EPS = 1e-12

#: Term-count limit for the monomial-basis numerator construction. The
#: common-denominator polynomial is built by incremental convolution in
#: scaled coordinates; beyond roughly this many resonances the coefficient
#: spread eats the double-precision budget.
MAX_MODAL_TERMS = 40

_ILL_SPREAD = 1e14


@dataclass(frozen=True)
class ComplexFrequency:
    """Point s = beta + j*omega in the complex frequency plane [rad/s]."""

    beta: float
    omega: float

    def __post_init__(self):
        if not (np.isfinite(self.beta) and np.isfinite(self.omega)):
            raise ValueError("non-finite complex frequency")

    @property
    def s(self) -> complex:
        return complex(self.beta, self.omega)

    @classmethod
    def from_complex(cls, s: complex) -> "ComplexFrequency":
        s = complex(s)
        return cls(s.real, s.imag)


def _as_complex(s):
    if isinstance(s, ComplexFrequency):
        return s.s
    return np.asarray(s, dtype=complex) if np.ndim(s) else complex(s)


def _check_conjugate_closure(values, what):
    vals = np.asarray(values, dtype=complex)
    unmatched = [v for v in vals if abs(v.imag) > REAL_RTOL * max(1.0, abs(v))]
    used = [False] * len(unmatched)
    for i, v in enumerate(unmatched):
        if used[i]:
            continue
        best, best_d = None, np.inf
        for j in range(i + 1, len(unmatched)):
            if used[j]:
                continue
            d = abs(v - np.conj(unmatched[j]))
            if d < best_d:
                best, best_d = j, d
        if best is None or best_d > PAIR_RTOL * max(1.0, abs(v)):
            raise ValueError(f"non-real {what} {v} has no conjugate partner")
        used[i] = used[best] = True


@dataclass(frozen=True)
class RationalTransferFunction:
    """G(s) = gain * prod(s - z_i) / prod(s - p_i)."""

    zeros: tuple
    poles: tuple
    gain: float

    def __post_init__(self):
        zeros = tuple(complex(z) for z in self.zeros)
        poles = tuple(complex(p) for p in self.poles)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "gain", float(self.gain))
        _check_conjugate_closure(zeros, "zero")
        _check_conjugate_closure(poles, "pole")
        for z in zeros:
            for p in poles:
                if abs(z - p) <= POLE_EPS * max(1.0, abs(z), abs(p)):
                    raise ValueError(f"zero {z} coincides with pole {p}")

    def to_json(self) -> str:
        doc = {
            "kind": "rational",
            "zeros": [[z.real, z.imag] for z in self.zeros],
            "poles": [[p.real, p.imag] for p in self.poles],
            "gain": self.gain,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "RationalTransferFunction":
        doc = json.loads(text)
        if doc.get("kind") != "rational":
            raise ValueError(f"expected kind 'rational', got {doc.get('kind')!r}")
        return cls(
            zeros=tuple(complex(re, im) for re, im in doc["zeros"]),
            poles=tuple(complex(re, im) for re, im in doc["poles"]),
            gain=doc["gain"],
        )


@dataclass(frozen=True)
class ModalTransferFunction:
    """Sum of lossless resonance terms c_v * s / (s^2 + omega_v^2)."""

    omegas: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        cp = np.asarray(self.couplings, dtype=float)
        if om.ndim != 1 or om.size < 1 or cp.shape != om.shape:
            raise ValueError("omegas and couplings must be matching 1-D arrays")
        if np.any(om <= 0):
            raise ValueError("resonance frequencies must be positive")
        order = np.argsort(om)
        om, cp = om[order], cp[order]
        if np.any(np.diff(om) <= REAL_RTOL * om[:-1]):
            raise ValueError("resonance frequencies must be strictly distinct")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "couplings", cp)
        om.setflags(write=False)
        cp.setflags(write=False)

    @property
    def terms(self):
        return list(zip(self.omegas.tolist(), self.couplings.tolist()))

    def to_json(self) -> str:
        doc = {
            "kind": "modal",
            "terms": [
                {"omega_v": om, "coupling": cp}
                for om, cp in zip(self.omegas, self.couplings)
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ModalTransferFunction":
        doc = json.loads(text)
        if doc.get("kind") != "modal":
            raise ValueError(f"expected kind 'modal', got {doc.get('kind')!r}")
        return cls(
            omegas=np.array([t["omega_v"] for t in doc["terms"]]),
            couplings=np.array([t["coupling"] for t in doc["terms"]]),
        )


def transfer_function_from_json(text: str):
    kind = json.loads(text).get("kind")
    if kind == "rational":
        return RationalTransferFunction.from_json(text)
    if kind == "modal":
        return ModalTransferFunction.from_json(text)
    raise ValueError(f"unknown transfer function kind {kind!r}")


@dataclass(frozen=True)
class SampledResponse:
    """Complex samples of G(kappa + j*omega) on an ascending grid."""

    omegas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if om.ndim != 1 or vals.shape != om.shape:
            raise ValueError("omegas and values must be matching 1-D arrays")
        if np.any(np.diff(om) <= 0):
            raise ValueError("frequency grid must be strictly ascending")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "values", vals)
        om.setflags(write=False)
        vals.setflags(write=False)


@dataclass(frozen=True)
class RhpZeroSet:
    """Right-half-plane zeros, conjugate pairs folded to the upper half.

    ``pairs`` holds one representative x + j*y (x > 0, y > 0) per conjugate
    pair; ``real_zeros`` holds unpaired zeros on the positive real axis.
    """

    pairs: tuple
    real_zeros: tuple

    def __post_init__(self):
        pairs = tuple(complex(z) for z in self.pairs)
        reals = tuple(float(x) for x in self.real_zeros)
        for z in pairs:
            if z.real <= 0 or z.imag <= 0:
                raise ValueError(f"pair representative {z} must have x > 0, y > 0")
        for x in reals:
            if x <= 0:
                raise ValueError("real zeros must be positive")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "real_zeros", reals)

    def __len__(self):
        return 2 * len(self.pairs) + len(self.real_zeros)

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def all_zeros(self):
        """Every RHP zero, conjugates expanded."""
        out = []
        for z in self.pairs:
            out.extend([z, np.conj(z)])
        out.extend(complex(x, 0.0) for x in self.real_zeros)
        return out

    def to_json(self) -> str:
        entries = [[z.real, z.imag] for z in self.pairs]
        entries += [[x, 0.0] for x in self.real_zeros]
        return json.dumps(entries)

    @classmethod
    def from_json(cls, text: str) -> "RhpZeroSet":
        entries = json.loads(text)
        pairs = [complex(x, y) for x, y in entries if y != 0.0]
        reals = [x for x, y in entries if y == 0.0]
        return cls(pairs=tuple(pairs), real_zeros=tuple(reals))


def eval_rational(tf: RationalTransferFunction, s, pole_eps: float = POLE_EPS):
    """Evaluate the rational form at s (scalar or array).

    Zero and pole factors are consumed as interleaved ratios, largest
    magnitudes first, so partial products stay near unity even when the
    factor count runs into the dozens at rad/s scales.
    """
    sv = _as_complex(s)
    zs = sorted(tf.zeros, key=abs, reverse=True)
    ps = sorted(tf.poles, key=abs, reverse=True)
    for p in ps:
        d = np.abs(sv - p)
        if np.any(d < pole_eps * max(1.0, abs(p))):
            raise PoleEvaluation(f"evaluation within {pole_eps:g} of pole {p}")
    out = np.full(np.shape(sv), tf.gain, dtype=complex)
    n = min(len(zs), len(ps))
    for z, p in zip(zs[:n], ps[:n]):
        out *= (sv - z) / (sv - p)
    for z in zs[n:]:
        out *= sv - z
    for p in ps[n:]:
        out /= sv - p
    return out if np.ndim(s) else complex(out)


def eval_modal(tf: ModalTransferFunction, s, pole_eps: float = POLE_EPS):
    """Evaluate the modal sum at s (scalar or array)."""
    sv = _as_complex(s)
    om = tf.omegas
    for w in (1j * om, -1j * om):
        d = np.abs(np.subtract.outer(np.atleast_1d(sv), w))
        if np.any(d < pole_eps * np.maximum(1.0, om)):
            raise PoleEvaluation("evaluation too close to a resonance pole")
    sv_col = np.atleast_1d(sv)[..., None]
    vals = np.sum(tf.couplings * sv_col / (sv_col * sv_col + om * om), axis=-1)
    return vals.reshape(np.shape(sv)) if np.ndim(s) else complex(vals[0])


def _numerator_roots_in_q(couplings, w2):
    """Roots of M(q) = sum_v c_v prod_{u != v} (q + w2_u) in scaled units.

    Equivalently the roots of the secular function R(q) = sum c_v/(q + w2_v),
    which are the finite generalized eigenvalues of the arrowhead pencil

        [[diag(-w2), c], [1^T, 0]]  -  q * diag(1, ..., 1, 0).

    The pencil keeps every entry O(1), so QZ locates even zeros that sit
    within 1e-6 of a pole (nearly cancelling modes) to full precision,
    where monomial coefficients would lose all digits.
    """
    from scipy.linalg import eig as geig

    n = len(w2)
    a = np.zeros((n + 1, n + 1))
    a[:n, :n] = np.diag(-w2)
    a[:n, n] = couplings
    a[n, :n] = 1.0
    b = np.eye(n + 1)
    b[n, n] = 0.0
    (alpha, beta), _ = geig(a, b, left=False, right=True, homogeneous_eigvals=True)
    order = np.argsort(np.abs(beta))[::-1]  # one eigenvalue is at infinity
    keep = order[: n - 1]
    return alpha[keep] / beta[keep]


def _polish_root(q, couplings, w2, max_iter=100, rtol=1e-15):
    """Newton refinement of a numerator root in the secular form.

    M(q) = P(q) * R(q) with P = prod(q + w2_u) and R = sum c_v/(q + w2_v),
    so away from the q-poles the roots of M are the roots of R. Newton on
    R stays well conditioned even for zeros hugging a pole (a nearly
    cancelling mode), where the monomial form loses every digit.
    """
    def r_and_m(qq):
        factors = qq + w2
        if np.any(factors == 0):
            return None, None, None
        terms = couplings / factors
        r = np.sum(terms)
        rp = -np.sum(terms / factors)
        m = r * np.prod(factors)
        return r, rp, m

    q = complex(q)
    r, rp, m = r_and_m(q)
    if r is None:
        return q
    for _ in range(max_iter):
        if rp == 0:
            break
        step = r / rp
        # acceptance on |M| = |P*R|: R alone also vanishes at infinity, so
        # a monotone-|R| line search can escape toward that false
        # attractor, while |M| grows there and blocks it
        accepted = False
        for _ in range(30):
            q_new = q - step
            r_new, rp_new, m_new = r_and_m(q_new)
            if m_new is not None and abs(m_new) < abs(m):
                accepted = True
                break
            step = step / 2
        if not accepted:
            break
        converged = abs(q_new - q) <= rtol * max(abs(q_new), 1e-300)
        q, r, rp, m = q_new, r_new, rp_new, m_new
        if converged:
            break
    return q


def modal_to_rational(tf: ModalTransferFunction) -> RationalTransferFunction:
    """Combine the modal sum over a common denominator and root the numerator.

    The result has 2N poles at +-j*omega_v, a zero at s = 0, and 2N-2
    further zeros from the roots of the even numerator polynomial, seeded
    by eigenvalues of the secular pencil in the squared variable and
    polished by damped Newton iteration on the secular form.

    Raises IllConditioned beyond MAX_MODAL_TERMS resonances or when the
    scaled coefficient spread indicates double precision is exhausted.
    """
    n = len(tf.omegas)
    if n > MAX_MODAL_TERMS:
        raise IllConditioned(
            f"{n} resonances exceed the monomial-basis limit of {MAX_MODAL_TERMS}"
        )
    gain = float(np.sum(tf.couplings))
    if gain == 0.0:
        raise IllConditioned("couplings sum to zero; leading coefficient vanishes")
    poles = []
    for om in tf.omegas:
        poles.extend([1j * om, -1j * om])
    if n == 1:
        return RationalTransferFunction(zeros=(0.0,), poles=tuple(poles), gain=gain)

    if np.any(tf.couplings == 0.0):
        raise ValueError("zero-coupling terms must be dropped before conversion")
    scale = float(np.max(tf.omegas))
    w2 = (tf.omegas / scale) ** 2
    spread = np.abs(tf.couplings).max() / np.abs(tf.couplings).min()
    if spread > _ILL_SPREAD:
        raise IllConditioned(
            f"coupling spread {spread:.2e} exceeds the double-precision budget"
        )
    q_roots = _numerator_roots_in_q(tf.couplings, w2)
    zeros = [0.0 + 0.0j]
    for q in q_roots:
        q = _polish_root(q, tf.couplings, w2)
        if abs(q.imag) <= 1e-7 * abs(q):
            q = q.real
            root = np.sqrt(abs(q)) * scale
            if q >= 0:
                zeros.extend([root, -root])          # real mirrored pair
            else:
                zeros.extend([1j * root, -1j * root])  # imaginary-axis pair
        else:
            s_root = np.sqrt(complex(q)) * scale
            if s_root.real < 0:
                s_root = -s_root
            zeros.extend([s_root, -s_root])
    return RationalTransferFunction(zeros=tuple(zeros), poles=tuple(poles), gain=gain)


def find_rhp_zeros(tf) -> RhpZeroSet:
    """Zeros with positive real part, grouped into conjugate pairs.

    Accepts either representation; the modal form is converted first. An
    empty set means the response is minimum phase.
    """
    if isinstance(tf, ModalTransferFunction):
        tf = modal_to_rational(tf)
    cands = [z for z in tf.zeros if z.real > 0]
    reals = []
    upper = []
    lower = []
    for z in cands:
        if abs(z.imag) <= REAL_RTOL * max(1.0, abs(z)):
            reals.append(z.real)
        elif z.imag > 0:
            upper.append(z)
        else:
            lower.append(z)
    pairs = []
    lower_left = list(lower)
    for u in upper:
        if not lower_left:
            raise ValueError(f"RHP zero {u} has no conjugate partner")
        dists = [abs(u - np.conj(w)) for w in lower_left]
        j = int(np.argmin(dists))
        if dists[j] > PAIR_RTOL * max(1.0, abs(u)):
            raise ValueError(f"RHP zero {u} has no conjugate partner")
        lower_left.pop(j)
        pairs.append(u)
    if lower_left:
        raise ValueError("unpaired lower-half-plane RHP zeros remain")
    pairs.sort(key=lambda z: z.imag)
    reals.sort()
    return RhpZeroSet(pairs=tuple(pairs), real_zeros=tuple(reals))


def sample_on_axis(tf, kappa: float, grid) -> SampledResponse:
    """Evaluate the response along the shifted line s = kappa + j*omega.

    With kappa > 0 the line clears poles and zeros sitting on the
    imaginary axis, so every sample is finite.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    om = np.asarray(grid, dtype=float)
    s = kappa + 1j * om
    if isinstance(tf, ModalTransferFunction):
        vals = eval_modal(tf, s)
    else:
        vals = eval_rational(tf, s)
    return SampledResponse(omegas=om, values=np.asarray(vals, dtype=complex))
