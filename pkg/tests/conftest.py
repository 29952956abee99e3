import numpy as np
import pytest

from kkphase.cavity import (
    CavityGeometry,
    DipoleSource,
    build_state_space,
    cavity_transfer_function,
    select_modes,
)

# Reference configurations exercised throughout the suite: one small box
# with two observer placements (32 modes, and a 30-mode reduced variant),
# plus a large hall with 100 modes.

PAPER_BOX = dict(a=0.8, b=0.9, d=1.0)
KAPPA_CAVITY = 0.5e6  # rad/s, i.e. 0.5/(2 pi) MHz expressed in rad/s


def make_cavity(a, b, d, r_s, r_o, cutoff_hz, n_te=None, n_tm=None, length=0.01):
    geom = CavityGeometry(a=a, b=b, d=d)
    modes = select_modes(geom, cutoff_hz=cutoff_hz, n_te_max=n_te, n_tm_max=n_tm)
    ssm = build_state_space(modes, DipoleSource(r_s=r_s, length=length), r_o)
    return geom, modes, ssm, cavity_transfer_function(ssm)


@pytest.fixture(scope="session")
def example1():
    a, b, d = PAPER_BOX["a"], PAPER_BOX["b"], PAPER_BOX["d"]
    return make_cavity(
        a, b, d,
        r_s=(0.0, b / 3, d / 3),
        r_o=(a / 3, b / 3, d / 3),
        cutoff_hz=500e6, n_te=16, n_tm=16,
    )


@pytest.fixture(scope="session")
def example2():
    a, b, d = PAPER_BOX["a"], PAPER_BOX["b"], PAPER_BOX["d"]
    return make_cavity(
        a, b, d,
        r_s=(0.0, b / 3, d / 3),
        r_o=(2 * a / 3, 2 * b / 3, 2 * d / 3),
        cutoff_hz=500e6, n_te=16, n_tm=16,
    )


@pytest.fixture(scope="session")
def cavity30():
    a, b, d = PAPER_BOX["a"], PAPER_BOX["b"], PAPER_BOX["d"]
    return make_cavity(
        a, b, d,
        r_s=(0.0, b / 3, d / 3),
        r_o=(2 * a / 3, 2 * b / 3, 2 * d / 3),
        cutoff_hz=500e6, n_te=15, n_tm=15,
    )


@pytest.fixture(scope="session")
def example3():
    a, b, d = 8.0, 9.0, 3.0
    return make_cavity(
        a, b, d,
        r_s=(0.0, b / 3, d / 3),
        r_o=(2 * a / 3, 2 * b / 3, 2 * d / 3),
        cutoff_hz=130e6, n_te=50, n_tm=50,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
