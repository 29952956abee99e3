import json

import numpy as np
import pytest

from kkphase.errors import IllConditioned, PoleEvaluation
from kkphase.tfcore import (
    ComplexFrequency,
    ModalTransferFunction,
    RationalTransferFunction,
    RhpZeroSet,
    eval_modal,
    eval_rational,
    find_rhp_zeros,
    modal_to_rational,
    sample_on_axis,
    transfer_function_from_json,
)


def tf_eq59():
    # (s - 1)/(s^2 + 1): one real RHP zero, pole pair on the axis
    return RationalTransferFunction(zeros=(1.0,), poles=(1j, -1j), gain=1.0)


def tf_blind(mus, chi=1.0, gain=1.0):
    zeros, poles = [], [-chi + 0j]
    for mu in mus:
        zeros += [mu, np.conj(mu)]
        poles += [-mu, -np.conj(mu)]
    return RationalTransferFunction(zeros=tuple(zeros), poles=tuple(poles), gain=gain)


class TestComplexFrequency:
    def test_s_property(self):
        cf = ComplexFrequency(beta=2.0, omega=-3.0)
        assert cf.s == 2.0 - 3.0j
        assert ComplexFrequency.from_complex(1 + 4j) == ComplexFrequency(1.0, 4.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ComplexFrequency(beta=np.inf, omega=0.0)


class TestEvalRational:
    def test_value_at_own_zero(self):
        assert eval_rational(tf_eq59(), 1.0 + 0j) == 0

    def test_value_at_origin(self):
        assert eval_rational(tf_eq59(), 0.0 + 0j) == pytest.approx(-1.0)

    def test_matches_bruteforce_product(self):
        # independent oracle: naive term-by-term product, no interleaving
        tf = tf_blind([0.65 + 5j], chi=1.0)
        s = 5j
        num = np.prod([s - z for z in tf.zeros])
        den = np.prod([s - p for p in tf.poles])
        expect = tf.gain * num / den
        got = eval_rational(tf, s)
        assert abs(got - expect) <= 1e-12 * abs(expect)

    def test_accepts_complex_frequency_and_arrays(self):
        tf = tf_eq59()
        assert eval_rational(tf, ComplexFrequency(0.0, 0.0)) == pytest.approx(-1.0)
        arr = eval_rational(tf, np.array([0.0 + 0j, 1.0 + 0j]))
        assert arr.shape == (2,)

    def test_pole_guard(self):
        with pytest.raises(PoleEvaluation):
            eval_rational(tf_eq59(), 1j)

    def test_no_overflow_with_many_large_factors(self, example1):
        _, _, _, tf = example1
        rat = modal_to_rational(tf)
        val = eval_rational(rat, 1e6 + 1j * 2.0e9)
        assert np.isfinite(val.real) and np.isfinite(val.imag)


class TestEvalModal:
    def test_zero_at_origin(self, example1):
        _, _, _, tf = example1
        assert eval_modal(tf, 0.0 + 0j) == 0

    def test_single_term_closed_form(self):
        tf = ModalTransferFunction(omegas=np.array([1.0]), couplings=np.array([1.0]))
        for beta in (0.3, 1.0, 7.0):
            assert eval_modal(tf, beta + 0j) == pytest.approx(beta / (beta**2 + 1))

    def test_pole_guard(self):
        tf = ModalTransferFunction(omegas=np.array([2.0]), couplings=np.array([1.0]))
        with pytest.raises(PoleEvaluation):
            eval_modal(tf, 2j)

    def test_cross_evaluation_against_rational(self, example1, rng):
        # conversion oracle: both forms must agree away from the poles
        _, _, _, tf = example1
        rat = modal_to_rational(tf)
        for _ in range(20):
            s = complex(rng.uniform(1e6, 1e9), rng.uniform(-5e9, 5e9))
            a = eval_modal(tf, s)
            b = eval_rational(rat, s)
            assert abs(a - b) <= 1e-9 * abs(a)


class TestModalToRational:
    def test_single_term(self):
        tf = ModalTransferFunction(omegas=np.array([1.0]), couplings=np.array([1.0]))
        rat = modal_to_rational(tf)
        assert rat.zeros == (0.0,)
        assert set(rat.poles) == {1j, -1j}
        assert rat.gain == 1.0

    def test_zero_and_pole_counts(self, example2):
        _, _, _, tf = example2
        n = len(tf.omegas)
        rat = modal_to_rational(tf)
        assert len(rat.poles) == 2 * n
        assert len(rat.zeros) == 2 * n - 1
        origin = [z for z in rat.zeros if z == 0]
        assert len(origin) == 1
        assert np.all(np.real([p for p in rat.poles]) == 0)

    def test_mirror_structure(self):
        # every RHP zero has a partner at -conj(z)
        tf_modal = ModalTransferFunction(
            omegas=np.array([1.0, 2.2, 3.7]), couplings=np.array([1.0, -0.5, 0.25])
        )
        rat = modal_to_rational(tf_modal)
        zs = np.array(rat.zeros)
        for z in zs[np.real(zs) > 0]:
            partner = min(abs(zs + np.conj(z)))
            assert partner <= 1e-6 * max(1.0, abs(z))

    def test_gain_is_coupling_sum(self, example1):
        _, _, _, tf = example1
        assert modal_to_rational(tf).gain == pytest.approx(float(np.sum(tf.couplings)))

    def test_term_limit(self):
        n = 41
        tf = ModalTransferFunction(
            omegas=np.linspace(1.0, 5.0, n), couplings=np.ones(n)
        )
        with pytest.raises(IllConditioned):
            modal_to_rational(tf)


class TestFindRhpZeros:
    def test_eq59_single_real_zero(self):
        zs = find_rhp_zeros(tf_eq59())
        assert zs.pairs == ()
        assert zs.real_zeros == (1.0,)

    def test_blind_family_two_pairs(self):
        zs = find_rhp_zeros(tf_blind([0.65 + 5j, 1.3 + 10j]))
        assert zs.real_zeros == ()
        assert sorted(zs.pairs, key=lambda z: z.imag) == [0.65 + 5j, 1.3 + 10j]

    def test_minimum_phase_empty(self):
        tf = RationalTransferFunction(zeros=(), poles=(-1.0,), gain=1.0)
        zs = find_rhp_zeros(tf)
        assert zs.is_empty
        assert len(zs) == 0

    def test_accepts_modal_form(self, example1):
        _, _, _, tf = example1
        zs = find_rhp_zeros(tf)
        assert len(zs.pairs) == 1

    def test_all_zeros_expands_conjugates(self):
        zs = RhpZeroSet(pairs=(1 + 2j,), real_zeros=(3.0,))
        assert sorted(zs.all_zeros(), key=lambda z: (z.real, z.imag)) == [
            1 - 2j,
            1 + 2j,
            3 + 0j,
        ]


class TestSampleOnAxis:
    def test_eq59_at_origin(self):
        resp = sample_on_axis(tf_eq59(), 0.0, np.array([0.0, 0.5]))
        assert resp.values[0] == pytest.approx(-1.0)

    def test_kappa_clears_resonances(self, example1):
        _, _, _, tf = example1
        grid = np.sort(np.concatenate([np.linspace(0, 2 * np.pi * 500e6, 2001), tf.omegas]))
        resp = sample_on_axis(tf, 0.5e6, grid)
        assert np.all(np.isfinite(resp.values))

    def test_hermitian_symmetry(self):
        tf = tf_blind([0.4 + 2j])
        om = np.linspace(0.1, 20.0, 40)
        plus = sample_on_axis(tf, 0.0, om)
        minus = sample_on_axis(tf, 0.0, -om[::-1])
        assert np.allclose(minus.values[::-1], np.conj(plus.values), rtol=1e-12)

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            sample_on_axis(tf_eq59(), -1.0, np.array([0.0, 1.0]))


class TestInvariantsAndValidation:
    def test_conjugate_closure_enforced(self):
        with pytest.raises(ValueError):
            RationalTransferFunction(zeros=(1 + 2j,), poles=(-1.0,), gain=1.0)

    def test_pole_zero_collision_rejected(self):
        with pytest.raises(ValueError):
            RationalTransferFunction(zeros=(-2.0,), poles=(-2.0,), gain=1.0)

    def test_modal_requires_distinct_resonances(self):
        with pytest.raises(ValueError):
            ModalTransferFunction(
                omegas=np.array([1.0, 1.0]), couplings=np.array([1.0, 2.0])
            )

    def test_modal_requires_positive_resonances(self):
        with pytest.raises(ValueError):
            ModalTransferFunction(
                omegas=np.array([-1.0]), couplings=np.array([1.0])
            )

    def test_rhp_zero_set_validation(self):
        with pytest.raises(ValueError):
            RhpZeroSet(pairs=(-1 + 2j,), real_zeros=())
        with pytest.raises(ValueError):
            RhpZeroSet(pairs=(), real_zeros=(-0.5,))


class TestSerialization:
    def test_rational_round_trip(self):
        tf = tf_blind([0.65 + 5j], chi=2.0, gain=3.5)
        back = RationalTransferFunction.from_json(tf.to_json())
        assert back == tf

    def test_modal_round_trip(self, example1):
        _, _, _, tf = example1
        back = ModalTransferFunction.from_json(tf.to_json())
        assert np.array_equal(back.omegas, tf.omegas)
        assert np.array_equal(back.couplings, tf.couplings)

    def test_kind_dispatch(self):
        tf = tf_eq59()
        assert isinstance(transfer_function_from_json(tf.to_json()), RationalTransferFunction)
        with pytest.raises(ValueError):
            transfer_function_from_json(json.dumps({"kind": "nope"}))

    def test_zero_set_round_trip(self):
        zs = RhpZeroSet(pairs=(0.65 + 5j,), real_zeros=(1.0,))
        back = RhpZeroSet.from_json(zs.to_json())
        assert back == zs
