"""Position-space dynamics: step semantics, observables, revival deficiency."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from electricwalk import (
    Coin,
    FieldSpec,
    WalkState,
    evolve,
    position_moments,
    return_probability,
    revival_deficiency,
    revival_parameters,
    step,
)
from electricwalk.errors import PrecisionExhaustedError, SupportOverflowError

from conftest import random_coin, random_state

HAD = Coin.hadamard()
F5 = FieldSpec.rational(1, 5)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

def test_coin_unitarity_enforced():
    with pytest.raises(ValueError):
        Coin(complex(0.9), complex(0.9))
    c = Coin.hadamard()
    m = c.matrix
    assert np.allclose(m @ m.conj().T, np.eye(2), atol=1e-14)
    assert abs(np.linalg.det(m) - 1.0) < 1e-14


def test_coin_transposed_is_matrix_transpose():
    c = Coin(complex(0.6, 0.2), complex(0.34641016151377546, -0.6928203230275509))
    assert np.allclose(c.transposed.matrix, c.matrix.T, atol=1e-15)
    # involution
    t2 = c.transposed.transposed
    assert abs(t2.a - c.a) < 1e-15 and abs(t2.b - c.b) < 1e-15


def test_field_canonicalization():
    assert FieldSpec.rational(7, 5).nu == FieldSpec.rational(2, 5).nu
    assert FieldSpec.rational(-1, 5).nu.numerator == 4
    f = FieldSpec.rational(4, 8)
    assert (f.n, f.m) == (1, 2)
    with pytest.raises(ValueError):
        FieldSpec.rational(1, 0)


def test_field_parse():
    assert FieldSpec.parse("1/5").nu.denominator == 5
    g = FieldSpec.parse("golden", digits=30)
    assert g.label == "golden"
    assert abs(float(g.nu) - (math.sqrt(5) - 1) / 2) < 1e-15
    r = FieldSpec.parse("0.25")
    assert r.digits == 2 and float(r.nu) == 0.25


def test_field_periodicity_is_bitwise():
    # Phi and Phi + 2 pi canonicalize to the same spec, so evolution is
    # literally the same computation
    f1 = FieldSpec(FieldSpec.rational(2, 5).nu + 1)
    f2 = FieldSpec.rational(2, 5)
    assert f1.nu == f2.nu
    s1 = evolve(WalkState.symmetric(), HAD, f1, 30, keep_final=True)
    s2 = evolve(WalkState.symmetric(), HAD, f2, 30, keep_final=True)
    assert np.array_equal(s1.final_state.amps, s2.final_state.amps)


# ---------------------------------------------------------------------------
# step
# ---------------------------------------------------------------------------

def test_step_on_basis_vector():
    # |0,+1> -> e^{i Phi} (a |1,+1> + b |1,-1>)
    out = step(WalkState.point(0, (1.0, 0.0)), HAD, F5)
    phase = cmath.exp(1j * F5.phi)
    r = 1 / math.sqrt(2)
    assert abs(out.amplitude(1, +1) - phase * r) < 1e-14
    assert abs(out.amplitude(1, -1) - phase * r) < 1e-14
    assert abs(out.amplitude(-1, +1)) == 0.0
    assert abs(out.amplitude(0, +1)) == 0.0


def test_identity_coin_is_pure_shift(rng):
    free = Coin(complex(1.0), complex(0.0))
    st0 = random_state(rng, width=7, x_min=-3)
    out = step(st0, free, FieldSpec.rational(0, 1))
    for x in range(-5, 6):
        assert abs(out.amplitude(x, +1) - st0.amplitude(x - 1, +1)) < 1e-15
        assert abs(out.amplitude(x, -1) - st0.amplitude(x + 1, -1)) < 1e-15


def test_support_grows_one_per_side(rng):
    st = random_state(rng)
    out = step(st, HAD, F5)
    assert out.x_min == st.x_min - 1
    assert out.x_max == st.x_max + 1


def test_sublattice_parity_exact():
    st = WalkState.symmetric(0)
    for t in range(1, 8):
        st = step(st, HAD, F5)
        for x in range(st.x_min, st.x_max + 1):
            if (x - t) % 2:
                assert st.amplitude(x, +1) == 0
                assert st.amplitude(x, -1) == 0


@given(st.integers(0, 10 ** 6), st.integers(1, 50), st.data())
def test_unitarity_random(n, m, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 32 - 1)))
    coin = random_coin(rng)
    field = FieldSpec.rational(n, m)
    state = random_state(rng, width=4, x_min=-2)
    out = step(state, coin, field)
    assert abs(out.norm() - 1.0) < 1e-12


def test_norm_drift_bounded_many_steps():
    st = WalkState.symmetric()
    for _ in range(500):
        st = step(st, HAD, F5)
    assert abs(st.norm() - 1.0) < 1e-12


def test_support_overflow_signals():
    st = WalkState.symmetric()
    with pytest.raises(SupportOverflowError):
        step(st, HAD, F5, max_support=2)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def test_evolve_t0():
    series = evolve(WalkState.symmetric(), HAD, F5, 0)
    assert len(series.sigma) == 1
    assert series.sigma[0] == 0.0
    assert abs(series.p_return[0] - 1.0) < 1e-14


def test_evolve_negative_steps_rejected():
    with pytest.raises(ValueError):
        evolve(WalkState.symmetric(), HAD, F5, -1)


def test_point_state_moments():
    assert position_moments(WalkState.point(0, (1.0, 0.0)))[1] == 0.0
    one = step(WalkState.point(0, (0.3 + 0.1j, 0.8)), HAD, F5)
    assert abs(position_moments(one)[1] - 1.0) < 1e-12


def test_return_probability_parity():
    series = evolve(WalkState.symmetric(), HAD, F5, 9)
    assert all(p == 0.0 for p in series.p_return[1::2])
    assert abs(series.p_return[0] - 1.0) < 1e-14


def test_light_cone_invariant():
    series = evolve(WalkState.symmetric(), HAD, FieldSpec.rational(0, 1), 80)
    for t, s in enumerate(series.sigma):
        assert s <= series.sigma[0] + t + 1e-12
        assert 0.0 <= series.p_return[t] <= 1.0 + 1e-14


def test_weak_revival_at_t10():
    series = evolve(WalkState.symmetric(), HAD, F5, 10)
    assert series.p_return[10] >= 0.64


def test_zero_field_ballistic_constant():
    # sigma(t)/t settles at 0.5412 (golden value, close to sqrt(1 - 1/sqrt 2))
    series = evolve(WalkState.symmetric(), HAD, FieldSpec.rational(0, 1), 200)
    assert abs(series.sigma[200] / 200 - 0.5412) < 3e-3
    assert abs(series.sigma[100] / 100 - series.sigma[200] / 200) < 5e-3


def _dense_walk_matrix(coin, field, lo, hi):
    """Dense truncated walk built straight from the basis-ket definitions."""
    n = hi - lo + 1
    U = np.zeros((2 * n, 2 * n), dtype=complex)
    cmat = coin.matrix
    for i in range(n):
        x = lo + i
        for ai, alpha in ((0, 1), (1, -1)):
            xt = x + alpha
            if not lo <= xt <= hi:
                continue
            ph = np.exp(1j * field.phi * xt)
            for bi in range(2):
                U[2 * (xt - lo) + bi, 2 * i + ai] += ph * cmat[ai, bi]
    return U


def test_moments_against_dense_oracle():
    field = FieldSpec.rational(0, 1)
    t = 100
    lo, hi = -t - 2, t + 2
    U = _dense_walk_matrix(HAD, field, lo, hi)
    v = np.zeros(2 * (hi - lo + 1), dtype=complex)
    v[2 * (-lo)] = 1 / math.sqrt(2)
    v[2 * (-lo) + 1] = 1j / math.sqrt(2)
    for _ in range(t):
        v = U @ v
    xs = np.arange(lo, hi + 1)
    P = np.abs(v[0::2]) ** 2 + np.abs(v[1::2]) ** 2
    sigma_dense = math.sqrt(float((xs.astype(float) ** 2) @ P))
    series = evolve(WalkState.symmetric(), HAD, field, t)
    assert abs(series.sigma[t] - sigma_dense) < 1e-9


def test_deviation_bound_empirical(rng):
    # || W_Phi^t psi - W_Phi'^t psi || <= (t/2)(t + 2L - 1) |dPhi|
    for _ in range(12):
        coin = random_coin(rng)
        f1 = FieldSpec.rational(int(rng.integers(0, 400)), 400)
        f2 = FieldSpec.rational(int(rng.integers(0, 401)), 401)
        psi = random_state(rng, width=5, x_min=-2)
        dphi = abs(f1.phi - f2.phi)
        s1 = s2 = psi
        L = psi.support_radius
        for t in range(1, 151):
            s1 = step(s1, coin, f1)
            s2 = step(s2, coin, f2)
            if t % 50 == 0:
                off = s1.x_min - s2.x_min
                assert off == 0
                diff = float(np.linalg.norm(s1.amps - s2.amps))
                bound = t * (t + 2 * L - 1) / 2 * dphi
                assert diff <= bound + 1e-10


# ---------------------------------------------------------------------------
# revival deficiency
# ---------------------------------------------------------------------------

def test_revival_parameters():
    assert revival_parameters(HAD, 5) == (10, 1, pytest.approx(2 * 2 ** -2.5))
    assert revival_parameters(HAD, 16) == (16, 1, pytest.approx(0.125))
    assert revival_parameters(HAD, 2) == (2, -1, pytest.approx(math.sqrt(2)))


def test_deficiency_m5_bounded(rng):
    bound = revival_parameters(HAD, 5)[2]
    for _ in range(25):
        psi = random_state(rng, width=int(rng.integers(1, 8)), x_min=-3)
        d = revival_deficiency(HAD, F5, psi)
        assert d <= bound + 1e-12


def test_deficiency_m16_near_saturation():
    # plane-wave-like packet at the band edge k = pi/16 comes close to 2|a|^8
    field = FieldSpec.rational(5, 16)
    bound = revival_parameters(HAD, 16)[2]
    xs = np.arange(-240, 241)
    envelope = np.exp(-xs ** 2 / (2 * 80.0 ** 2)) * np.exp(1j * (np.pi / 16) * xs)
    amps = np.stack([envelope, 1j * envelope], axis=1)
    amps /= np.linalg.norm(amps)
    psi = WalkState(-240, amps.astype(np.complex128))
    d = revival_deficiency(HAD, field, psi)
    assert d <= bound + 1e-12
    assert d >= 0.9 * bound


def test_deficiency_requires_digits_when_tiny():
    with pytest.raises(ValueError):
        revival_deficiency(HAD, FieldSpec.rational(51, 256), WalkState.symmetric())


def test_deficiency_precision_exhausted():
    field = FieldSpec.rational(51, 256)
    st = WalkState.symmetric()
    with pytest.raises(PrecisionExhaustedError):
        revival_deficiency(HAD, field, st, digits=12)


def test_high_precision_matches_machine_for_moderate_m(rng):
    psi = random_state(rng, width=3, x_min=-1)
    d_machine = revival_deficiency(HAD, F5, psi)
    d_hp = revival_deficiency(HAD, F5, psi, digits=40)
    assert abs(float(d_hp) - d_machine) < 1e-12
