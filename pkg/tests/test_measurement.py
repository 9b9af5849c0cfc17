import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import matrix_apply
from qcontrol_dp.measurement import (
    MeasurementOperator,
    MeasurementSet,
    amplitude_damping,
    apply,
    bit_flip,
    channel,
    check_completeness,
    generalized_amplitude_damping,
    mobius_coeffs,
    operator,
    outcome_distribution,
    phase_damping,
    upward_decay,
)

F1, F2, J1, J2 = (lambda a, b, k=k: MeasurementOperator(k, a, b) for k in ("f1", "f2", "j1", "j2"))
RUNNING = MeasurementSet((F1(0.8, 1.0), J2(0.0, 0.2)))


def random_operator(rng):
    kind = rng.choice(["f1", "f2", "j1", "j2"])
    a, b = rng.uniform(0.01, 1.0, size=2)
    return MeasurementOperator(str(kind), float(a), float(b))


@pytest.mark.parametrize(
    "kind, a, b",
    [("f1", 0.0, 0.5), ("f2", 0.5, 0.0), ("j1", 0.0, 0.0), ("f1", 1.2, 0.5), ("j2", -0.1, 0.5), ("x1", 0.5, 0.5)],
)
def test_invalid_operators_rejected(kind, a, b):
    with pytest.raises(ValueError):
        MeasurementOperator(kind, a, b)


def test_apply_examples():
    for s in (0.0, 0.3, 1.0):
        assert apply(F1(1, 1), s) == pytest.approx((s, 1.0), abs=1e-15)
    s_new, p = apply(F1(0.8, 1.0), 0.5)
    assert s_new == pytest.approx(0.5 / 0.9, abs=1e-15)
    assert p == pytest.approx(0.9, abs=1e-15)
    assert matrix_apply("f1", 0.8, 1.0, 0.5) == pytest.approx((0.5 / 0.9, 0.9), abs=1e-12)
    for s in (0.0, 0.4, 0.9):
        s_new, p = apply(J2(0.0, 0.2), s)
        assert (s_new, p) == pytest.approx((1.0, 0.2 * (1 - s)), abs=1e-15)
        s_new, p = apply(J1(0.36, 0.0), s if s > 0 else 0.5)
        assert s_new == 0.0


def test_zero_probability_outcome_is_nan():
    s_new, p = apply(J2(0.0, 0.2), 1.0)
    assert p == 0.0 and math.isnan(s_new)


def test_apply_matches_matrix_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        op = random_operator(rng)
        s = float(rng.random())
        s_ref, p_ref = matrix_apply(op.kind, op.a, op.b, s)
        s_new, p = apply(op, s)
        assert p == pytest.approx(p_ref, abs=1e-12)
        if p_ref > 0:
            assert s_new == pytest.approx(s_ref, abs=1e-12)


def test_mobius_examples():
    m = mobius_coeffs(F1(0.8, 1.0))
    assert (m.a, m.b, m.c, m.d) == pytest.approx((1.0, 0.0, 0.2, 0.8), abs=1e-15)
    m = mobius_coeffs(F1(1, 1))
    assert (m.a, m.b, m.c, m.d) == (1.0, 0.0, 0.0, 1.0)
    m = mobius_coeffs(F2(1, 1))
    assert (m.a, m.b, m.c, m.d) == (-1.0, 1.0, 0.0, 1.0)
    for s in (0.1, 0.6):
        assert matrix_apply("f2", 1, 1, s) == pytest.approx((1 - s, 1.0), abs=1e-12)


def test_mobius_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(50):
        op = random_operator(rng)
        m = mobius_coeffs(op)
        u = rng.random(100)
        s_new, p = apply(op, u)
        np.testing.assert_allclose(m.probability(u), p, atol=1e-12, rtol=0)
        live = p > 0
        np.testing.assert_allclose(m.image(u)[live], s_new[live], atol=1e-12, rtol=0)
        if not m.jump:
            np.testing.assert_allclose(((m.a * u + m.b) / (m.c * u + m.d))[live], s_new[live], atol=1e-12, rtol=0)
        else:
            assert m.destination == pytest.approx(op.b / (op.a + op.b), abs=1e-15)


@pytest.mark.parametrize(
    "ops, expected",
    [
        ([F1(1, 1)], 0.0),
        ([F1(1, 0.64), J1(0.36, 0)], 0.0),
        ([F1(0.8, 1), J2(0, 0.2)], 0.0),
        ([F1(0.5, 0.5)], 0.5),
    ],
)
def test_check_completeness(ops, expected):
    assert check_completeness(ops) == pytest.approx(expected, abs=1e-12)


def test_incomplete_set_rejected():
    with pytest.raises(ValueError, match="completeness"):
        MeasurementSet((F1(0.5, 0.5),))


def test_jump_only_set_rejected():
    with pytest.raises(ValueError, match="filtering"):
        MeasurementSet((J1(0.0, 1.0), J2(1.0, 0.0)))


def test_named_channels():
    ad = amplitude_damping(0.36)
    assert ad.ops == (F1(1, 0.64), J1(0.36, 0))
    assert ad.completeness_defect <= 1e-12
    bf = bit_flip(0.5)
    assert bf.ops == (F1(0.5, 0.5), F2(0.5, 0.5))
    assert bf.completeness_defect < 1e-12
    assert amplitude_damping(0.0).ops == (F1(1, 1),)
    ud = upward_decay(0.8).ops
    assert [op.kind for op in ud] == ["f1", "j2"]
    assert [(op.a, op.b) for op in ud] == [(0.8, 1.0), (0.0, pytest.approx(0.2, abs=1e-15))]
    assert channel("phase_damping", gamma=0.1).ops == phase_damping(0.1).ops


def test_generalized_amplitude_damping_reading_is_complete():
    p, g = 0.3, 0.4
    gad = generalized_amplitude_damping(p, g)
    assert gad.ops == (
        F1(p, p * (1 - g)),
        F1((1 - p) * (1 - g), 1 - p),
        J1(p * g, 0.0),
        J2(0.0, (1 - p) * g),
    )
    assert gad.completeness_defect < 1e-12


@pytest.mark.parametrize("v", [0.1, 0.36, 0.5, 0.9])
def test_all_channels_complete(v):
    for ms in (amplitude_damping(v), phase_damping(v), bit_flip(v), generalized_amplitude_damping(v, v)):
        assert ms.completeness_defect < 1e-12


def test_channel_edge_drops_and_rewrites():
    # gamma = 1 turns f1(1, 0) into the equal jump j2(1, 0); the set is then jump-only
    assert operator("f1", 1.0, 0.0) == J2(1.0, 0.0)
    assert operator("f2", 0.0, 0.7) == J1(0.7, 0.0)
    with pytest.raises(ValueError):
        amplitude_damping(1.0)
    assert bit_flip(1.0).ops == (F1(1, 1),)
    with pytest.raises(ValueError):
        channel("nope", p=0.1)
    with pytest.raises(ValueError):
        channel("bit_flip", gamma=0.1)
    with pytest.raises(ValueError):
        amplitude_damping(1.5)


def test_outcome_distribution_examples():
    dist = outcome_distribution(RUNNING, 0.5)
    assert [d[0] for d in dist] == [0, 1]
    assert dist[0][1:] == pytest.approx((0.5 / 0.9, 0.9), abs=1e-12)
    assert dist[1][1:] == pytest.approx((1.0, 0.1), abs=1e-12)
    assert outcome_distribution(MeasurementSet((F1(1, 1),)), 0.42) == [(0, 0.42, 1.0)]
    assert outcome_distribution(RUNNING, 1.0) == [(0, 1.0, 1.0)]


@given(st.floats(min_value=0.0, max_value=1.0), st.sampled_from(["ad", "pd", "gad", "bf", "run"]),
       st.floats(min_value=0.05, max_value=0.95))
def test_distribution_sums_to_one(u, name, v):
    ms = {
        "ad": amplitude_damping(v), "pd": phase_damping(v), "gad": generalized_amplitude_damping(v, 1 - v),
        "bf": bit_flip(v), "run": upward_decay(v),
    }[name]
    dist = outcome_distribution(ms, u)
    ps = [p for _, _, p in dist]
    assert all(0.0 < p <= 1.0 + 1e-12 for p in ps)
    assert sum(ps) == pytest.approx(1.0, abs=1e-10)
    assert all(0.0 <= s <= 1.0 for _, s, _ in dist)
