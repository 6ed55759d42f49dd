import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mdicw.errors import DegeneratePovm, InfeasibleProbabilities
from mdicw.qubit import QubitState, born_prob
from mdicw.tomography import BinaryPovm, povm_from_probs, probs_from_povm, validate_povm


@st.composite
def povms(draw):
    v = np.array([draw(st.floats(-1, 1)) for _ in range(3)])
    if np.linalg.norm(v) > 1:
        v = v / np.linalg.norm(v)
    cap = 1.0 / (1.0 + np.linalg.norm(v))
    a1 = draw(st.floats(1e-6, 1.0)) * cap
    return BinaryPovm(a1, tuple(v))


def test_probs_are_born_rule():
    m = BinaryPovm(0.3, (0.2, -0.5, 0.4))
    expected = [born_prob(QubitState.from_label(lab), m.m1()) for lab in ("0", "1", "+", "+i")]
    assert np.allclose(probs_from_povm(m), expected, atol=1e-14)


@given(povms())
def test_round_trip(m):
    p = probs_from_povm(m)
    assume(all(0 <= x <= 1 for x in p))
    back = probs_from_povm(povm_from_probs(*p))
    assert np.allclose(back, p, atol=1e-12, rtol=0)


@given(povms())
def test_reconstructed_povm_is_valid(m):
    p = probs_from_povm(m)
    assume(all(0 <= x <= 1 for x in p))
    assert validate_povm(povm_from_probs(*p)) == []


def test_known_reconstruction():
    # |+i><+i| clicks with certainty on |+i> and with probability 1/2 elsewhere
    m = povm_from_probs(0.5, 0.5, 0.5, 1.0)
    assert m.a1 == 0.5
    assert np.allclose(m.n, (0, 1, 0))


def test_zero_effect():
    m = povm_from_probs(0.0, 0.0, 0.0, 0.0)
    assert m.a1 == 0.0 and m.n == (0.0, 0.0, 0.0)


def test_degenerate():
    with pytest.raises(DegeneratePovm):
        povm_from_probs(0.0, 0.0, 0.3, 0.0)


@pytest.mark.parametrize("p", [(0.1, 0.1, 0.9, 0.1), (1.2, 0.0, 0.5, 0.5), (0.9, 0.9, 0.9, 0.1)])
def test_infeasible(p):
    with pytest.raises(InfeasibleProbabilities):
        povm_from_probs(*p)


def test_violations_are_listed():
    v = validate_povm(BinaryPovm(0.6, (0.0, 0.0, 1.0)))
    assert [x.invariant for x in v] == ["a1(1+|n|) <= 1"]
    assert v[0].margin == pytest.approx(0.2)
    assert validate_povm(BinaryPovm(0.5, (0.0, 0.0, 1.0 + 1e-10))) == []


def test_from_effect_round_trip():
    m = BinaryPovm(0.25, (0.1, 0.2, -0.3))
    back = BinaryPovm.from_effect(m.m1())
    assert back.a1 == pytest.approx(0.25)
    assert np.allclose(back.n, m.n)
    assert np.allclose(m.m0(), np.eye(2) - m.m1())


def test_complement_direction():
    m = BinaryPovm(0.25, (0.0, 0.0, 1.0))
    # M0 = I - M1 = diag(0.5, 1) = 0.75 (I - sigma_z / 3)
    assert m.a0 == 0.75
    assert np.allclose(m.n0, (0, 0, -1 / 3))
