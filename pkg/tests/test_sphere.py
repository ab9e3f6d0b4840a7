import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddlike.errors import NotInComplement
from ddlike.hilbert import FinVec, inner_product, norm
from ddlike.sphere import (
    contract_point,
    contract_point_relative,
    phase1_conditioning,
    phase1_lower_bound,
    phase1_vector,
    shift,
)

e = FinVec.basis

unit_vectors = (
    st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=8)
    .map(lambda zs: FinVec.from_dense([complex(a, b) for a, b in zs]))
    .filter(lambda v: norm(v) > 1e-3)
    .map(lambda v: v / norm(v))
)
times = st.floats(0, 1)


def test_examples():
    x = (e(1) + 1j * e(3)) / math.sqrt(2)
    assert contract_point(x, 0) == x
    assert contract_point(x, 1) == e(1)
    assert norm(contract_point(e(1), 0.5) - e(2)) < 1e-15


def test_relative_examples():
    assert contract_point_relative(e(5), 1, 2) == e(3)
    x = (e(4) - e(6)) / math.sqrt(2)
    assert contract_point_relative(x, 0, 2) == x
    assert norm(contract_point_relative(e(3), 0.5, 2) - e(4)) < 1e-15


def test_relative_rejects_head():
    with pytest.raises(NotInComplement):
        contract_point_relative((e(1) + e(4)) / math.sqrt(2), 0.3, 2)


def test_bad_inputs():
    with pytest.raises(ValueError):
        contract_point(2 * e(1), 0.2)
    with pytest.raises(ValueError):
        contract_point(e(1), 1.5)


@given(unit_vectors, times)
def test_stays_on_sphere(x, t):
    assert norm(contract_point(x, t)) == pytest.approx(1, abs=1e-12)


@given(unit_vectors)
def test_phase_boundary_is_shift(x):
    assert norm(contract_point(x, 0.5) - shift(x)) < 1e-12


@given(unit_vectors, st.floats(0, 0.5))
def test_phase1_lower_bound(x, t):
    assert norm(phase1_vector(x, t)) >= phase1_lower_bound(x, t) - 1e-12


@given(unit_vectors, st.integers(0, 5), times)
def test_relative_stays_in_complement(x, k, t):
    y = contract_point_relative(x.relabel(k), t, k)
    assert all(j > k for j in y.support)
    assert norm(y) == pytest.approx(1, abs=1e-12)


@given(unit_vectors)
def test_path_is_continuous(x):
    ts = [j / 400 for j in range(401)]
    pts = [contract_point(x, t) for t in ts]
    assert max(norm(p - q) for p, q in zip(pts, pts[1:])) < 0.2


def test_phase2_orthogonal_start():
    x = (e(1) + e(2)) / math.sqrt(2)
    assert inner_product(shift(x), e(1)) == 0
    assert phase1_conditioning(x) > 0.5
