import itertools

import pytest

from pgcaps.cap import Cap, is_cap, is_complete, trivial_lower_bound
from pgcaps.geometry import space
from pgcaps.oracle import OracleTooLarge, exhaustive_min_complete_cap, subset_min_complete_cap

# frozen from both search routines
KNOWN = {(2, 2): 4, (2, 3): 4, (3, 2): 5, (2, 4): 6}


@pytest.mark.parametrize("n,q", [(2, 2), (2, 3), (3, 2)])
def test_two_routines_agree(n, q):
    S = space(n, q)
    a = exhaustive_min_complete_cap(S)
    b = subset_min_complete_cap(S)
    assert a.size == b.size == KNOWN[(n, q)]
    for res in (a, b):
        assert is_cap(S, res.witness)
        assert is_complete(Cap(S, res.witness))
    assert a.size >= trivial_lower_bound(S).integer


def test_pg24_hyperoval():
    S = space(2, 2, 2)
    res = exhaustive_min_complete_cap(S)
    assert res.size == KNOWN[(2, 4)]
    assert is_complete(Cap(S, res.witness))


def test_no_smaller_complete_cap_pg22():
    S = space(2, 2)
    for pts in itertools.combinations(range(S.num_points), 3):
        if is_cap(S, pts):
            assert not is_complete(Cap(S, pts))


def test_pg32_witness_is_elliptic_quadric_size():
    S = space(3, 2)
    res = exhaustive_min_complete_cap(S)
    assert len(res.witness) == 5
    assert not any(S.collinear(*t) for t in itertools.combinations(res.witness, 3))


def test_limits():
    with pytest.raises(OracleTooLarge):
        exhaustive_min_complete_cap(space(3, 7))
    with pytest.raises(OracleTooLarge):
        subset_min_complete_cap(space(2, 5))
