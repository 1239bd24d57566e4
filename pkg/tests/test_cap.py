import itertools
import math

import numpy as np
import pytest

from pgcaps.cap import (Cap, CollinearError, DuplicatePointError, coverage_from_scratch,
                        greedy_complete, is_cap, is_complete, trivial_lower_bound)
from pgcaps.geometry import space


def brute_is_cap(S, pts):
    return not any(S.collinear(a, b, c) for a, b, c in itertools.combinations(pts, 3))


def brute_complete(S, pts):
    covered = set(pts)
    for a, b in itertools.combinations(pts, 2):
        covered.update(S.line_points(a, b).tolist())
    return len(covered) == S.num_points


def pts_of(S, *coords):
    return [S.point_from_coords(c) for c in coords]


def test_single_point():
    S = space(3, 3)
    cap = Cap(S, [5])
    assert cap.num_covered == 1 and cap.covered[5]


def test_fano_line_rejected():
    S = space(2, 2)
    a, b, c = pts_of(S, (1, 0, 0), (0, 1, 0), (1, 1, 0))
    cap = Cap(S, [a, b])
    with pytest.raises(CollinearError) as e:
        cap.add_point(c)
    assert sorted(e.value.triple) == sorted((a, b, c))
    with pytest.raises(DuplicatePointError):
        cap.add_point(a)


def test_triangle_coverage_and_witness():
    S = space(2, 2)
    tri = pts_of(S, (1, 0, 0), (0, 1, 0), (0, 0, 1))
    cap = Cap(S, tri)
    assert cap.num_covered == 6
    chk = is_complete(cap)
    assert not chk and chk.witness == (S.point_from_coords((1, 1, 1)),)
    four = Cap(S, tri + pts_of(S, (1, 1, 1)))
    assert is_complete(four)


def test_is_cap_examples():
    S = space(2, 2)
    assert is_cap(S, [0, 5])
    line = pts_of(S, (1, 0, 0), (0, 1, 0), (1, 1, 0))
    chk = is_cap(S, line)
    assert not chk and sorted(chk.witness) == sorted(line)
    with pytest.raises(DuplicatePointError):
        is_cap(S, [1, 1, 2])


@pytest.mark.parametrize("n,p,k", [(2, 3, 1), (3, 2, 1), (3, 3, 1), (2, 2, 2), (3, 5, 1)])
def test_incremental_coverage_matches_scratch(n, p, k):
    S = space(n, p, k)
    rng = np.random.default_rng(n * 100 + p)
    for _ in range(5):
        cap = Cap(S)
        prev = cap.covered.copy()
        while True:
            free = cap.uncovered()
            if not len(free):
                break
            cap.add_point(int(rng.choice(free)))
            assert np.all(cap.covered >= prev)  # monotone
            prev = cap.covered.copy()
            assert np.array_equal(cap.covered, coverage_from_scratch(S, cap.points))
        assert brute_is_cap(S, cap.points)
        assert brute_complete(S, cap.points)


def test_unchecked_mode_accepts_collinear():
    S = space(2, 2)
    cap = Cap(S, pts_of(S, (1, 0, 0), (0, 1, 0), (1, 1, 0)), checked=False)
    assert len(cap) == 3


def test_greedy_fixpoint_and_deterministic():
    S = space(2, 2)
    done = greedy_complete(Cap(S, pts_of(S, (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1))))
    assert len(done) == 4
    g = greedy_complete(Cap(S))
    assert len(g) == 4 and brute_complete(S, g.points) and brute_is_cap(S, g.points)
    assert greedy_complete(Cap(S)).points == g.points


def test_greedy_random_pg33():
    S = space(3, 3)
    for seed in range(10):
        cap = greedy_complete(Cap(S), np.random.default_rng(seed))
        assert is_cap(S, cap.points) and brute_complete(S, cap.points)


def test_trivial_bound():
    b = trivial_lower_bound(space(3, 2, 2))
    assert b.real == pytest.approx(math.sqrt(2) * 4)
    assert math.isclose(trivial_lower_bound(space(3, 2, 2)).real, 5.657, abs_tol=5e-4)

    def least(S):
        return next(n for n in range(S.num_points + 1)
                    if n + math.comb(n, 2) * (S.q - 1) >= S.num_points)
    assert trivial_lower_bound(space(2, 2)).integer == 4
    for n, p in [(2, 3), (3, 2), (3, 3), (3, 5), (4, 3)]:
        S = space(n, p)
        assert trivial_lower_bound(S).integer == least(S)
