import math

import numpy as np
import pytest

from swcluster import (
    CenterSet,
    DistanceMode,
    Point,
    WeightedPoint,
    WindowStream,
    assign,
    cost,
    dist,
    load_points_csv,
)

EUCLID = DistanceMode.EUCLIDEAN
SQ = DistanceMode.SQUARED_EUCLIDEAN


def P(coords, arrival=1):
    return Point(id=arrival, coords=tuple(float(c) for c in coords), arrival=arrival)


def W(coords, weight, arrival=1):
    return WeightedPoint(P(coords, arrival), weight)


def test_dist_pythagorean_triple():
    assert dist((0, 0), (3, 4), EUCLID) == pytest.approx(5.0)
    assert dist((0, 0), (3, 4), SQ) == pytest.approx(25.0)


def test_dist_identity():
    assert dist((1, 1), (1, 1), EUCLID) == 0.0


def test_dist_dimension_mismatch():
    with pytest.raises(ValueError):
        dist((1, 2), (1, 2, 3), EUCLID)


def test_dist_symmetry_and_nonnegativity_fuzz():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        p = tuple(rng.uniform(-5, 5, 3))
        q = tuple(rng.uniform(-5, 5, 3))
        for mode in (EUCLID, SQ):
            dpq = dist(p, q, mode)
            assert dpq >= 0.0
            assert dpq == pytest.approx(dist(q, p, mode), rel=1e-12)
    assert dist(p, p, EUCLID) == 0.0


@pytest.mark.parametrize("mode,lam", [(EUCLID, 1.0), (SQ, 2.0)])
def test_lambda_approximate_triangle_inequality(mode, lam):
    rng = np.random.default_rng(5)
    for _ in range(2000):
        a, b, c = (tuple(rng.uniform(-1, 1, 2)) for _ in range(3))
        assert dist(a, c, mode) <= lam * (dist(a, b, mode) + dist(b, c, mode)) + 1e-12


def test_cost_single_center():
    pts = [W((0, 0), 1.0), W((2, 0), 1.0)]
    assert cost(pts, CenterSet((((0.0, 0.0)),)), EUCLID) == pytest.approx(2.0)


def test_cost_weighted_squared():
    assert cost([W((0, 0), 3.0)], CenterSet(((1.0, 0.0),)), SQ) == pytest.approx(3.0)


def test_cost_matches_termwise_oracle():
    rng = np.random.default_rng(3)
    pts = [W(rng.uniform(0, 1, 2), 1.0, i + 1) for i in range(8)]
    centers = CenterSet(tuple(tuple(rng.uniform(0, 1, 2)) for _ in range(2)))
    expected = 0.0
    for p in pts:
        expected += p.weight * min(dist(p.point.coords, c, EUCLID) for c in centers.centers)
    assert cost(pts, centers, EUCLID) == pytest.approx(expected, rel=1e-12)


def test_cost_empty_centers_error():
    with pytest.raises(ValueError):
        CenterSet(())


def test_cost_monotone_in_points():
    rng = np.random.default_rng(9)
    a = [P(rng.uniform(0, 1, 2), i + 1) for i in range(5)]
    b = [P(rng.uniform(0, 1, 2), i + 6) for i in range(5)]
    centers = CenterSet(tuple(tuple(rng.uniform(0, 1, 2)) for _ in range(2)))
    assert cost(a, centers, EUCLID) <= cost(a + b, centers, EUCLID) + 1e-12


def test_cost_antimonotone_in_centers():
    rng = np.random.default_rng(13)
    pts = [P(rng.uniform(0, 1, 2), i + 1) for i in range(10)]
    c1 = tuple(tuple(rng.uniform(0, 1, 2)) for _ in range(2))
    c2 = c1 + (tuple(rng.uniform(0, 1, 2)),)
    assert cost(pts, CenterSet(c2), EUCLID) <= cost(pts, CenterSet(c1), EUCLID) + 1e-12


def test_assign_basic():
    res = assign([P((0, 0), 1), P((10, 0), 2)], CenterSet(((0.0, 0.0), (10.0, 0.0))), EUCLID)
    assert res.labels == (0, 1)
    assert res.counts == (1, 1)


def test_assign_tie_breaks_to_lowest_index():
    res = assign([P((5, 0))], CenterSet(((0.0, 0.0), (10.0, 0.0))), EUCLID)
    assert res.labels == (0,)


def test_assign_matches_bruteforce_scan():
    rng = np.random.default_rng(17)
    pts = [P(rng.uniform(0, 1, 2), i + 1) for i in range(20)]
    centers = CenterSet(tuple(tuple(rng.uniform(0, 1, 2)) for _ in range(3)))
    res = assign(pts, centers, EUCLID)
    counts = [0, 0, 0]
    for i, p in enumerate(pts):
        ds = [dist(p.coords, c, EUCLID) for c in centers.centers]
        best = ds.index(min(ds))
        assert res.labels[i] == best
        counts[best] += 1
    assert res.counts == tuple(counts)
    assert sum(res.counts) == len(pts)


def test_window_stream_expiry():
    ws = WindowStream(W=5, dimension=2, N=12)
    assert ws.window_start == 8
    assert ws.is_expired(7)
    assert ws.is_active(8)
    assert ws.is_active(12)


def test_weighted_point_rejects_nonpositive_weight():
    with pytest.raises(ValueError):
        W((0, 0), 0.0)


def test_center_set_rejects_duplicates():
    with pytest.raises(ValueError):
        CenterSet(((0.0, 0.0), (0.0, 0.0)))


def test_load_points_csv(tmp_path):
    f = tmp_path / "stream.csv"
    f.write_text("x,y\n1.0,2.0\n3.0,4.0\n5.0,6.0\n")
    pts = load_points_csv(f)
    assert len(pts) == 3
    assert pts[0].coords == (1.0, 2.0)
    assert [p.arrival for p in pts] == [1, 2, 3]


def test_load_points_csv_no_header(tmp_path):
    f = tmp_path / "stream.csv"
    f.write_text("1.0,2.0\n3.0,4.0\n")
    assert len(load_points_csv(f)) == 2


def test_load_points_csv_ragged_row_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(ValueError, match="bad.csv:2"):
        load_points_csv(f)
