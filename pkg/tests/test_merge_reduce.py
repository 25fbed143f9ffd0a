import numpy as np
import pytest

from swcluster import (
    CenterSet,
    DistanceMode,
    MergeReduceState,
    Point,
    coreset_cost_error,
    cost,
    mr_coreset,
    mr_insert,
)

EUCLID = DistanceMode.EUCLIDEAN


def P(coords, arrival):
    return Point(id=arrival, coords=tuple(float(c) for c in coords), arrival=arrival)


def uniform_points(rng, n, d=2):
    return [P(rng.uniform(0, 1, d), i + 1) for i in range(n)]


def occupied(state):
    return {lvl: [b is not None for b in slots] for lvl, slots in state.levels.items()}


def test_no_reduction_before_leaves_fill():
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=64, seed=1, leaf_capacity=4)
    rng = np.random.default_rng(0)
    for p in uniform_points(rng, 3):
        st.insert(p)
    assert st.levels == {}
    assert len(st.leaves[0]) == 3


def test_cascade_after_eight_insertions():
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=64, seed=1, leaf_capacity=4)
    rng = np.random.default_rng(0)
    for p in uniform_points(rng, 8):
        st.insert(p)
    assert st.leaves == [[], []]
    assert occupied(st) == {2: [True, False]}


def test_cascade_after_sixteen_insertions():
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=64, seed=1, leaf_capacity=4)
    rng = np.random.default_rng(0)
    for p in uniform_points(rng, 16):
        st.insert(p)
    assert occupied(st)[3] == [True, False]
    assert occupied(st)[2] == [False, False]
    # a full level-i bucket represents exactly leaf_capacity * 2^(i-1) points
    assert st.levels[3][0].total_weight == pytest.approx(4 * 2**2, rel=1e-9)


def test_level_buckets_carry_exact_block_weights():
    st = MergeReduceState(k=2, eps=0.4, technique="chen", n_max=128, seed=2, leaf_capacity=4)
    rng = np.random.default_rng(3)
    for p in uniform_points(rng, 100):
        st.insert(p)
    for level, slots in st.levels.items():
        for b in slots:
            if b is not None:
                assert b.total_weight == pytest.approx(4 * 2 ** (level - 1), rel=1e-9)


def test_represented_weight_exhaustive():
    rng = np.random.default_rng(2)
    pts = uniform_points(rng, 64)
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=64, seed=3, leaf_capacity=4)
    for m, p in enumerate(pts, start=1):
        st.insert(p)
        assert st.represented_weight == pytest.approx(m, rel=1e-9)
        assert mr_coreset(st).total_weight == pytest.approx(m, rel=1e-9)


def test_never_more_than_two_buckets_per_level():
    rng = np.random.default_rng(5)
    st = MergeReduceState(k=2, eps=0.4, technique="chen", n_max=200, seed=4, leaf_capacity=4)
    for p in uniform_points(rng, 150):
        st.insert(p)
        for slots in st.levels.values():
            assert len(slots) == 2
        assert st.bucket_count <= 2 * (len(st.levels) + 1)


def test_capacity_exceeded_rejected():
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=4, seed=1, leaf_capacity=2)
    rng = np.random.default_rng(1)
    for p in uniform_points(rng, 4):
        st.insert(p)
    with pytest.raises(ValueError, match="n_max"):
        st.insert(P((0.5, 0.5), 5))


def test_single_point_coreset():
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=8, seed=1, leaf_capacity=4)
    mr_insert(st, P((0.25, 0.75), 1))
    cs = mr_coreset(st)
    assert len(cs.points) == 1
    assert cs.points[0].weight == 1.0
    assert cs.points[0].coords == (0.25, 0.75)


def test_empty_coreset_rejected():
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=8, seed=1)
    with pytest.raises(ValueError):
        mr_coreset(st)


def test_coreset_cost_error_within_eps():
    rng = np.random.default_rng(6)
    pts = uniform_points(rng, 200)
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=200, seed=7, leaf_capacity=8)
    for p in pts:
        st.insert(p)
    cs = mr_coreset(st)
    crng = np.random.default_rng(70)
    worst = 0.0
    for _ in range(50):
        centers = CenterSet(tuple(tuple(crng.uniform(0, 1, 2)) for _ in range(2)))
        worst = max(worst, coreset_cost_error(pts, cs, centers, EUCLID))
    assert worst <= 0.4


def test_coreset_cost_error_with_forced_sampling():
    rng = np.random.default_rng(8)
    pts = uniform_points(rng, 256)
    st = MergeReduceState(
        k=2, eps=0.4, technique="chen", n_max=256, seed=9, leaf_capacity=8, c_vc=0.0
    )
    for p in pts:
        st.insert(p)
    cs = mr_coreset(st)
    assert cs.total_weight == pytest.approx(256, rel=1e-9)
    crng = np.random.default_rng(71)
    worst = 0.0
    for _ in range(50):
        centers = CenterSet(tuple(tuple(crng.uniform(0, 1, 2)) for _ in range(2)))
        worst = max(worst, coreset_cost_error(pts, cs, centers, EUCLID))
    assert worst <= 0.4


def _top_bucket(state):
    top = max(lvl for lvl, slots in state.levels.items() if any(b is not None for b in slots))
    slot = 0 if state.levels[top][0] is not None else 1
    return state.levels[top][slot]


@pytest.mark.parametrize("c_vc", [1.0, 0.0])
def test_top_bucket_density_error(c_vc):
    # every region of the top bucket's partition holds about as much coreset
    # weight as raw points, after the whole tree of reductions
    n, eps = 256, 0.4
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        pts = uniform_points(rng, n)
        st = MergeReduceState(
            k=2, eps=eps, technique="chen", n_max=n, seed=seed, leaf_capacity=8, c_vc=c_vc
        )
        for p in pts:
            st.insert(p)
        bucket = _top_bucket(st)
        assert bucket.total_weight == pytest.approx(n, rel=1e-9)
        geo = bucket.geometry
        raw_counts: dict[str, float] = {}
        for p in pts:
            rid = geo.locate(p.coords)
            raw_counts[rid] = raw_counts.get(rid, 0.0) + 1.0
        coreset_weights: dict[str, float] = {}
        for cp in bucket.points:
            coreset_weights[cp.region_id] = coreset_weights.get(cp.region_id, 0.0) + cp.weight
        for rid in set(raw_counts) | set(coreset_weights):
            diff = abs(raw_counts.get(rid, 0.0) - coreset_weights.get(rid, 0.0))
            assert diff <= eps * n


def test_determinism_same_seed_same_coreset():
    rng = np.random.default_rng(12)
    pts = uniform_points(rng, 100)
    a = MergeReduceState(k=2, eps=0.4, technique="chen", n_max=100, seed=5, leaf_capacity=8)
    b = MergeReduceState(k=2, eps=0.4, technique="chen", n_max=100, seed=5, leaf_capacity=8)
    for p in pts:
        a.insert(p)
        b.insert(p)
    assert mr_coreset(a).to_json() == mr_coreset(b).to_json()


def test_default_leaf_capacity_clamped():
    st = MergeReduceState(k=2, eps=0.4, technique="hpm", n_max=600, seed=1)
    st.insert(P((0.1, 0.2), 1))
    assert 2 * 2 + 2 <= st.leaf_capacity <= 64
