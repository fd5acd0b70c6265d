import math
from fractions import Fraction

import numpy as np
import pytest

from skorolab.cadlag import index_compose
from skorolab.errors import BadDist, BadParam
from skorolab.processes import (
    IncrementSpec,
    Seed,
    const_index,
    donsker_family,
    donsker_polygon,
    partial_sum_family,
    poisson_index,
    sample_increments,
    sample_wiener,
    splitmix64,
    uniform_dist,
)


# seeding


def test_splitmix64_reference_value():
    # first output of the reference generator started from state 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_seed_keys_frozen():
    assert Seed(42, 0).key(0) == 7138415436909018950
    assert Seed(42, 3).key(1) == 6717522985872898827


def test_frozen_draws():
    x = sample_increments(IncrementSpec("rademacher"), 8, Seed(42))
    assert x.tolist() == [-1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0]
    z = sample_increments(IncrementSpec("standard-normal"), 3, Seed(42))
    assert z == pytest.approx([-1.28735973, 0.36145568, 0.56909982], abs=1e-8)


def test_determinism_and_prefix_consistency():
    spec = IncrementSpec("standard-normal")
    a = sample_increments(spec, 100, Seed(9, 4))
    b = sample_increments(spec, 100, Seed(9, 4))
    assert np.array_equal(a, b)
    assert np.array_equal(sample_increments(spec, 30, Seed(9, 4)), a[:30])


def test_replicate_streams_do_not_collide():
    spec = IncrementSpec("centered-uniform")
    heads = {tuple(sample_increments(spec, 16, Seed(1, r))) for r in range(1000)}
    assert len(heads) == 1000


def test_streams_are_distinct():
    s = Seed(5, 0)
    assert not np.array_equal(s.rng(0).random(4), s.rng(1).random(4))


def test_seed_range():
    with pytest.raises(BadParam):
        Seed(-1)
    with pytest.raises(BadParam):
        Seed(2**64)


# increments


def test_increment_supports():
    x = sample_increments(IncrementSpec("rademacher"), 4, Seed(3))
    assert set(x.tolist()) <= {-1.0, 1.0}
    g = sample_increments(IncrementSpec("geometric-decay", base=2.0), 3, Seed(3))
    assert np.array_equal(np.abs(g), [0.5, 0.25, 0.125])
    u = sample_increments(IncrementSpec("centered-uniform"), 1000, Seed(3))
    assert np.all(np.abs(u) <= math.sqrt(3))


def test_normal_variance():
    z = sample_increments(IncrementSpec("standard-normal"), 100_000, Seed(11))
    assert abs(z.var() - 1.0) <= 0.03


def test_spec_validation():
    for bad in (dict(kind="cauchy"), dict(sigma=0.0), dict(kind="geometric-decay", base=1.0)):
        with pytest.raises(BadParam) as exc:
            IncrementSpec(**bad)
        assert exc.value.code == "BAD_PARAM"


# families and polygons


def test_constant_partial_sums():
    fam = partial_sum_family(IncrementSpec("constant"), Seed(0))
    for k in (0, 1, 5, 300):
        assert fam(k)(0.7) == k


def test_geometric_cauchy_certificate():
    b = 2.0
    fam = partial_sum_family(IncrementSpec("geometric-decay", base=b), Seed(8))
    for j in range(1, 30):
        for k in range(j, 40):
            assert abs(fam.partial_sum(k) - fam.partial_sum(j)) <= b ** (-j) * b / (b - 1)


def test_donsker_constant_line():
    x = donsker_polygon(IncrementSpec("constant"), 4, Seed(0))
    assert x(1.0) == 2.0
    assert np.allclose(x(np.linspace(0, 1, 9)), 2 * np.linspace(0, 1, 9), atol=1e-15)


def test_donsker_two_steps():
    # replicate 6 of root 0 draws (+1, -1)
    assert sample_increments(IncrementSpec("rademacher"), 2, Seed(0, 6)).tolist() == [1.0, -1.0]
    x = donsker_polygon(IncrementSpec("rademacher"), 2, Seed(0, 6))
    assert x.knots == [(0.0, 0.0, 0.0), (0.5, 1 / math.sqrt(2), 1 / math.sqrt(2)), (1.0, 0.0, 0.0)]


def test_donsker_shape():
    spec = IncrementSpec("standard-normal", sigma=2.0)
    for n in (1, 7, 100):
        x = donsker_polygon(spec, n, Seed(1))
        assert x.is_continuous and x.t.size == n + 1
        s = sample_increments(spec, n, Seed(1)).sum()
        assert x(1.0) == pytest.approx(s / (2.0 * math.sqrt(n)), rel=1e-12)


def test_donsker_family_member_matches_polygon():
    spec = IncrementSpec("rademacher")
    fam = donsker_family(spec, Seed(4))
    for k in (1, 16, 100):
        assert fam(k).equals(donsker_polygon(spec, k, Seed(4)), atol=1e-13)
    grid = np.linspace(0, 1, 33)
    assert np.allclose([fam.value(16, s) for s in grid], fam(16)(grid), atol=1e-13)


def test_wiener_starts_at_zero():
    for r in range(5):
        assert sample_wiener(256, Seed(0, r))(0.0) == 0.0


# index paths


def test_poisson_index_paths():
    for r in range(20):
        mu = poisson_index(100, 0.5, Seed(3, r))
        vals = mu(np.linspace(0, 1, 301))
        assert np.all(vals >= 1) and np.all(vals == np.round(vals))
        assert np.all(np.diff(vals) >= 0)


def test_poisson_index_mean():
    vals = np.array([poisson_index(100, 0.5, Seed(12, r))(0.0) for r in range(10_000)])
    se = math.sqrt(50.0 / vals.size)
    assert abs(vals.mean() - 51.0) <= 3 * se


def test_poisson_needs_positive_offset():
    with pytest.raises(BadParam):
        poisson_index(100, 0.0, Seed(1))


def test_partial_sums_count_poisson_points():
    fam = partial_sum_family(IncrementSpec("constant"), Seed(0))
    mu = poisson_index(40, 1.0, Seed(9))
    z = index_compose(fam, mu)
    for s in np.linspace(0, 1, 41):
        assert z(s) == mu(s)


def test_const_index():
    assert const_index({7: 1}, Seed(0))(0.3) == 7
    n = 3
    draws = [const_index({2 * n: Fraction(1, 2), 2 * n + 1: Fraction(1, 2)}, Seed(2, r))(0.0) for r in range(10_000)]
    even = np.mean([d % 2 == 0 for d in draws])
    assert abs(even - 0.5) <= 0.02


def test_const_index_bad_dist():
    for bad in ({}, {0: 1}, {2: 0.5}, {1: 0.5, 2: -0.2, 3: 0.7}):
        with pytest.raises(BadDist):
            const_index(bad, Seed(0))


def test_uniform_dist():
    d = uniform_dist(4, 8)
    assert sum(d.values()) == 1 and sorted(d) == [4, 5, 6, 7, 8]
