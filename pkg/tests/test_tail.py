import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special
from scipy.cluster import hierarchy
from scipy.spatial.distance import squareform

from hiercop.copula import GroupSpec
from hiercop.distributions import make_rng
from hiercop.errors import DataError, DomainError
from hiercop.mcmc import McmcConfig, run_chains
from hiercop.mle import sample_copula_data
from hiercop.tail import (
    DissimilarityMatrix,
    complete_linkage,
    complete_linkage_cluster,
    dissimilarity_matrix,
    empirical_copula,
    empirical_lower_tail,
    posterior_tail_summary,
    t_copula_lower_tail,
)


def brute_tail(U):
    n = len(U)
    q = math.sqrt(n) / n
    count = 0
    for a, b in U:
        if a <= q and b <= q:
            count += 1
    return min(1.0, count / math.sqrt(n))


def brute_cluster(D, max_size):
    """O(K^3) complete linkage; clusters named by their smallest index."""
    clusters = [[i] for i in range(len(D))]
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            dist = max(D[i][j] for i in clusters[a] for j in clusters[b])
            key = (dist, min(clusters[a]), min(clusters[b]))
            if best is None or key < best[0]:
                best = (key, a, b)
        _, a, b = best
        if len(clusters[a]) + len(clusters[b]) > max_size:
            break
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
    return sorted(clusters)


def planted_blocks(rng, sizes, n=400):
    blocks = []
    for s in sizes:
        blocks.append(sample_copula_data(0.9, 3, s, n, rng))
    return np.column_stack(blocks)


def test_empirical_copula_examples():
    U = np.array([[0.1, 0.2], [0.6, 0.7], [0.9, 0.4]])
    assert empirical_copula(U, 0.5, 0.5) == pytest.approx(1 / 3)
    assert empirical_copula(U, 1.0, 1.0) == 1.0
    assert empirical_copula(U, 0.0, 0.7) == 0.0


def test_comonotone_and_antithetic():
    for k in range(2, 51):
        r = np.arange(1, k * k + 1) / (k * k + 1)
        assert empirical_lower_tail(np.column_stack([r, r])) == 1.0
    for n in (4, 10, 50, 100, 1000):
        r = np.arange(1, n + 1) / (n + 1)
        assert empirical_lower_tail(np.column_stack([r, 1 - r])) == 0.0


def test_comonotone_off_square_sizes():
    # the denominator is q, not the marginal mass below q
    for n in (10, 50, 1000):
        r = np.arange(1, n + 1) / (n + 1)
        want = min(1.0, math.floor((n + 1) / math.sqrt(n)) / math.sqrt(n))
        assert empirical_lower_tail(np.column_stack([r, r])) == want


def test_tail_at_n_100_is_ten_times_copula():
    U = np.random.default_rng(8).uniform(size=(100, 2))
    assert empirical_lower_tail(U) == 10 * empirical_copula(U, 0.1, 0.1)


@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 50))
@settings(max_examples=200, deadline=None)
def test_tail_equals_pair_counting(seed, n):
    U = np.random.default_rng(seed).uniform(size=(n, 2)) ** 2
    assert empirical_lower_tail(U) == brute_tail(U.tolist())


def test_tail_needs_two_rows():
    with pytest.raises(DataError):
        empirical_lower_tail(np.array([[0.1, 0.2]]))


def test_dissimilarity_matrix_shape_and_pairs():
    X = np.random.default_rng(9).uniform(size=(40, 3))
    D = dissimilarity_matrix(X, ["a", "b", "c"])
    assert D.values.shape == (3, 3)
    assert np.all(np.diag(D.values) == 0)
    for i, j in itertools.combinations(range(3), 2):
        assert D.values[i, j] == 1 - brute_tail(X[:, [i, j]].tolist())


def test_dissimilarity_with_missing_values_drops_rows_pairwise():
    X = np.random.default_rng(10).uniform(size=(30, 3))
    X[3, 0] = np.nan
    D = dissimilarity_matrix(X)
    keep = ~np.isnan(X[:, 0])
    assert D.values[0, 1] == 1 - brute_tail(X[keep][:, [0, 1]].tolist())
    assert D.values[1, 2] == 1 - brute_tail(X[:, [1, 2]].tolist())


def test_independent_columns_are_near_one_minus_q():
    n = 10_000
    X = np.random.default_rng(11).uniform(size=(n, 2))
    q = math.sqrt(n) / n
    assert dissimilarity_matrix(X).values[0, 1] == pytest.approx(1 - q, abs=0.03)


def test_two_blocks_six_points():
    D = np.full((6, 6), 0.9)
    D[:3, :3] = 0.1
    D[3:, 3:] = 0.1
    np.fill_diagonal(D, 0.0)
    for max_size in (3, 4, 5):
        part = complete_linkage_cluster(DissimilarityMatrix(D, list("abcdef")), max_size)
        assert part.clusters == [["a", "b", "c"], ["d", "e", "f"]]
    assert complete_linkage_cluster(DissimilarityMatrix(D, list("abcdef")), 6).clusters == [list("abcdef")]


def test_max_size_one_rejected():
    D = DissimilarityMatrix(np.zeros((2, 2)), ["a", "b"])
    with pytest.raises(DomainError):
        complete_linkage_cluster(D, 1)


@given(k=st.integers(2, 8), levels=st.integers(2, 6), max_size=st.integers(2, 9),
       seed=st.integers(0, 2 ** 32 - 1))
@settings(max_examples=300, deadline=None)
def test_linkage_matches_brute_force(k, levels, max_size, seed):
    rng = np.random.default_rng(seed)
    # few distinct levels forces plenty of ties
    vals = rng.integers(0, levels, size=(k, k)) / levels
    D = np.triu(vals, 1)
    D = D + D.T
    part = complete_linkage_cluster(DissimilarityMatrix(D, list(range(k))), max_size)
    assert sorted(part.clusters) == brute_cluster(D.tolist(), max_size)
    assert max(len(c) for c in part.clusters) <= max_size
    assert sorted(itertools.chain(*part.clusters)) == list(range(k))


def test_merge_heights_match_scipy_without_ties():
    rng = np.random.default_rng(12)
    for _ in range(20):
        k = 9
        D = np.triu(rng.uniform(size=(k, k)), 1)
        D = D + D.T
        ours = sorted(m.height for m in complete_linkage(DissimilarityMatrix(D, list(range(k)))))
        ref = hierarchy.linkage(squareform(D), method="complete")[:, 2]
        assert np.allclose(ours, ref, rtol=0, atol=0)


def test_planted_blocks_recovered():
    for seed in range(10):
        X = planted_blocks(make_rng(seed), (6, 6))
        part = complete_linkage_cluster(dissimilarity_matrix(X), 10)
        assert sorted(part.clusters) == [[f"V{j + 1}" for j in range(6)],
                                          [f"V{j + 1}" for j in range(6, 12)]]


def test_singletons_flagged_and_dropped():
    D = np.array([[0, 0.1, 0.9], [0.1, 0, 0.9], [0.9, 0.9, 0]], dtype=float)
    part = complete_linkage_cluster(DissimilarityMatrix(D, ["x", "y", "z"]), 2)
    assert part.singletons == ["z"]
    assert part.without_singletons().clusters == [["x", "y"]]
    assert part.assignments() == {"x": 1, "y": 1, "z": 2}


def test_dissimilarity_validation():
    with pytest.raises(DataError):
        DissimilarityMatrix(np.array([[0, 0.2], [0.3, 0]]), ["a", "b"])
    with pytest.raises(DataError):
        DissimilarityMatrix(np.array([[0.1, 0.2], [0.2, 0]]), ["a", "b"])
    with pytest.raises(DataError):
        DissimilarityMatrix(np.zeros((2, 2)), ["a"])


# -- t copula coefficient -------------------------------------------------------

def test_t_tail_comonotone_limit():
    for nu in range(1, 36):
        assert abs(t_copula_lower_tail(1.0, nu) - 1.0) <= 1e-12


def test_t_tail_closed_form_nu_one_rho_zero():
    # T_2 has the closed form 1/2 + x / (2 sqrt(2 + x^2))
    x = -math.sqrt(2)
    want = 2 * (0.5 + x / (2 * math.sqrt(2 + x * x)))
    assert t_copula_lower_tail(0.0, 1) == pytest.approx(want, rel=1e-14)


def test_t_tail_matches_quadrature():
    for rho, nu in [(0.3, 4), (0.8, 20), (-0.5, 2)]:
        x = -math.sqrt((nu + 1) * (1 - rho) / (1 + rho))
        k = nu + 1
        dens = lambda t: math.exp(special.gammaln((k + 1) / 2) - special.gammaln(k / 2)
                                  - 0.5 * math.log(k * math.pi) - (k + 1) / 2 * math.log1p(t * t / k))
        want = 2 * integrate.quad(dens, -np.inf, x, epsabs=1e-15)[0]
        assert t_copula_lower_tail(rho, nu) == pytest.approx(want, rel=1e-9)


def test_t_tail_monotone_on_grid():
    rho = np.linspace(0.0, 0.95, 20)
    nu = np.arange(1, 36)
    lam = t_copula_lower_tail(rho[:, None], nu[None, :])
    assert np.all(np.diff(lam, axis=0) > 0)
    assert np.all(np.diff(lam[1:], axis=1) < 0)


def test_t_tail_domain():
    with pytest.raises(DomainError):
        t_copula_lower_tail(-1.0, 3)


def test_posterior_tail_summary():
    rng = make_rng(13)
    groups = [GroupSpec("t", sample_copula_data(0.5, 5, 2, 60, rng), name="pair"),
              GroupSpec("gaussian", sample_copula_data(0.2, None, 2, 60, rng), name="g")]
    store = run_chains(groups, McmcConfig(chains=1, scans=300, burn_in=100, delta_gamma=0.1))
    out = posterior_tail_summary(store)
    assert [s.name for s in out] == ["pair"]
    assert 0 <= out[0].stats.lower <= out[0].stats.mean <= out[0].stats.upper <= 1
    gauss = run_chains(groups[1:], McmcConfig(chains=1, scans=50, burn_in=10))
    with pytest.raises(DataError):
        posterior_tail_summary(gauss)
