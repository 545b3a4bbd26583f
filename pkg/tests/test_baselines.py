import numpy as np
import pytest

from bass import (
    SpectralObjective,
    Topology,
    dump_matchings,
    full_comm_policy,
    greedy_partition,
    matcha_policy,
    matcha_spectral_moments,
    matching_decomposition,
    optimize_epsilon,
    sample_round,
)

from .test_graph import p3, random_connected


def ring6():
    return Topology(6, [(i, (i + 1) % 6) for i in range(6)])


def star5():
    return Topology(5, [(0, i) for i in range(1, 5)])


def assert_valid_decomposition(t, md):
    seen = []
    for m in md.matchings:
        endpoints = [v for e in m for v in e]
        assert len(endpoints) == len(set(endpoints)), "shared endpoint in matching"
        seen.extend(m)
    assert sorted(seen) == sorted(t.edges), "matchings must cover each edge once"


class TestMatchingDecomposition:
    def test_p3_two_matchings(self):
        md = matching_decomposition(p3())
        assert md.r == 2
        assert md.matchings == (((0, 1),), ((1, 2),))

    def test_ring6_two_matchings_of_three(self):
        md = matching_decomposition(ring6())
        assert_valid_decomposition(ring6(), md)
        assert md.r == 2
        assert sorted(len(m) for m in md.matchings) == [3, 3]

    def test_star_singletons(self):
        md = matching_decomposition(star5())
        assert md.r == 4
        assert all(len(m) == 1 for m in md.matchings)

    def test_random_graphs_valid_and_bounded(self):
        rng = np.random.default_rng(83)
        for _ in range(20):
            t = random_connected(rng, int(rng.integers(3, 16)), extra_edges=4)
            md = matching_decomposition(t)
            assert_valid_decomposition(t, md)
            max_degree = int(t.degrees.max())
            assert md.r <= 2 * max_degree - 1

    def test_dump_format(self):
        text = dump_matchings(matching_decomposition(p3()))
        assert text == "0-1\n1-2\n"


class TestMatchaPolicy:
    def test_full_budget_always_active(self):
        md = matching_decomposition(p3())
        policy = matcha_policy(md, 4.0, p3()).with_epsilon(0.3)
        assert np.allclose(policy.match_probs, 1.0)
        act = policy.sample_round(np.random.default_rng(0))
        assert np.array_equal(act.effective_adjacency, p3().adjacency)
        assert act.slots_used == 4

    def test_half_budget_probabilities(self):
        md = matching_decomposition(p3())
        policy = matcha_policy(md, 2.0, p3())
        assert np.allclose(policy.match_probs, 0.5)
        assert policy.expected_slots == pytest.approx(2.0)

    def test_star_quarter_probabilities(self):
        md = matching_decomposition(star5())
        policy = matcha_policy(md, 2.0, star5())
        assert np.allclose(policy.match_probs, 0.25)

    def test_star_slot_efficiency_regime(self):
        # same 2-slot budget on the star: matching spreads 0.25 over four
        # single-edge matchings, while broadcast scheduling puts the hub at
        # probability 1 (and leaves at 0: their centrality is zero) - the
        # qualitative regime where broadcasting buys more links per slot
        import warnings

        from bass import (
            betweenness_centrality,
            greedy_partition,
            solve_probabilities,
            subset_betweenness,
        )

        t = star5()
        md = matching_decomposition(t)
        link_policy = matcha_policy(md, 2.0, t)
        assert np.allclose(link_policy.match_probs, 0.25)
        part = greedy_partition(t)
        scores = subset_betweenness(betweenness_centrality(t), part)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            probs = solve_probabilities(scores, 2.0)
        hub_subset = part.subset_of[0]
        assert probs[hub_subset] == 1.0
        assert probs.sum() == pytest.approx(1.0)  # leaves stay silent

    def test_infeasible_budget(self):
        md = matching_decomposition(p3())
        with pytest.raises(ValueError):
            matcha_policy(md, 5.0, p3())
        with pytest.raises(ValueError):
            matcha_policy(md, 0.0, p3())

    def test_requires_epsilon_to_sample(self):
        md = matching_decomposition(p3())
        policy = matcha_policy(md, 2.0, p3())
        with pytest.raises(ValueError):
            policy.sample_round(np.random.default_rng(0))

    def test_round_invariants(self):
        rng = np.random.default_rng(89)
        t = random_connected(rng, 10, extra_edges=4)
        md = matching_decomposition(t)
        policy = matcha_policy(md, md.r * 0.8, t).with_epsilon(0.2)
        ones = np.ones(t.n)
        for _ in range(200):
            act = policy.sample_round(rng)
            w = act.mixing_matrix
            assert np.abs(w - w.T).max() == 0.0
            assert np.abs(w @ ones - ones).max() <= 1e-12
            assert act.slots_used == 2 * act.active_subsets.sum()
            # active graph is a subgraph of the base topology
            assert np.all(act.effective_adjacency <= t.adjacency)

    def test_mean_slots_tracks_budget(self):
        rng = np.random.default_rng(97)
        t = ring6()
        md = matching_decomposition(t)
        budget = 2.4
        policy = matcha_policy(md, budget, t).with_epsilon(0.2)
        slots = np.array(
            [policy.sample_round(rng).slots_used for _ in range(20000)]
        )
        sem = slots.std(ddof=1) / np.sqrt(len(slots))
        assert abs(slots.mean() - budget) <= 3 * sem + 1e-12

    def test_consumes_r_uniforms_in_matching_order(self):
        t = ring6()
        md = matching_decomposition(t)
        policy = matcha_policy(md, 2.0, t).with_epsilon(0.2)
        seed = 31
        act = policy.sample_round(np.random.default_rng(seed))
        draws = np.random.default_rng(seed).random(md.r)
        assert np.array_equal(act.active_subsets, draws < policy.match_probs)

    def test_spectral_moments_match_independent_edges(self):
        # single-edge matchings on the star are independent Bernoullis, so
        # E[L~] has a closed form to compare against
        t = star5()
        md = matching_decomposition(t)
        policy = matcha_policy(md, 2.0, t)
        e_lap, e_gram = matcha_spectral_moments(
            policy, 40000, np.random.default_rng(3)
        )
        expected = np.zeros((5, 5))
        for (i, j) in t.edges:
            lap = np.zeros((5, 5))
            lap[i, i] = lap[j, j] = 1.0
            lap[i, j] = lap[j, i] = -1.0
            expected += 0.25 * lap
        assert np.abs(e_lap - expected).max() < 0.05
        search = optimize_epsilon(SpectralObjective(e_lap, e_gram))
        assert 0.0 < search.epsilon
        assert search.value < 1.0


class TestFullCommPolicy:
    def test_p3_three_slots_every_round(self):
        t = p3()
        part = greedy_partition(t)
        policy = full_comm_policy(part, epsilon=0.25)
        rng = np.random.default_rng(0)
        for _ in range(5):
            act = sample_round(policy, part, t, rng)
            assert act.slots_used == 3
            assert np.array_equal(
                act.mixing_matrix, np.eye(3) - 0.25 * t.laplacian()
            )

    def test_ring6_three_slots(self):
        part = greedy_partition(ring6())
        assert full_comm_policy(part).budget == 3.0

    def test_star_five_slots(self):
        part = greedy_partition(star5())
        assert full_comm_policy(part).budget == 5.0
