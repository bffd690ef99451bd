import numpy as np
import pytest

from repcon.core import NeighborStates
from repcon.engine import InitSpec, run
from repcon.protocol import (
    HonestNode,
    ProtocolConfig,
    arepc_step,
    average_step,
    register_repc_baseline,
    repc_step,
    wla_step,
    wmsr_step,
)
from repcon.reputation import ReputationConfig
from repcon.topology import Graph


def arepc_cfg(eta=0.005, lam=0.0, alpha=0.5, **kw):
    return ProtocolConfig(kind="arepc", alpha=alpha,
                          reputation=ReputationConfig(eta=eta, lam=lam, **kw))


def ns_of(ids, states):
    return NeighborStates(tuple(ids), np.array(states, dtype=float))


class TestArepcStep:
    def test_consensus_is_fixed_point(self):
        node = HonestNode.create(0, [2.5, -1.0], arepc_cfg(), (1, 2, 3))
        ns = ns_of((1, 2, 3), [[2.5, -1.0]] * 3)
        new, rep = arepc_step(node, ns)
        np.testing.assert_array_equal(new, [2.5, -1.0])
        np.testing.assert_allclose(rep.weights, [1/3] * 3, atol=1e-15)

    def test_separated_attacker_zero_weight_consensus_preserved(self):
        # Attacker separation beyond 1/(eta*h) with honest consensus: exact
        # zero weight and bitwise unchanged state.
        node = HonestNode.create(0, [1.0], arepc_cfg(eta=0.005), (1, 2, 9))
        ns = ns_of((1, 2, 9), [[1.0], [1.0], [1000.0]])
        new, rep = arepc_step(node, ns)
        assert rep.weight_of(9) == 0.0
        np.testing.assert_allclose(rep.weights[:2], [0.5, 0.5], atol=0)
        np.testing.assert_array_equal(new, [1.0])

    def test_hand_rolled_round(self):
        # One full round computed independently with scalar arithmetic.
        eta, alpha = 0.005, 0.5
        node = HonestNode.create(0, [0.0], arepc_cfg(eta=eta, alpha=alpha), (1, 2, 3))
        ns = ns_of((1, 2, 3), [[0.0], [0.1], [1000.0]])
        new, rep = arepc_step(node, ns)

        cm = sorted([0.0, 0.1, 1000.0])[1]
        losses = [abs(x - cm) for x in (0.0, 0.1, 1000.0)]
        z = [-eta * l for l in losses]
        # support is the two near neighbors; threshold from their sum
        tau = (z[0] + z[1] - 1.0) / 2.0
        weights = [z[0] - tau, z[1] - tau, 0.0]
        expected = 0.0 + alpha * (weights[1] * 0.1 + weights[2] * 1000.0)
        assert rep.weight_of(3) == 0.0
        np.testing.assert_allclose(rep.weights, weights, atol=1e-15)
        assert new[0] == pytest.approx(expected, abs=1e-15)

    def test_new_state_in_convex_hull(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            own = rng.uniform(-10, 10, 3)
            node = HonestNode.create(0, own, arepc_cfg(), (1, 2, 3, 4))
            pts = rng.uniform(-10, 10, (4, 3))
            new, _ = arepc_step(node, ns_of((1, 2, 3, 4), pts))
            lo = np.minimum(pts.min(axis=0), own) - 1e-9
            hi = np.maximum(pts.max(axis=0), own) + 1e-9
            assert np.all(new >= lo) and np.all(new <= hi)

    def test_missing_neighbor_message(self):
        node = HonestNode.create(0, [0.0], arepc_cfg(), (1, 2, 3))
        with pytest.raises(ValueError, match="neighbor messages"):
            arepc_step(node, ns_of((1, 2), [[0.0], [0.0]]))

    def test_infinite_sum_rejected_for_arepc(self):
        with pytest.raises(ValueError, match="infinite_sum"):
            ProtocolConfig(kind="arepc", alpha=0.5,
                           reputation=ReputationConfig(accumulation="infinite_sum", eta=1.0))


class TestAverageStep:
    def test_mean_preserving_example(self):
        node = HonestNode.create(0, [1.0], ProtocolConfig(kind="average", alpha=1.0), (1, 2))
        assert average_step(node, ns_of((1, 2), [[0.0], [2.0]]))[0] == 1.0

    def test_all_equal(self):
        node = HonestNode.create(0, [3.25], ProtocolConfig(kind="average", alpha=0.7), (1, 2))
        assert average_step(node, ns_of((1, 2), [[3.25], [3.25]]))[0] == 3.25

    def test_half_step_toward_neighbor(self):
        node = HonestNode.create(0, [0.0], ProtocolConfig(kind="average", alpha=0.5), (1,))
        assert average_step(node, ns_of((1,), [[4.0]]))[0] == 2.0


class TestWmsrStep:
    def test_trims_extremes(self):
        node = HonestNode.create(0, [5.0], ProtocolConfig(kind="wmsr", alpha=1.0, f=1),
                                 (1, 2, 3, 4))
        new = wmsr_step(node, ns_of((1, 2, 3, 4), [[1.0], [4.0], [6.0], [100.0]]))
        assert new[0] == 5.0  # discards 100 and 1; mean(4, 5, 6) = 5

    def test_f_zero_matches_mean_with_own_value(self):
        node = HonestNode.create(0, [3.0], ProtocolConfig(kind="wmsr", alpha=1.0, f=0), (1, 2))
        new = wmsr_step(node, ns_of((1, 2), [[0.0], [3.0]]))
        assert new[0] == pytest.approx((0.0 + 3.0 + 3.0) / 3)

    def test_all_equal_fixed(self):
        node = HonestNode.create(0, [2.0, -7.0], ProtocolConfig(kind="wmsr", alpha=0.3, f=1),
                                 (1, 2, 3))
        new = wmsr_step(node, ns_of((1, 2, 3), [[2.0, -7.0]] * 3))
        np.testing.assert_array_equal(new, [2.0, -7.0])

    def test_never_discards_values_equal_to_own(self):
        node = HonestNode.create(0, [5.0], ProtocolConfig(kind="wmsr", alpha=1.0, f=2), (1, 2, 3))
        new = wmsr_step(node, ns_of((1, 2, 3), [[5.0], [5.0], [5.0]]))
        assert new[0] == 5.0


class TestWlaStep:
    def test_first_round_equidistant_uniform(self):
        node = HonestNode.create(0, [0.0, 0.0],
                                 ProtocolConfig(kind="wla", alpha=0.5, theta=0.001), (1, 2))
        _, rep = wla_step(node, ns_of((1, 2), [[3.0, 4.0], [-3.0, -4.0]]))
        np.testing.assert_allclose(rep.weights, [0.5, 0.5], atol=1e-15)

    def test_identical_neighbor_keeps_maximal_weight(self):
        cfg = ProtocolConfig(kind="wla", alpha=0.5, theta=0.01)
        node = HonestNode.create(0, [1.0], cfg, (1, 2))
        for _ in range(20):
            _, rep = wla_step(node, ns_of((1, 2), [[1.0], [9.0]]))
        assert rep.weight_of(1) > rep.weight_of(2)
        assert node.ledger.totals[0] == 0.0

    def test_softmax_inversion_example(self):
        theta = 0.001
        cfg = ProtocolConfig(kind="wla", alpha=0.5, theta=theta)
        node = HonestNode.create(0, [0.0], cfg, (1, 2))
        node.ledger.totals = np.array([0.0, np.log(2.0) / theta])
        # next instantaneous losses are both zero, keeping the gap at ln 2
        _, rep = wla_step(node, ns_of((1, 2), [[0.0], [0.0]]))
        np.testing.assert_allclose(rep.weights, [2/3, 1/3], atol=1e-12)


class TestRepcSlot:
    def teardown_method(self):
        register_repc_baseline(None)

    def test_unregistered_errors(self):
        node = HonestNode.create(0, [0.0],
                                 ProtocolConfig(kind="repc", alpha=0.5, f=1, epsilon=1e-3), (1,))
        with pytest.raises(RuntimeError, match="repc baseline not provided"):
            repc_step(node, ns_of((1,), [[1.0]]))

    def test_registered_impl_must_emit_simplex(self):
        register_repc_baseline(lambda node, ns, f, eps: np.full(len(ns), 1.0 / len(ns)))
        cfg = ProtocolConfig(kind="repc", alpha=0.5, f=1, epsilon=1e-3)
        node = HonestNode.create(0, [1.0], cfg, (1, 2))
        new, rep = repc_step(node, ns_of((1, 2), [[1.0], [1.0]]))
        np.testing.assert_array_equal(new, [1.0])  # all-honest identical: fixed
        np.testing.assert_allclose(rep.weights, [0.5, 0.5])

        register_repc_baseline(lambda node, ns, f, eps: np.array([0.9, 0.9]))
        with pytest.raises(ValueError):
            repc_step(node, ns_of((1, 2), [[1.0], [1.0]]))


class TestAllHonestConsensus:
    def test_average_rmse_decreases_monotonically_on_ring(self):
        n = 8
        g = Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
        cfg = ProtocolConfig(kind="average", alpha=0.5, rounds=200)
        res = run(g, cfg, {}, InitSpec(-100, 100), 2, 200, master_seed=5)
        rmse = [r.rmse for r in res.traces]
        assert all(b <= a + 1e-12 for a, b in zip(rmse, rmse[1:]))
        assert rmse[-1] < 1e-6
