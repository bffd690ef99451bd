import numpy as np
import pytest

from repcon.adversary import AttackSpec, ByzantineNode


def make(spec, dim=20, seed=1, node_id=7):
    return ByzantineNode.create(node_id, spec, dim, -100.0, 100.0, seed)


class TestRelay:
    def relay_node(self, dim=20):
        spec = AttackSpec(kind="relay", bound=1e9, period=10, magnitude=100.0, direction=0)
        return make(spec, dim=dim)

    def test_spike_round_adds_magnitude_on_direction(self):
        node = self.relay_node()
        x_j = np.zeros(20)
        node.observe({3: x_j})
        out = node.emit(10, (3,))
        expected = np.zeros(20)
        expected[0] = 100.0
        np.testing.assert_array_equal(out[3], expected)

    def test_quiet_round_echoes_exactly(self):
        node = self.relay_node()
        x_j = np.arange(20.0)
        node.observe({3: x_j})
        np.testing.assert_array_equal(node.emit(11, (3,))[3], x_j)

    def test_round_zero_sends_zero_vector(self):
        node = self.relay_node()
        np.testing.assert_array_equal(node.emit(0, (3,))[3], np.zeros(20))

    def test_per_edge_inconsistency(self):
        node = self.relay_node()
        node.observe({1: np.full(20, 1.0), 2: np.full(20, 2.0)})
        out = node.emit(11, (1, 2))
        assert not np.array_equal(out[1], out[2])

    def test_direction_out_of_range(self):
        spec = AttackSpec(kind="relay", bound=1e9, period=10, magnitude=1.0, direction=25)
        with pytest.raises(ValueError, match="direction"):
            make(spec, dim=20)


class TestFixedValue:
    def test_constant_every_round_every_neighbor(self):
        spec = AttackSpec(kind="fixed_value", bound=10.0, value=(1.0, 2.0))
        node = make(spec, dim=2)
        for t in (0, 1, 17):
            out = node.emit(t, (1, 2, 3))
            for j in (1, 2, 3):
                np.testing.assert_array_equal(out[j], [1.0, 2.0])

    def test_unspecified_value_drawn_from_init_box(self):
        spec = AttackSpec(kind="fixed_value", bound=1e3)
        a = make(spec, dim=4, seed=9)
        b = make(spec, dim=4, seed=9)
        np.testing.assert_array_equal(a.fixed_value, b.fixed_value)
        assert np.all(np.abs(a.fixed_value) <= 100.0)


class TestUniformRandom:
    def test_same_vector_to_all_neighbors_fresh_per_round(self):
        spec = AttackSpec(kind="uniform_random", bound=1e3, lo=-1.0, hi=1.0)
        node = make(spec, dim=8)
        out0 = node.emit(0, (1, 2))
        assert out0[1] is out0[2]
        out1 = node.emit(1, (1, 2))
        assert not np.array_equal(out0[1], out1[1])

    def test_deterministic_given_seed(self):
        spec = AttackSpec(kind="uniform_random", bound=1e3, lo=-5.0, hi=5.0)
        a, b = make(spec, dim=6, seed=3), make(spec, dim=6, seed=3)
        for t in range(5):
            np.testing.assert_array_equal(a.emit(t, (1,))[1], b.emit(t, (1,))[1])


class TestBoundEnforcement:
    def test_violation_raises(self):
        spec = AttackSpec(kind="fixed_value", bound=1.0, value=(10.0, 0.0))
        node = make(spec, dim=2)
        with pytest.raises(ValueError, match="attack spec violates declared bound"):
            node.emit(0, (1,))

    def test_custom_attack_checked_too(self):
        spec = AttackSpec(kind="custom", bound=1.0,
                          emit_fn=lambda node, t, received, rng: np.full(2, 50.0))
        node = make(spec, dim=2)
        with pytest.raises(ValueError, match="attack spec violates declared bound"):
            node.emit(0, (1,))


class TestSpecValidation:
    def test_kind_and_parameters(self):
        with pytest.raises(ValueError, match="unknown attack kind"):
            AttackSpec(kind="teleport", bound=1.0)
        with pytest.raises(ValueError):
            AttackSpec(kind="uniform_random", bound=1.0, lo=2.0, hi=1.0)
        with pytest.raises(ValueError):
            AttackSpec(kind="relay", bound=1.0, period=0, magnitude=1.0, direction=0)
        with pytest.raises(ValueError):
            AttackSpec(kind="fixed_value", bound=-1.0)
