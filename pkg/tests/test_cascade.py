import numpy as np
import pytest

from interperc.cascade import (
    AttackSpec,
    ModelSpec,
    SystemState,
    attack,
    build_system,
    new_system,
    removed_count,
    run_cascade,
    run_cascade_partial,
    single_network_percolation,
    swap_layers,
)
from interperc.depmap import DependencyMap, identity_map, rewire_map
from interperc.errors import InvalidParameterError
from interperc.graphs import generate_square_lattice, giant_component

# Dependent nodes 0..4 with pi(0)=2, pi(1)=3, pi(2)=0, pi(3)=1, pi(4)=4; attack on 0, 1, 4, 6, 7.
CONTRAST_DEPENDENT = (0, 1, 2, 3, 4)
CONTRAST_PI = (2, 3, 0, 1, 4, 5, 6, 7, 8)
CONTRAST_ATTACK = (0, 1, 4, 6, 7)


def _random_system(side: int, q: float, seed: int = 0) -> SystemState:
    graph = generate_square_lattice(side)
    return new_system(graph, rewire_map(identity_map(graph.node_count), q, rng_seed=seed))


def _contrast_system() -> tuple[SystemState, np.ndarray]:
    mask = np.zeros(9, dtype=bool)
    mask[list(CONTRAST_DEPENDENT)] = True
    dep_map = DependencyMap(pi=np.array(CONTRAST_PI), tag="random_fraction", marked=mask)
    state = new_system(generate_square_lattice(3), dep_map, min_component_size=2)
    return state, mask


def _assert_consistent(state: SystemState, result) -> None:
    assert np.all(np.diff(result.trace_a) <= 0)
    assert np.all(np.diff(result.trace_b) <= 0)
    assert result.noi == len(result.trace) - 1
    assert result.noi <= state.node_count / 2 + 2
    assert result.p_infinity == result.final_alive.size / state.node_count
    assert np.array_equal(result.final_alive_b, np.sort(state.dep_map.pi[result.final_alive]))
    alive_a = np.zeros(state.node_count, dtype=bool)
    alive_a[result.final_alive] = True
    alive_b = np.zeros(state.node_count, dtype=bool)
    alive_b[result.final_alive_b] = True
    assert np.array_equal(giant_component(state.graph_a, alive_a), result.final_alive)
    assert np.array_equal(giant_component(state.graph_b, alive_b), result.final_alive_b)


class TestSystemState:
    def test_new_system_copies_topology_and_starts_alive(self):
        state = _random_system(4, 1.0)
        assert state.graph_b is state.graph_a
        assert state.alive_a.all() and state.alive_b.all()

    def test_size_mismatch_raises(self):
        with pytest.raises(InvalidParameterError, match="Layer sizes differ"):
            new_system(generate_square_lattice(3), identity_map(16))

    def test_build_system_is_deterministic(self):
        model = ModelSpec(topology="lattice", n=100, q=0.5)
        a, b = build_system(model, 7), build_system(model, 7)
        assert np.array_equal(a.dep_map.pi, b.dep_map.pi)
        assert model.lattice_side == 10

    def test_build_system_other_topology(self):
        state = build_system(ModelSpec(topology="erdos_renyi", n=200, q=1.0), 3)
        assert state.node_count == 200
        assert ModelSpec(topology="erdos_renyi", n=200).lattice_side is None


class TestAttack:
    def test_keep_everything(self):
        state = attack(_random_system(3, 1.0), AttackSpec(p=1.0, seed=1))
        assert state.alive_a.all() and state.alive_b.all()

    def test_remove_everything(self):
        state = attack(_random_system(3, 1.0), AttackSpec(p=0.0, seed=1))
        assert not state.alive_a.any() and not state.alive_b.any()

    def test_removes_floor_of_complement(self):
        assert removed_count(4 / 9, 9) == 5
        state = attack(_random_system(3, 1.0, seed=2), AttackSpec(p=4 / 9, seed=3))
        removed = np.flatnonzero(~state.alive_a)
        assert removed.size == 5
        assert np.array_equal(np.flatnonzero(~state.alive_b), np.sort(state.dep_map.pi[removed]))

    def test_attacks_are_nested_across_p(self):
        base = _random_system(10, 1.0)
        light = attack(base, AttackSpec(p=0.8, seed=11))
        heavy = attack(base, AttackSpec(p=0.5, seed=11))
        assert np.all(heavy.alive_a <= light.alive_a)

    def test_explicit_set_overrides_random_choice(self):
        state = attack(_random_system(3, 0.0), AttackSpec(p=0.5, explicit_set=(0, 8)))
        assert np.flatnonzero(~state.alive_a).tolist() == [0, 8]

    def test_input_state_untouched(self):
        base = _random_system(3, 1.0)
        attack(base, AttackSpec(p=0.2, seed=1))
        assert base.alive_a.all()

    def test_bad_explicit_set_raises(self):
        state = _random_system(3, 0.0)
        with pytest.raises(InvalidParameterError, match="outside"):
            attack(state, AttackSpec(p=0.5, explicit_set=(0, 9)))
        with pytest.raises(InvalidParameterError, match="repeated"):
            attack(state, AttackSpec(p=0.5, explicit_set=(1, 1)))

    def test_p_out_of_range_raises(self):
        with pytest.raises(InvalidParameterError, match="p=1.5"):
            attack(_random_system(3, 0.0), AttackSpec(p=1.5))


class TestRunCascade:
    def test_no_attack_single_round(self):
        result = run_cascade(_random_system(10, 1.0))
        assert result.noi == 1
        assert result.p_infinity == 1.0
        assert result.trace.tolist() == [1.0, 1.0]

    def test_everything_removed(self):
        result = run_cascade(attack(_random_system(5, 1.0), AttackSpec(p=0.0, seed=1)))
        assert result.p_infinity == 0.0
        assert result.noi == 1

    @pytest.mark.parametrize("p", [0.4, 0.6, 0.8])
    def test_identity_map_equals_single_network(self, p):
        graph = generate_square_lattice(50)
        state = new_system(graph, identity_map(graph.node_count))
        for seed in range(20):
            attacked = attack(state, AttackSpec(p=p, seed=seed))
            result = run_cascade(attacked)
            assert result.p_infinity == single_network_percolation(graph, attacked.alive_a)
            assert result.noi == 1

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [0.4, 0.6, 0.8])
    def test_identity_map_equals_single_network_large(self, p):
        graph = generate_square_lattice(200)
        state = new_system(graph, identity_map(graph.node_count))
        for seed in range(50):
            attacked = attack(state, AttackSpec(p=p, seed=seed))
            assert run_cascade(attacked).p_infinity == single_network_percolation(
                graph, attacked.alive_a
            )

    @pytest.mark.parametrize("q,p", [(1.0, 0.8), (1.0, 0.7), (0.3, 0.65), (0.1, 0.6)])
    def test_postconditions(self, q, p):
        for seed in range(5):
            state = attack(_random_system(30, q, seed=seed), AttackSpec(p=p, seed=seed))
            _assert_consistent(state, run_cascade(state))

    def test_random_map_cascades_over_several_rounds(self):
        state = attack(_random_system(40, 1.0, seed=1), AttackSpec(p=0.75, seed=1))
        assert run_cascade(state).noi > 1

    @pytest.mark.parametrize("p", [0.7, 0.75, 0.8])
    def test_layer_symmetry(self, p):
        for seed in range(10):
            state = attack(_random_system(40, 1.0, seed=seed), AttackSpec(p=p, seed=seed))
            forward = run_cascade(state)
            backward = run_cascade(swap_layers(state))
            assert forward.p_infinity == backward.p_infinity
            assert forward.noi == backward.noi
            assert np.array_equal(forward.trace_a, backward.trace_b)

    def test_full_model_collapses_contrast_configuration(self):
        state, _ = _contrast_system()
        result = run_cascade(attack(state, AttackSpec(p=4 / 9, explicit_set=CONTRAST_ATTACK)))
        assert result.p_infinity == 0.0
        assert result.noi == 3
        assert result.trace_a.tolist() == pytest.approx([4 / 9, 2 / 9, 0.0, 0.0])
        assert result.trace_b.tolist() == pytest.approx([4 / 9, 2 / 9, 0.0, 0.0])


class TestRunCascadePartial:
    def test_contrast_configuration_keeps_four_nodes(self):
        state, mask = _contrast_system()
        spec = AttackSpec(p=4 / 9, explicit_set=CONTRAST_ATTACK)
        result = run_cascade_partial(state, 5 / 9, spec, dependent=mask)
        assert result.final_alive.tolist() == [2, 3, 5, 8]
        assert result.p_infinity == pytest.approx(4 / 9)

    def test_no_dependency_is_single_network_percolation(self):
        state = _random_system(30, 1.0)
        spec = AttackSpec(p=0.7, seed=4)
        result = run_cascade_partial(state, 0.0, spec)
        expected = single_network_percolation(state.graph_a, attack(state, spec).alive_a)
        assert result.p_infinity == expected
        assert result.noi == 1

    def test_full_dependency_matches_full_model(self):
        state = _random_system(30, 1.0, seed=6)
        spec = AttackSpec(p=0.75, seed=6)
        partial = run_cascade_partial(state, 1.0, spec)
        full = run_cascade(attack(state, spec))
        assert partial.p_infinity == full.p_infinity
        assert partial.noi == full.noi

    def test_trace_non_increasing_with_half_dependent(self):
        state = _random_system(30, 1.0, seed=2)
        spec = AttackSpec(p=0.75, seed=2)
        mask = np.zeros(state.node_count, dtype=bool)
        mask[: state.node_count // 2] = True
        partial = run_cascade_partial(state, 0.5, spec, dependent=mask)
        assert np.all(np.diff(partial.trace_a) <= 0)
        assert np.all(np.diff(partial.trace_b) <= 0)

    def test_bad_fraction_raises(self):
        with pytest.raises(InvalidParameterError, match="1.5"):
            run_cascade_partial(_random_system(3, 0.0), 1.5, AttackSpec(p=1.0))

    def test_bad_mask_raises(self):
        with pytest.raises(InvalidParameterError, match="Dependent mask"):
            run_cascade_partial(
                _random_system(3, 0.0), 0.5, AttackSpec(p=1.0), dependent=np.ones(4, dtype=bool)
            )
