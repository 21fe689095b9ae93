import numpy as np
import pytest

from codesign.accel import Accelerator, sample_hardware
from codesign.archspace import accuracy_oracle, generate_cell_space, stable_hash64
from codesign.costmodel import AnalyticalCostModel, CountingCostModel, TableCostModel
from codesign.errors import EmptyOptimalSetError
from codesign.pareto import (
    ConstraintPoint,
    build_constraint_grid,
    build_optimal_set,
    constrained_argmax,
    grid_from_costs,
    select_from_set,
    selection_key,
)


def brute_force_argmax(space, lat, en, L, E):
    """Independent oracle: scan everything, apply the shared tie-break."""
    best = None
    for i, arch in enumerate(space.architectures):
        if lat[i] > L or en[i] > E:
            continue
        key = selection_key(accuracy_oracle(arch), lat[i], en[i], arch.canonical_json())
        if best is None or key < best[0]:
            best = (key, arch)
    return None if best is None else best[1]


def synthetic_table(space, accels, seed=17):
    """Deterministic, distinct synthetic costs for toy instances."""
    rng = np.random.default_rng(seed)
    m, n = len(space.architectures), len(accels)
    lat = rng.permutation(m * n).reshape(m, n).astype(np.int64) + 100
    en = (lat * 5 + rng.integers(0, 3, size=(m, n))).astype(np.float64)
    return TableCostModel(space.architectures, accels, lat, en), lat, en


@pytest.fixture(scope="module")
def toy_space():
    return generate_cell_space(seed=21, count=12)


@pytest.fixture(scope="module")
def proxy():
    return Accelerator(128, 500, 150, "KC-P")


class TestConstrainedArgmax:
    def test_permissive_budgets_return_global_argmax(self, toy_space, proxy):
        entry = constrained_argmax(toy_space, proxy, 1e15, 1e18)
        expected = max(toy_space.architectures, key=accuracy_oracle)
        assert entry.arch == expected

    def test_everything_infeasible_returns_none(self, toy_space, proxy):
        assert constrained_argmax(toy_space, proxy, 1.0, 1.0) is None

    def test_matches_brute_force_on_toy(self, toy_space, proxy):
        sub = generate_cell_space(seed=33, count=5)
        model = AnalyticalCostModel()
        lat, en = model.estimate_many(sub.architectures, proxy)
        for q in (0.2, 0.5, 0.9):
            L = float(np.quantile(lat.astype(float), q))
            E = float(np.quantile(en, q))
            expected = brute_force_argmax(sub, lat, en, L, E)
            got = constrained_argmax(sub, proxy, L, E)
            assert (got.arch if got else None) == expected

    def test_charges_one_scan(self, toy_space, proxy):
        counter = CountingCostModel()
        constrained_argmax(toy_space, proxy, 1e15, 1e18, cost_model=counter)
        assert counter.evaluations == toy_space.size


class TestConstraintGrid:
    def test_k1_is_maximal_budget(self, toy_space, proxy):
        model = AnalyticalCostModel()
        lat, en = model.estimate_many(toy_space.architectures, proxy)
        (point,) = build_constraint_grid(toy_space, proxy, 1)
        assert point.latency_budget == float(lat.max())
        assert point.energy_budget == float(en.max())
        # the single maximal point keeps the whole space feasible
        assert np.all(lat <= point.latency_budget)
        assert np.all(en <= point.energy_budget)

    def test_twenty_points_nondecreasing_on_cell_space(self):
        space = generate_cell_space(seed=1, count=1017)
        grid = build_constraint_grid(space, Accelerator(512, 900, 350, "KC-P"), 20)
        assert len(grid) == 20
        lats = [p.latency_budget for p in grid]
        ens = [p.energy_budget for p in grid]
        assert lats == sorted(lats)
        assert ens == sorted(ens)

    def test_deterministic(self, toy_space, proxy):
        a = build_constraint_grid(toy_space, proxy, 7)
        b = build_constraint_grid(toy_space, proxy, 7)
        assert a == b

    def test_duplicate_quantiles_shrink_grid(self):
        lat = np.array([5, 5, 5, 5], dtype=np.int64)
        en = np.array([7.0, 7.0, 7.0, 7.0])
        grid = grid_from_costs(lat, en, 4)
        assert len(grid) == 1


class TestBuildOptimalSet:
    def test_single_permissive_point_is_global_argmax(self, toy_space, proxy):
        grid = (ConstraintPoint(1e15, 1e18),)
        optimal = build_optimal_set(toy_space, proxy, grid)
        assert optimal.size == 1
        assert optimal.entries[0].arch == max(toy_space.architectures, key=accuracy_oracle)

    def test_about_twenty_entries_on_cell_space(self):
        space = generate_cell_space(seed=1, count=1017)
        proxy = Accelerator(512, 900, 350, "KC-P")
        grid = build_constraint_grid(space, proxy, 20)
        optimal = build_optimal_set(space, proxy, grid)
        assert 15 <= optimal.size <= 20

    def test_matches_union_of_per_point_argmaxes(self, proxy):
        space = generate_cell_space(seed=41, count=6)
        model, lat, en = synthetic_table(space, [proxy])
        lat0 = lat[:, 0]
        en0 = en[:, 0]
        grid = grid_from_costs(lat0, en0, 3)
        optimal = build_optimal_set(space, proxy, grid, cost_model=model)
        expected = []
        for point in grid:
            arch = brute_force_argmax(space, lat0, en0,
                                      point.latency_budget, point.energy_budget)
            if arch is not None and arch not in expected:
                expected.append(arch)
        assert [e.arch for e in optimal.entries] == expected

    def test_charges_single_scan_for_whole_grid(self, toy_space, proxy):
        counter = CountingCostModel()
        grid = build_constraint_grid(toy_space, proxy, 5)
        counter.reset()
        build_optimal_set(toy_space, proxy, grid, cost_model=counter)
        assert counter.evaluations == toy_space.size

    def test_all_infeasible_grid_raises(self, toy_space, proxy):
        with pytest.raises(EmptyOptimalSetError):
            build_optimal_set(toy_space, proxy, (ConstraintPoint(1e-6, 1e-6),))

    def test_slack_enlarges_set(self, toy_space, proxy):
        grid = build_constraint_grid(toy_space, proxy, 4)
        tight = build_optimal_set(toy_space, proxy, grid)
        loose = build_optimal_set(toy_space, proxy, grid, slack=5.0)
        assert loose.size >= tight.size
        assert {e.arch for e in tight.entries} <= {e.arch for e in loose.entries}

    def test_entries_are_pareto_efficient_on_proxy(self, proxy):
        space = generate_cell_space(seed=55, count=200)
        model = AnalyticalCostModel()
        lat, en = model.estimate_many(space.architectures, proxy)
        acc = [accuracy_oracle(a) for a in space.architectures]
        grid = build_constraint_grid(space, proxy, 15)
        optimal = build_optimal_set(space, proxy, grid)
        index = {a.canonical_json(): i for i, a in enumerate(space.architectures)}
        for entry in optimal.entries:
            i = index[entry.arch.canonical_json()]
            for j in range(space.size):
                if j == i or acc[j] < acc[i]:
                    continue
                dominates = (lat[j] <= lat[i] and en[j] <= en[i]
                             and (lat[j] < lat[i] or en[j] < en[i]))
                assert not dominates


class TestSelectFromSet:
    def test_round_trip_on_proxy_grid_points(self, toy_space, proxy):
        grid = build_constraint_grid(toy_space, proxy, 6)
        optimal = build_optimal_set(toy_space, proxy, grid)
        for point in grid:
            stage1 = constrained_argmax(toy_space, proxy,
                                        point.latency_budget, point.energy_budget)
            selected = select_from_set(optimal, proxy,
                                       point.latency_budget, point.energy_budget)
            assert selected.arch == stage1.arch

    def test_budgets_below_everything_is_infeasible(self, toy_space, proxy):
        grid = build_constraint_grid(toy_space, proxy, 3)
        optimal = build_optimal_set(toy_space, proxy, grid)
        assert select_from_set(optimal, proxy, 1.0, 1.0) is None

    def test_charges_set_size(self, toy_space, proxy):
        grid = build_constraint_grid(toy_space, proxy, 6)
        optimal = build_optimal_set(toy_space, proxy, grid)
        counter = CountingCostModel()
        select_from_set(optimal, proxy, 1e15, 1e18, cost_model=counter)
        assert counter.evaluations == optimal.size

    def test_monotone_budgets_monotone_accuracy(self, toy_space, proxy):
        model = AnalyticalCostModel()
        lat, en = model.estimate_many(toy_space.architectures, proxy)
        grid = build_constraint_grid(toy_space, proxy, 8)
        optimal = build_optimal_set(toy_space, proxy, grid)
        last = -np.inf
        for q in (0.3, 0.5, 0.7, 0.9, 1.0):
            L = float(np.quantile(lat.astype(float), q))
            E = float(np.quantile(en, q))
            selected = select_from_set(optimal, proxy, L, E)
            if selected is None:
                continue
            assert selected.accuracy >= last
            last = selected.accuracy


class TestOptimalSetInvariance:
    def test_transformed_grids_yield_identical_sets(self):
        space = generate_cell_space(seed=61, count=40)
        accels = sample_hardware(13, 4).accelerators
        base = np.array(
            [1 + stable_hash64(a.canonical_json()) % 10_000 for a in space.architectures],
            dtype=np.int64,
        )
        lat = np.stack([base, 3 * base + 11, base**2, 7 * base], axis=1)
        en = np.stack([2.0 * base, 5.0 * base + 3, 2.0 * base**2, base + 0.5], axis=1)
        model = TableCostModel(space.architectures, accels, lat, en)
        transforms = [
            (lambda l, e: (l, e)),
            (lambda l, e: (3 * l + 11, 5 * e / 2 + 3)),
            (lambda l, e: (l**2, e**2 / 2)),
            (lambda l, e: (7 * l, e / 2 + 0.5)),
        ]
        sl = np.sort(base)
        base_grid = [(float(sl[i]), float(2.0 * sl[i])) for i in
                     (4, 9, 19, 29, 39)]
        sets = []
        for accel, tf in zip(accels, transforms):
            grid = [ConstraintPoint(*tf(L, E)) for L, E in base_grid]
            optimal = build_optimal_set(space, accel, grid, cost_model=model)
            sets.append(frozenset(e.arch.canonical_json() for e in optimal.entries))
        assert all(s == sets[0] for s in sets)
