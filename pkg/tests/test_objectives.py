import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmplace import (
    ObjectiveVector,
    Placement,
    ScalarWeights,
    ServerLoad,
    check_feasible,
    dominates,
    eval_active_fraction,
    eval_load_balance,
    eval_resource_waste,
    eval_utilization,
    evaluate,
    scalarize,
    server_loads,
    utilization_sum,
)
from vmplace.objectives import batch_loads, batch_objectives, batch_scalarize

from conftest import make_problem, random_problem


def loads_from_utils(utils, inactive=0):
    loads = [ServerLoad(0.0, 0.0, u, True) for u in utils]
    loads += [ServerLoad(0.0, 0.0, 0.0, False)] * inactive
    return loads


class TestServerLoads:
    def test_single_server_example(self, one_server_problem):
        loads = server_loads(one_server_problem, Placement((1, 1)))
        assert loads[0].cpu_used == 5.0
        assert loads[0].mem_used == 8.0
        assert loads[0].utilization == pytest.approx(0.5, abs=1e-12)
        assert loads[0].active

    def test_empty_server_inactive(self, split_problem):
        loads = server_loads(split_problem, Placement((1, 1, 1, 1)))
        assert loads[1] == ServerLoad(0.0, 0.0, 0.0, False)

    def test_full_server_utilization_one(self):
        p = make_problem([(4, 6)], [(4, 6)])
        loads = server_loads(p, Placement((1,)))
        assert loads[0].utilization == pytest.approx(1.0, abs=1e-12)


class TestEvalFunctions:
    def test_utilization_mean(self):
        assert eval_utilization(loads_from_utils([0.5, 0.5])) == pytest.approx(0.5)
        assert eval_utilization(loads_from_utils([1.0], inactive=3)) == pytest.approx(1.0)

    def test_load_balance_values(self):
        assert eval_load_balance(loads_from_utils([0.5, 0.5])) == 0.0
        assert eval_load_balance(loads_from_utils([0.2, 0.8])) == pytest.approx(0.3, abs=1e-12)
        assert eval_load_balance(loads_from_utils([0.7])) == 0.0

    def test_load_balance_no_active_raises(self):
        with pytest.raises(ValueError):
            eval_load_balance(loads_from_utils([], inactive=2))

    def test_active_fraction(self):
        assert eval_active_fraction(loads_from_utils([0.1, 0.2], inactive=2)) == 0.5
        assert eval_active_fraction(loads_from_utils([0.1])) == 1.0

    def test_resource_waste(self):
        assert eval_resource_waste(loads_from_utils([1.0])) == 0.0
        assert eval_resource_waste(loads_from_utils([0.2, 0.8])) == pytest.approx(0.5, abs=1e-12)

    def test_waste_is_complement_of_utilization(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            utils = rng.uniform(0, 1, rng.integers(1, 6)).tolist()
            loads = loads_from_utils(utils, inactive=int(rng.integers(0, 3)))
            assert eval_resource_waste(loads) == pytest.approx(1.0 - eval_utilization(loads), abs=1e-12)

    def test_utilization_sum_diagnostic(self):
        loads = loads_from_utils([0.25, 0.5], inactive=1)
        assert utilization_sum(loads) == pytest.approx(0.75, abs=1e-12)


class TestCheckFeasible:
    def test_overload_reports_violation(self):
        p = make_problem([(10, 100)], [(12, 1)])
        ok, violations = check_feasible(p, Placement((1,)))
        assert not ok
        assert violations == [(1, "cpu", pytest.approx(2.0))]

    def test_exact_fill_is_feasible(self):
        p = make_problem([(10, 10)], [(4, 4), (6, 6)])
        ok, violations = check_feasible(p, Placement((1, 1)))
        assert ok and violations == []

    def test_both_resources_reported(self):
        p = make_problem([(10, 10), (10, 10)], [(11, 12), (1, 1)])
        ok, violations = check_feasible(p, Placement((1, 2)))
        assert not ok
        assert [(v.server, v.resource) for v in violations] == [(1, "cpu"), (1, "mem")]


class TestEvaluate:
    def test_composition_example(self, one_server_problem):
        objs = evaluate(one_server_problem, Placement((1, 1)))
        assert objs.utilization == pytest.approx(0.5, abs=1e-12)
        assert objs.load_balance == 0.0
        assert objs.active_fraction == 1.0
        assert objs.feasible

    def test_pure(self, split_problem):
        s = Placement((1, 2, 1, 2))
        assert evaluate(split_problem, s) == evaluate(split_problem, s)

    def test_feasibility_flag_matches_check(self, split_problem):
        rng = np.random.default_rng(11)
        for _ in range(30):
            s = Placement(tuple(int(v) for v in rng.integers(1, 3, split_problem.n)))
            assert evaluate(split_problem, s).feasible == check_feasible(split_problem, s)[0]

    def test_rejects_out_of_range(self, split_problem):
        with pytest.raises(ValueError):
            evaluate(split_problem, Placement((1, 2, 3, 1)))


class TestBatchPath:
    @settings(max_examples=30)
    @given(seed=st.integers(0, 2**31))
    def test_batch_rows_match_single_evaluation(self, seed):
        rng = np.random.default_rng(seed)
        p = random_problem(rng)
        rows = rng.integers(0, p.m, (8, p.n))
        objs = batch_objectives(p, *batch_loads(p, rows))
        scalars = batch_scalarize(objs, ScalarWeights())
        for i in range(rows.shape[0]):
            placement = Placement(tuple(int(v) + 1 for v in rows[i]))
            single = evaluate(p, placement)
            assert objs.utilization[i] == single.utilization
            assert objs.load_balance[i] == single.load_balance
            assert objs.active_fraction[i] == single.active_fraction
            assert bool(objs.feasible[i]) == single.feasible
            assert scalars[i] == scalarize(single, ScalarWeights())

    @settings(max_examples=20)
    @given(seed=st.integers(0, 2**31))
    def test_list_ops_agree_with_evaluate(self, seed):
        rng = np.random.default_rng(seed)
        p = random_problem(rng)
        s = Placement(tuple(int(v) for v in rng.integers(1, p.m + 1, p.n)))
        loads = server_loads(p, s)
        objs = evaluate(p, s)
        assert eval_utilization(loads) == pytest.approx(objs.utilization, abs=1e-12)
        assert eval_load_balance(loads) == pytest.approx(objs.load_balance, abs=1e-12)
        assert eval_active_fraction(loads) == objs.active_fraction

    @settings(max_examples=20)
    @given(seed=st.integers(0, 2**31))
    def test_server_relabeling_invariance(self, seed):
        rng = np.random.default_rng(seed)
        p = random_problem(rng)
        perm = rng.permutation(p.m)
        relabeled = make_problem(
            [(p.servers[j].cpu, p.servers[j].mem) for j in perm],
            [(v.cpu, v.mem) for v in p.vms],
        )
        assign = rng.integers(0, p.m, p.n)
        inverse = np.empty(p.m, dtype=int)
        inverse[perm] = np.arange(p.m)
        original = evaluate(p, Placement(tuple(int(v) + 1 for v in assign)))
        mirrored = evaluate(relabeled, Placement(tuple(int(inverse[v]) + 1 for v in assign)))
        assert mirrored.utilization == pytest.approx(original.utilization, abs=1e-12)
        assert mirrored.load_balance == pytest.approx(original.load_balance, abs=1e-12)
        assert mirrored.active_fraction == original.active_fraction
        assert mirrored.feasible == original.feasible


def vec(u, lb, af, feas=True):
    return ObjectiveVector(u, lb, af, feas)


class TestDominates:
    def test_examples(self):
        assert dominates(vec(0.9, 0.1, 0.5), vec(0.8, 0.2, 0.5))
        assert not dominates(vec(0.9, 0.3, 0.5), vec(0.8, 0.2, 0.5))
        assert dominates(vec(0.1, 0.9, 1.0, True), vec(0.99, 0.0, 0.1, False))

    def test_equal_vectors_do_not_dominate(self):
        a = vec(0.5, 0.2, 0.4)
        assert not dominates(a, a)

    @settings(max_examples=60)
    @given(
        u1=st.floats(0, 1), lb1=st.floats(0, 0.5), af1=st.floats(0, 1), f1=st.booleans(),
        u2=st.floats(0, 1), lb2=st.floats(0, 0.5), af2=st.floats(0, 1), f2=st.booleans(),
    )
    def test_irreflexive_and_asymmetric(self, u1, lb1, af1, f1, u2, lb2, af2, f2):
        a, b = vec(u1, lb1, af1, f1), vec(u2, lb2, af2, f2)
        assert not dominates(a, a)
        assert not (dominates(a, b) and dominates(b, a))


class TestScalarize:
    def test_perfect_point(self):
        w = ScalarWeights()
        assert scalarize(vec(1.0, 0.0, 0.0), w) == 0.0

    def test_equal_weight_example(self):
        w = ScalarWeights()
        assert scalarize(vec(0.5, 0.3, 0.5), w) == pytest.approx(1.3 / 3.0, abs=1e-12)

    def test_infeasibility_adds_flat_penalty(self):
        w = ScalarWeights()
        feasible = scalarize(vec(0.5, 0.3, 0.5, True), w)
        infeasible = scalarize(vec(0.5, 0.3, 0.5, False), w)
        assert infeasible == feasible + w.infeasibility_penalty

    def test_monotone_in_each_objective(self):
        w = ScalarWeights()
        base = vec(0.5, 0.2, 0.5)
        assert scalarize(vec(0.6, 0.2, 0.5), w) < scalarize(base, w)
        assert scalarize(vec(0.5, 0.3, 0.5), w) > scalarize(base, w)
        assert scalarize(vec(0.5, 0.2, 0.6), w) > scalarize(base, w)

    def test_weights_validation(self):
        with pytest.raises(ValueError):
            ScalarWeights(0.5, 0.5, 0.5)
        with pytest.raises(ValueError):
            ScalarWeights(-0.2, 0.6, 0.6)
        with pytest.raises(ValueError):
            ScalarWeights(infeasibility_penalty=0.0)


class TestFeasibleBounds:
    @settings(max_examples=25)
    @given(seed=st.integers(0, 2**31))
    def test_feasible_utilization_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        p = random_problem(rng)
        s = Placement(tuple(int(v) for v in rng.integers(1, p.m + 1, p.n)))
        objs = evaluate(p, s)
        if objs.feasible:
            assert 0.0 <= objs.utilization <= 1.0
            assert 0.0 <= objs.load_balance <= 0.5
        assert 0.0 < objs.active_fraction <= 1.0
