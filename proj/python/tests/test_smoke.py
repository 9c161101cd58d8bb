import math

import numpy as np
import pytest

sisk = pytest.importorskip("sisk")


def test_graph_roundtrip(tmp_path):
    g = sisk.generate_random_regular(4, 3, seed=1)
    assert g.num_nodes == 4 and g.num_edges == 6
    path = tmp_path / "k4.txt"
    sisk.save_edge_list(g, path)
    h = sisk.load_edge_list(path)
    assert h.content_hash() == g.content_hash()
    assert sorted(h.neighbors(0)) == [1, 2, 3]


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        sisk.generate_random_regular(5, 3)
    with pytest.raises(sisk.InputError):
        sisk.solve_regular_scalar(2.0, 0.6, K=0)


def test_regular_scalar_closed_form():
    r = sisk.solve_regular_scalar(2.0, 0.6, K=1)
    assert r["converged"]
    assert abs(r["phi"][0] - 0.1) < 1e-8
    assert abs(r["rho"] - 0.3 / 1.3) < 1e-8


def test_pair_generator_rows_sum_to_zero():
    Q = sisk.pair_generator(2, 0.7, 1.1, [0.2, 0.3], [0.1, 0.4])
    assert Q.shape == (9, 9)
    assert np.allclose(Q.sum(axis=1), 0.0, atol=1e-14)
    p = sisk.pair_stationary(2, 0.7, 1.1, [0.2, 0.3], [0.1, 0.4])
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.allclose(p @ Q, 0.0, atol=1e-12)


def test_pair_solver_on_graph():
    g = sisk.generate_random_regular(500, 3, seed=2)
    s = sisk.solve_pair_k(g, 0.6, K=1)
    assert s["converged"]
    assert s["messages"].shape == (1500, 1)
    assert np.allclose(s["messages"], 0.1, atol=1e-8)
    assert abs(s["rho_mean"] - 0.3 / 1.3) < 1e-8


def test_thresholds():
    g = sisk.generate_random_regular(400, 3, seed=3)
    assert abs(sisk.threshold_mf(g)["beta_c"] - 1 / 3) < 1e-8
    assert abs(sisk.threshold_pair(g)["beta_c"] - 0.5) < 1e-8
    assert abs(sisk.threshold_pair_regular_k2(2)["beta_c"] - 0.5207) < 1e-4
    assert abs(sisk.threshold_bisect(2.0, K=1)["beta_c"] - 0.5) < 1e-3


def test_survival_is_exponential_for_k1():
    t = np.linspace(0, 10, 11)
    s = sisk.survival_function([0.37], 0.0, t)
    assert np.allclose(s, np.exp(-0.37 * t), atol=1e-12)
    assert math.isclose(sisk.mean_inter_infection_time([0.5], 0.0), 2.0)


def test_simulation_smoke():
    g = sisk.generate_random_regular(300, 3, seed=4)
    assert sisk.quasistationary(g, 0.0, t_max=10.0)["mean"] == 0.0
    run = sisk.simulate(g, 1.0, t_max=50.0, seed=2)
    assert run["t"][0] == 0.0 and run["rho"][0] == 1.0
    again = sisk.simulate(g, 1.0, t_max=50.0, seed=2)
    assert np.array_equal(run["rho"], again["rho"])
    qs = sisk.quasistationary(g, 1.0, t_max=200.0, replicas=2)
    assert 0.3 < qs["mean"] < 0.7 and qs["replicas"] == 2
    done, censored = sisk.inter_infection_times(g, 1.0, t_max=60.0, burn_in=10.0, sample_cap=5000)
    assert len(done) > 1000 and np.all(done > 0)
