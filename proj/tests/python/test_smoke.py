import json
import math

import numpy as np
import pytest

import wqfl


def two_users(epsilon=0.1):
    inputs = wqfl.RoundInputs()
    users = []
    for i, c in enumerate((20.0, 30.0)):
        u = wqfl.UserProfile()
        u.id = i
        u.cycles_per_bit = c
        u.weight = 0.5
        users.append(u)
    inputs.users = users
    inputs.gains = [10**-11.25, 10**-11.0]
    inputs.delta = [1.0, 1.0]
    inputs.epsilon = epsilon
    return inputs


def test_quantizer_round_trip_and_unbiased():
    x = np.linspace(-1.0, 2.0, 50)
    mean = np.zeros_like(x)
    draws = 2000
    for s in range(draws):
        mean += wqfl.dequantize(wqfl.quantize(x, 3, seed=s))
    mean /= draws
    step = (2.0 - 0.0) / 7
    assert np.max(np.abs(mean - x)) < 4 * step / (2 * math.sqrt(draws))
    q = wqfl.quantize(x, 3)
    assert q.payload_bits == wqfl.payload_bits(50, 3)
    with pytest.raises(ValueError):
        wqfl.quantize(x, 0)


def test_lambert_w():
    w = wqfl.lambert_w0(1.0)
    assert abs(w * math.exp(w) - 1.0) < 1e-15
    assert wqfl.lambert_w0(0.0) == 0.0


def test_round_solver_against_baselines():
    inputs = two_users()
    alloc, mult, kkt = wqfl.solve_round_continuous(inputs)
    assert alloc.feasible
    assert kkt < 1e-6
    assert abs(wqfl.tolerance_usage(alloc.bits, inputs) - inputs.epsilon) < 1e-9
    proposed = wqfl.solve_round(inputs)
    assert all(b == int(b) for b in proposed.bits)
    assert proposed.latency >= alloc.latency
    for base in (wqfl.baseline_fixed_bits(inputs), wqfl.baseline_equal_slots(inputs),
                 wqfl.baseline_equal_energy(inputs)):
        assert proposed.latency <= base.latency


def test_infeasible_status():
    inputs = two_users()
    users = inputs.users
    for u in users:
        u.e_max = 1e-9
    inputs.users = users
    assert wqfl.solve_round(inputs).status == wqfl.Status.infeasible


def test_bound():
    k = wqfl.BoundConstants()
    k.L, k.mu, k.gamma, k.tau, k.G2, k.Delta0 = 2.0, 1.0, 5.0, 2, 1.0, 1.0
    k.sigma2 = [0.5, 0.5]
    first, gap, total = wqfl.convergence_bound(10, k, lambda j, n: 0.0, [0.5, 0.5])
    assert gap == 0.0 and total == first
    _, gap1, _ = wqfl.convergence_bound(10, k, lambda j, n: 1e-3, [0.5, 0.5])
    _, gap2, _ = wqfl.convergence_bound(10, k, lambda j, n: 2e-3, [0.5, 0.5])
    assert gap2 == pytest.approx(2 * gap1, rel=1e-12)


def test_run_experiment_is_deterministic():
    cfg = json.dumps({"rounds": 2, "dataset": {"synthetic_train": 2500, "synthetic_test": 200}})
    a = wqfl.run_experiment(cfg)
    b = wqfl.run_experiment(cfg)
    assert not a["infeasible"] and not a["failed"]
    assert len(a["rounds"]) == 2
    assert a["rounds"][-1]["test_accuracy"] == b["rounds"][-1]["test_accuracy"]
    assert wqfl.metrics_csv(cfg).startswith("round,sim_time,round_latency")


def test_config_errors():
    with pytest.raises(wqfl.ConfigError):
        wqfl.run_experiment('{"no_such_key": 1}')
    with pytest.raises(wqfl.ConfigError):
        wqfl.run_experiment("{}", {"trainer.nope": "1"})
    assert json.loads(wqfl.default_config())["n_users"] == 10


def test_fixed_bits_resolve():
    inputs = two_users(0.1)
    a = wqfl.allocate_fixed_bits([3.0, 3.0], inputs)
    b = wqfl.allocate_fixed_bits([4.0, 4.0], inputs)
    assert a.feasible and b.feasible
    assert a.latency < b.latency
