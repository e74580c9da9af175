import json
import math
from fractions import Fraction

import numpy as np
import pytest

from gamedyn.analysis import (
    RunTarget,
    claim_integrals,
    classify_run,
    cycle_proximity,
    distance_to_shapley,
    elimination_check,
    record_episodes,
    running_integral,
    summarize,
    time_average_sweep,
    write_reports,
)
from gamedyn.best_reply import integrate_br, shapley_triangle
from gamedyn.game import RPSSpec, SymmetricGame, build_game_77, build_rps, face_barycenter, vertex
from gamedyn.replicator import integrate_rep

F = Fraction
START66 = tuple(F(v, 70) for v in (3, 7, 11, 13, 17, 19))
TARGET66 = RunTarget((3, 4, 5), "shapley", (0, 1, 2))


def test_distance_to_shapley(g66):
    geom = shapley_triangle(None, (3, 4, 5), g66)
    for v in geom.vertices:
        assert distance_to_shapley(g66, geom, v) == 0
    assert distance_to_shapley(g66, geom, face_barycenter(6, (3, 4, 5))) == F(4, 3)
    assert distance_to_shapley(g66, geom, vertex(6, 0)) == 1
    # float flavour agrees
    v = np.array([float(a) for a in geom.vertices[0]])
    assert distance_to_shapley(g66, geom, v) < 1e-15


def test_distance_decays_along_run(g66):
    geom = shapley_triangle(None, (3, 4, 5), g66)
    sol = integrate_br(g66, START66, 40.0)
    segs = sol.segments[-12:-1]
    d = [float(distance_to_shapley(g66, geom, s.start_state)) for s in segs]
    for s0, s1, d0, d1 in zip(segs, segs[1:], d, d[1:]):
        assert d1 / d0 == pytest.approx(math.exp(-(s1.t_start - s0.t_start)), rel=1e-6)


def test_cycle_proximity():
    f = (4, 5, 6)
    assert cycle_proximity(vertex(7, 4), f) == 0
    assert cycle_proximity(face_barycenter(7, f), f) == pytest.approx(1 / 3)
    assert cycle_proximity((0, 0, 0, 0, F(1, 2), F(1, 2), 0), f) == 0
    assert cycle_proximity(vertex(7, 0), f) == 1
    with pytest.raises(ValueError):
        cycle_proximity(vertex(7, 0), (4, 5))


def test_elimination_check_br(g66):
    sol = integrate_br(g66, START66, 60.0)
    assert elimination_check(sol, (0, 1, 2), 1e-12, 20.0)
    assert not elimination_check(sol, (3,), 1e-12, 20.0)
    with pytest.raises(ValueError):
        elimination_check(sol, (0,), 1e-12, 100.0)


def test_elimination_check_constant_rep():
    g = build_game_77(F(1, 50))
    tr = integrate_rep(g, np.array([1 / 3] * 3 + [0] * 4), 50.0, allow_faces=True)
    assert not elimination_check(tr, (0, 1, 2), 1e-3, 20.0)
    assert elimination_check(tr, (3,), 1e-3, 20.0)


def test_claim_integrals_constant():
    g = build_game_77(F(1, 50))
    tr = integrate_rep(g, np.array([1 / 3] * 3 + [0] * 4), 30.0, allow_faces=True)
    c = claim_integrals(tr, [0.0, 10.0, 30.0])
    assert np.allclose(c["I"], [0.0, -50 / 3, -50.0])
    assert np.allclose(c["tau_bar"], [0.0, 10.0, 30.0]) and np.allclose(c["tau_hat"], 0.0)


def test_claim_integrals_rates(g77, rng):
    tr = integrate_rep(g77, rng.dirichlet(np.ones(7)), 20.0, rtol=1e-12, atol=1e-13)
    h = 1e-4
    ts = np.array([5.0 - h, 5.0, 5.0 + h])
    c = claim_integrals(tr, ts)
    fd_mu = (c["ln_mu_over_lambda"][2] - c["ln_mu_over_lambda"][0]) / (2 * h)
    fd_x4 = (c["ln_x4_over_lambda"][2] - c["ln_x4_over_lambda"][0]) / (2 * h)
    assert fd_mu == pytest.approx(c["rate_mu_lambda_closed"][1], rel=1e-4)
    assert fd_x4 == pytest.approx(c["rate_x4_lambda_closed"][1], rel=1e-4)
    with pytest.raises(ValueError):
        claim_integrals(integrate_rep(build_rps(RPSSpec.cyclic(3, 1)), np.ones(3) / 3, 1.0))


def test_running_max_grows_in_rescaled_rps():
    g = build_rps(RPSSpec.epsilon(F(1, 5)))
    tr = integrate_rep(g, np.array([0.5, 0.3, 0.2]), 3000.0)
    ts = np.linspace(0, 3000, 3001)
    I = running_integral(tr, [0, 0, 4], -3.0, ts)
    assert I.max() > I[ts <= 600].max() + 100
    assert record_episodes(I, ts)


def test_record_episodes():
    v = np.array([0, 1, 2, 1, 0, 3, 4, 2, 5])
    t = np.arange(len(v), dtype=float)
    assert record_episodes(v, t) == [1.0, 5.0, 8.0]


def test_time_average_sweep():
    g = SymmetricGame.from_rows([[0] * 3] * 3)
    tr = integrate_rep(g, np.array([0.2, 0.3, 0.5]), 5.0)
    assert time_average_sweep(tr, (0.2, 0.3, 0.5), [0, 1, 5]) < 1e-12


def test_classify_br66(g66, tmp_path):
    sol = integrate_br(g66, START66, 60.0)
    rep = classify_run(g66, sol, TARGET66, {"seed": 1})
    assert rep.verdict == "converged_to_ST" and rep.label == "converged_to_ST(ST456)"
    assert rep.eliminated == (0, 1, 2)
    assert rep.metrics["event_vertex_distance"] < 1e-8
    assert rep.metadata["geometric_tol"] == 1e-8 and rep.metadata["seed"] == 1
    again = classify_run(g66, sol, TARGET66, {"seed": 1})
    assert again.to_json() == rep.to_json()
    write_reports(tmp_path / "r.jsonl", [rep, again])
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    assert len(lines) == 2 and json.loads(lines[0])["label"] == rep.label
    assert summarize([rep, again]) == {"converged_to_ST(ST456)": 2}


def test_classify_short_br_is_inconclusive(g66):
    sol = integrate_br(g66, START66, 2.0)
    assert classify_run(g66, sol, TARGET66).verdict == "inconclusive"


def test_classify_rep77():
    g = build_game_77(F(1, 50))
    x0 = np.array([0.01, 0.02, 0.03, 0.01, 0.5, 0.3, 0.13])
    tr = integrate_rep(g, x0, 600.0)
    target = RunTarget((4, 5, 6), "cycle", (0, 1, 2, 3), elimination_threshold=1e-3, window=200.0)
    rep = classify_run(g, tr, target)
    assert rep.label == "converged_to_cycle(Gamma567)"
    assert rep.metrics["final_lambda"] < 1e-3 and rep.metrics["final_x4"] < 1e-3


def test_classify_equilibrium_target():
    g = build_rps(RPSSpec.cyclic(1, 3))
    sol = integrate_br(g, (F(1, 2), F(1, 4), F(1, 4)), 50.0)
    assert classify_run(g, sol, RunTarget((0, 1, 2), "equilibrium")).verdict == "converged_to_equilibrium"


def test_classify_rejects_other_types(g66):
    with pytest.raises(TypeError):
        classify_run(g66, object(), TARGET66)
