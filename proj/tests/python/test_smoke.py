import json
from pathlib import Path

import numpy as np
import pytest

import complexity_atlas as ca

FIXTURE = Path(__file__).resolve().parents[2] / "data" / "fixture"


def staircase(n):
    return np.array([[1.0 if j < n - i else 0.0 for j in range(n)] for i in range(n)])


def test_rca_hand_value():
    out = ca.rca(np.array([[10.0, 0.0], [10.0, 10.0]]), ["A", "B"], ["p", "q"])
    assert out["countries"] == ["A", "B"]
    assert out["values"][0, 0] == pytest.approx(1.5, rel=1e-15)
    assert out["values"][1, 0] == pytest.approx(0.75, rel=1e-15)


def test_advantage_matches_threshold():
    x = np.random.default_rng(1).uniform(1.0, 100.0, size=(5, 7))
    r = ca.rca(x)["values"]
    m = ca.advantage(x)["values"]
    assert np.array_equal(m, (r >= 1.0).astype(float))


def test_eci_against_numpy_eigen():
    m = staircase(5)
    d = m.sum(axis=1)
    u = m.sum(axis=0)
    mt = (m / d[:, None]) @ (m / u).T
    w, v = np.linalg.eig(mt)
    k = np.real(v[:, np.argsort(-np.real(w))[1]])
    k = (k - k.mean()) / k.std()
    if np.dot(k, d - d.mean()) < 0:
        k = -k
    assert np.allclose(ca.eci(m), k, atol=1e-10)
    assert np.allclose(ca.eci(m, dense_limit=0), k, atol=1e-8)
    assert np.all(np.diff(ca.pci(m)) > 0)


def test_fitness():
    m = (np.random.default_rng(4).uniform(size=(30, 30)) < 0.4).astype(float)
    f = ca.fitness(m)
    assert f["converged"]
    assert f["fitness"].mean() == pytest.approx(1.0)
    # Perfect nesting drives the weakest fitness towards zero, so only the order is checked.
    nested = ca.fitness(staircase(4), max_iter=200)
    assert np.all(np.diff(nested["fitness"]) < 0)


def test_entropy_and_hhi():
    x = np.array([[1.0, 1.0, 1.0, 1.0], [5.0, 0.0, 0.0, 0.0]])
    assert ca.entropy(x)[0] == pytest.approx(np.log(4.0))
    assert ca.hhi(x)[1] == 1.0


def test_pgi_weighted_mean():
    m = np.array([[1.0, 0.0], [1.0, 1.0]])
    s = np.array([[1.0, 0.0], [0.5, 0.5]])
    g = np.array([0.3, 0.6])
    out = ca.pgi(m, s, g)
    assert out[0] == pytest.approx((1.0 * 0.3 + 0.5 * 0.6) / 1.5, abs=1e-15)
    assert out[1] == pytest.approx(0.6)
    assert np.isnan(ca.pgi(m, s, np.array([0.3, np.nan]))[1])


def test_proximity_symmetric():
    m = (np.random.default_rng(2).uniform(size=(8, 6)) < 0.5).astype(float)
    phi = ca.proximity(m)
    assert np.array_equal(phi, phi.T)
    assert np.all(np.diag(phi) == 0.0)


def test_ols_matches_lstsq():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(40, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + rng.normal(size=40)
    fit = ca.ols(x, y)
    ref, *_ = np.linalg.lstsq(np.column_stack([np.ones(40), x]), y, rcond=None)
    assert np.allclose(fit["coefficients"], ref, atol=1e-10)
    assert fit["names"][0] == "(Intercept)"


def test_clarke_all_wins():
    r = ca.clarke(np.full(10, -1.0), np.full(10, -2.0), 2, 2)
    assert r["b"] == 10
    assert r["p_value"] == pytest.approx(2.0 / 1024.0)
    assert r["preferred"] == "model1"
    assert ca.binomial_two_sided(5, 10) == 1.0


def test_errors_carry_codes():
    with pytest.raises(ca.AtlasError) as info:
        ca.rca(np.zeros((2, 2)))
    assert info.value.code == "empty_world_trade"
    with pytest.raises(ValueError):
        ca.eci(np.array([[0.5]]))


def test_snapshot_and_service(tmp_path):
    a = ca.build_snapshot(str(FIXTURE / "config.json"), str(tmp_path / "a"))
    b = ca.build_snapshot(str(FIXTURE / "config.json"), str(tmp_path / "b"))
    assert a["digest"] == b["digest"]
    svc = ca.Service(str(tmp_path / "a"))
    assert svc.digest == a["digest"]
    status, payload = ca.query(svc, "/rankings", period="1996-2001", metric="eci")
    assert status == 200
    assert [r["rank"] for r in payload["rankings"]] == list(range(1, 13))
    status, payload = ca.query(svc, "/country/ISL", period="1996-2001")
    assert status == 404
    assert payload["error"]["code"] == "unknown_country"
    status, body = svc.whatif(json.dumps({"country": "USA", "period": "2002-2008"}))
    assert status == 200
    assert json.loads(body)["delta"] == 0.0
