import math
import os
import pathlib

import pytest

import dspl

PROGRAMS = pathlib.Path(os.environ.get("DSPL_PROGRAMS_DIR", pathlib.Path(__file__).parents[2] / "programs"))

WEATHER = """
humid(Data) ~ bernoulli(0.4).
temp(Data) ~ normal(5, 10).
good_weather(Data) :- humid(Data) =:= 1, temp(Data) < 0.
good_weather(Data) :- humid(Data) =:= 0, temp(Data) > 15.
query(good_weather(d)).
"""


def phi(z):
    return 0.5 * math.erfc(-z / math.sqrt(2))


def test_exact_query():
    m = dspl.Model.load(str(PROGRAMS / "burglary-classic.dspl"))
    r = dspl.query(m)
    assert r["exact"]
    assert r["estimate"] == pytest.approx((1 - 0.93 * 0.73) * 0.9, abs=1e-14)


def test_sampled_query_matches_closed_form():
    m = dspl.Model.from_source(WEATHER)
    assert m.queries == ["good_weather(d)"]
    r = dspl.query(m, n_samples=100000, seed=3)
    truth = 0.4 * phi(-0.5) + 0.6 * (1 - phi(1.0))
    assert abs(r["estimate"] - truth) <= 4 * r["std_error"]
    value, err, exact = dspl.reference_probability(m)
    assert not exact
    assert abs(value - truth) <= 1e-7


def test_errors_carry_codes():
    with pytest.raises(dspl.DsplError) as info:
        dspl.Model.from_source("q :- p")
    assert info.value.code == "SyntaxError"
    assert (info.value.line, info.value.column) == (1, 7)


def test_gradients_and_training():
    m = dspl.Model.from_source("x ~ normal(t(mu), 1).\nq :- x > 0.\nquery(q).")
    store = m.init_parameters()
    est, grads = dspl.gradients(m, "q", store, n_samples=100000, beta=100)
    assert est == pytest.approx(0.5, abs=0.02)
    assert grads["mu"][0] == pytest.approx(1 / math.sqrt(2 * math.pi), abs=0.02)
    report = dspl.train(m, [{"query": "q", "target": 1}] * 20, store, epochs=3, lr=0.1, optimizer="adam", batch=2)
    assert report["steps"] == 30
    assert store.values("mu")[0] > 0.5
    again = dspl.ParameterStore.from_json(store.to_json())
    assert again.values("mu") == store.values("mu")


def test_cli_in_process():
    code, out, _ = dspl.run_cli("query", PROGRAMS / "weather.dspl", "--json", "--seed", "5", "--samples", "1000")
    assert code == 0
    assert '"results"' in out
    code, _, err = dspl.run_cli("query", "/nonexistent.dspl")
    assert code == 1
    assert "IoError" in err
