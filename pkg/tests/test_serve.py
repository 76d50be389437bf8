"""JSON API contracts over a small synthetic output directory."""
from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from geocon.cli import cmd_graph, cmd_ingest, cmd_train, cmd_vote
from geocon.config import load_config
from geocon.serve import create_app
from geocon.synth import generate_state, write_state


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("serve_demo")
    state = generate_state(counties=8, signal_set=3, beta=0.8, timesteps=100, seed=3)
    config_path = write_state(state, out, epochs=2, runs=4, hidden_dim=6)
    cfg = load_config(config_path)
    cmd_ingest(cfg, out)
    cmd_graph(cfg, out)
    cmd_train(cfg, out, jobs=1)
    cmd_vote(cfg, out)
    return out


@pytest.fixture(scope="session")
def client(demo_dir):
    return TestClient(create_app(demo_dir))


class TestStates:
    def test_listing(self, client):
        res = client.get("/api/states")
        assert res.status_code == 200
        (state,) = res.json()
        assert state["state"] == "SYN"
        assert state["counties"] == 8
        assert "hosp" in state["variables"]
        assert state["graphs"] == ["border", "socio"]
        assert state["votes"] == [{"factor": "aod", "kind": "border", "alpha": 0.1}]

    def test_empty_store_is_empty_list(self, tmp_path):
        empty = TestClient(create_app(tmp_path))
        res = empty.get("/api/states")
        assert res.status_code == 200 and res.json() == []

    def test_unknown_state_404(self, client):
        res = client.get("/api/states/ZZ/counties")
        assert res.status_code == 404
        assert res.json()["detail"]["error"] == "unknown_state"


class TestCounties:
    def test_metadata_and_summaries(self, client):
        rows = client.get("/api/states/SYN/counties").json()
        assert len(rows) == 8
        row = rows[0]
        assert set(row) >= {"fips", "name", "population", "summary"}
        assert row["population"] == 100_000
        assert "hosp" in row["summary"]


class TestNetwork:
    def test_border_graph(self, client):
        obj = client.get("/api/states/SYN/network?kind=border").json()
        assert obj["kind"] == "border"
        assert len(obj["nodes"]) == 8
        assert {len(e) for e in obj["edges"]} == {3}
        ranks = [c["rank"] for c in obj["centrality"]]
        assert ranks == sorted(ranks)

    def test_socio_threshold_monotone(self, client):
        small = client.get("/api/states/SYN/network?kind=socio&threshold=2.0").json()
        large = client.get("/api/states/SYN/network?kind=socio&threshold=4.5").json()
        edges_small = {tuple(e[:2]) for e in small["edges"]}
        edges_large = {tuple(e[:2]) for e in large["edges"]}
        assert edges_small <= edges_large

    def test_bad_kind_and_threshold(self, client):
        assert client.get("/api/states/SYN/network?kind=road").status_code == 400
        assert client.get("/api/states/SYN/network?kind=socio&threshold=-1").status_code == 400


class TestVariables:
    def test_binning_payload(self, client):
        obj = client.get("/api/states/SYN/variables/hosp?bins=4").json()
        assert len(obj["values"]) == 8
        assert sum(obj["counts"]) == 8
        assert len(obj["counts"]) == 4
        assert set(obj["assignment"]) == set(obj["values"])
        assert all(0 <= b < 4 for b in obj["assignment"].values())

    def test_unknown_variable_404_and_bad_bins_400(self, client):
        assert client.get("/api/states/SYN/variables/nope").status_code == 404
        assert client.get("/api/states/SYN/variables/hosp?bins=1").status_code == 400


class TestVotes:
    def test_vote_table_contract(self, client):
        obj = client.get("/api/states/SYN/votes?factor=aod&kind=border&alpha=0.1").json()
        assert obj["factor"] == "aod" and obj["graph_kind"] == "border"
        assert len(obj["counties"]) == 8
        county = obj["counties"][0]
        assert set(county) == {"fips", "votes", "models"}
        assert len(county["models"]) == 8
        assert county["votes"] == sum(m["significant"] for m in county["models"])
        agg = obj["aggregate"]
        assert agg["total"] == sum(c["votes"] for c in obj["counties"])
        assert sum(agg["histogram"].values()) == 8

    def test_unloaded_factor_404(self, client):
        res = client.get("/api/states/SYN/votes?factor=temp&kind=border&alpha=0.1")
        assert res.status_code == 404
        assert res.json()["detail"]["error"] == "votes_not_loaded"


class TestScatter:
    def test_trend_payload(self, client):
        obj = client.get("/api/states/SYN/scatter?x=hosp&y=aod").json()
        assert len(obj["points"]) == 8
        assert set(obj["trend"]) == {"slope", "intercept", "r", "degenerate", "n"}
        assert obj["trend"]["n"] == 8

    def test_unknown_axis_404(self, client):
        assert client.get("/api/states/SYN/scatter?x=hosp&y=zzz").status_code == 404


class TestReadOnly:
    def test_repeated_requests_byte_identical(self, client):
        for url in ("/api/states", "/api/states/SYN/counties",
                    "/api/states/SYN/network?kind=socio&threshold=3",
                    "/api/states/SYN/variables/hosp?bins=5",
                    "/api/states/SYN/votes?factor=aod&kind=border&alpha=0.1",
                    "/api/states/SYN/scatter?x=hosp&y=aod"):
            first = client.get(url)
            second = client.get(url)
            assert first.status_code == second.status_code == 200
            assert first.content == second.content

    def test_responses_schema_round_trip(self, client):
        # every endpoint body survives a parse/serialize cycle unchanged
        for url in ("/api/states", "/api/states/SYN/votes?factor=aod&kind=border&alpha=0.1"):
            body = client.get(url).content
            assert json.loads(body) == json.loads(json.dumps(json.loads(body)))
