"""HTTP surface: endpoint contracts, error codes, job lifecycle."""

import io
import time

import pytest
from fastapi.testclient import TestClient

from balancelab.example_data import generate_example_csv
from balancelab.service import create_app

SPEC_BODY = {
    "treatment_var": "treat",
    "control_label": "0",
    "treatment_label": "1",
    "outcome_var": "ada_6",
    "numeric_confounders": [
        "tss_0", "sfs8p_0", "eps7p_0", "ias5p_0", "dss9_0", "satl_0",
        "sp_sm_0", "gvs", "ers21_0", "ada_0", "recov_0"],
    "categorical_confounders": [
        {"name": "mhtrt_0_categorical", "reference": "0"},
        {"name": "subsgrps_n_categorical", "reference": "1"}],
    "estimand": "ATT",
}

FAST_ALGOS = ["LR", "CBPS1"]


@pytest.fixture()
def client():
    return TestClient(create_app())


def _upload(client, sid, n=80, seed=1, **form):
    raw = generate_example_csv(seed=seed, n_per_group=n)
    return client.post(
        f"/v1/sessions/{sid}/data",
        files={"file": ("demo.csv", io.BytesIO(raw), "text/csv")},
        data=form)


def _to_estimated(client, sid):
    _upload(client, sid)
    client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
    client.post(f"/v1/sessions/{sid}/weights",
                json={"algorithms": FAST_ALGOS})
    r = client.post(f"/v1/sessions/{sid}/estimate", json={"algorithm": "LR"})
    assert r.status_code == 200
    return r


class TestSessions:
    def test_create_and_info(self, client):
        r = client.post("/v1/sessions")
        assert r.status_code == 201
        body = r.json()
        sid = body["id"]
        assert body["stage"] == "EMPTY"
        info = client.get(f"/v1/sessions/{sid}").json()
        assert info["id"] == sid
        assert info["algorithms"] == []

    def test_unknown_session_404(self, client):
        r = client.get("/v1/sessions/doesnotexist")
        assert r.status_code == 404
        assert "no session" in r.json()["error"]


class TestUpload:
    def test_csv_upload_returns_preview(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        r = _upload(client, sid, preview_rows=3)
        assert r.status_code == 200
        body = r.json()
        assert body["n_rows"] == 160
        assert body["stage"] == "DATA_LOADED"
        assert len(body["head"]) == 3
        assert "treat" in body["columns"]
        assert "numeric" in body["summary"]

    def test_parse_options_forwarded(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        r = client.post(
            f"/v1/sessions/{sid}/data",
            files={"file": ("x.csv", io.BytesIO(b"a;b\n1;2\n3;4"), "text/csv")},
            data={"separator": "semicolon"})
        assert r.status_code == 200
        assert r.json()["columns"] == ["a", "b"]

    def test_ragged_csv_422(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        r = client.post(
            f"/v1/sessions/{sid}/data",
            files={"file": ("x.csv", io.BytesIO(b"a,b\n1,2\n3"), "text/csv")})
        assert r.status_code == 422

    def test_upload_cap_413(self, client, monkeypatch):
        monkeypatch.setenv("BALANCELAB_UPLOAD_CAP", "64")
        sid = client.post("/v1/sessions").json()["id"]
        big = b"a,b\n" + b"1,2\n" * 100
        r = client.post(
            f"/v1/sessions/{sid}/data",
            files={"file": ("x.csv", io.BytesIO(big), "text/csv")})
        assert r.status_code == 413
        assert "cap" in r.json()["error"]

    def test_example_endpoint(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        r = client.post(f"/v1/sessions/{sid}/data/example",
                        json={"seed": 2, "n_per_group": 60})
        assert r.status_code == 200
        assert r.json()["n_rows"] == 120


class TestSpec:
    def test_valid_spec_advances_stage(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        r = client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        assert r.status_code == 200
        body = r.json()
        assert body["stage"] == "SPEC_SET"
        assert "mhtrt_0_categorical.1" in body["design_columns"]
        assert body["n"] == 160
        assert "treatment_formula" in body or "weighting_model" in body or len(body) > 3

    def test_spec_before_data_409(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        r = client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        assert r.status_code == 409
        assert r.json()["required_stage"] == "DATA_LOADED"

    def test_bad_spec_lists_field_errors(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        bad = dict(SPEC_BODY, treatment_var="nope", estimand="ATZ")
        r = client.put(f"/v1/sessions/{sid}/spec", json=bad)
        assert r.status_code == 422
        body = r.json()
        assert body["error"] == "invalid analysis spec"
        fields = {e["field"] for e in body["errors"]}
        assert "treatment_var" in fields
        assert "estimand" in fields

    def test_malformed_categorical_entry_422(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        bad = dict(SPEC_BODY, categorical_confounders=["mhtrt_0_categorical"])
        r = client.put(f"/v1/sessions/{sid}/spec", json=bad)
        assert r.status_code == 422


class TestOverlapAndTrims:
    def test_overlap_view(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        r = client.get(f"/v1/sessions/{sid}/overlap")
        assert r.status_code == 200
        body = r.json()
        assert {"curves", "flags", "trim_rules", "groups", "n"} <= set(body)
        assert body["groups"]["treated"]["n"] == 80
        assert any(c["confounder"] == "ada_0" for c in body["curves"])

    def test_trims_drop_rows_and_report_removed(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        r = client.put(f"/v1/sessions/{sid}/trims", json={
            "rules": [{"confounder": "ada_0", "lower_cut": 5.0}]})
        assert r.status_code == 200
        body = r.json()
        assert body["removed_rows"] >= 0
        assert body["n"] + body["removed_rows"] == 160

    def test_trim_emptying_group_422(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        r = client.put(f"/v1/sessions/{sid}/trims", json={
            "rules": [{"confounder": "ada_0", "lower_cut": 1e9}]})
        assert r.status_code == 422


class TestWeightsAndBalance:
    def test_weights_report_per_algorithm(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        r = client.post(f"/v1/sessions/{sid}/weights",
                        json={"algorithms": FAST_ALGOS})
        assert r.status_code == 200
        body = r.json()
        assert body["stage"] == "WEIGHTED"
        assert set(body["algorithms"]) <= set(FAST_ALGOS)
        lr = body["algorithms"]["LR"]
        assert isinstance(lr["converged"], bool)
        assert lr["ess_control"] > 0
        assert lr["chosen_gbm_trees"] is None

    def test_balance_table(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        client.post(f"/v1/sessions/{sid}/weights",
                    json={"algorithms": FAST_ALGOS})
        r = client.get(f"/v1/sessions/{sid}/balance")
        assert r.status_code == 200
        body = r.json()
        assert "Unweighted" in body["columns"]
        assert body["recommended"] in FAST_ALGOS
        assert body["ess"]
        for entry in body["ess"].values():
            assert "percent_rendered" in entry
            assert entry["total"] > 0

    def test_balance_before_weights_409(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        r = client.get(f"/v1/sessions/{sid}/balance")
        assert r.status_code == 409
        assert r.json()["required_stage"] == "WEIGHTED"


class TestEstimate:
    def test_estimate_rows_and_effect(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        r = _to_estimated(client, sid)
        body = r.json()
        assert body["stage"] == "ESTIMATED"
        assert body["algorithm_used"] == "LR"
        assert body["estimand"] == "ATT"
        terms = [row["term"] for row in body["rows"]]
        assert terms[0] == "(Intercept)"
        assert terms[1] == "treat"
        treat_row = body["rows"][1]
        assert treat_row["estimate"] == body["effect"]
        assert 0.0 <= treat_row["p"] <= 1.0

    def test_unknown_algorithm_422(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        client.post(f"/v1/sessions/{sid}/weights",
                    json={"algorithms": FAST_ALGOS})
        r = client.post(f"/v1/sessions/{sid}/estimate",
                        json={"algorithm": "GBM_ES"})
        assert r.status_code == 422


class TestSensitivityJob:
    GRID = {"es_axis": [-0.2, 0.0, 0.2], "rho_axis": [0.0, 0.3],
            "draws": 2, "seed": 7}

    def _poll_done(self, client, sid, timeout=60.0):
        t0 = time.time()
        while time.time() - t0 < timeout:
            r = client.get(f"/v1/sessions/{sid}/sensitivity")
            body = r.json()
            if body.get("status") != "running":
                return r
            time.sleep(0.05)
        raise TimeoutError("sensitivity job did not finish")

    def test_lifecycle_accepted_then_done(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        r = client.post(f"/v1/sessions/{sid}/sensitivity", json=self.GRID)
        assert r.status_code == 202
        assert r.json()["cells"] == 6
        final = self._poll_done(client, sid)
        assert final.status_code == 200
        body = final.json()
        assert body["status"] == "done"
        assert body["stage"] == "SENSITIVITY_DONE"
        assert len(body["effect_surface"]) == 2
        assert len(body["effect_surface"][0]) == 3
        assert body["baseline"]["effect"] is not None
        assert body["observed_points"]
        # contour levels are chosen server-side; clients only draw them
        finite = [v for row in body["effect_surface"] for v in row
                  if v is not None]
        assert body["effect_levels"] == sorted(set(body["effect_levels"]))
        assert all(min(finite) <= lv <= max(finite)
                   for lv in body["effect_levels"])
        assert body["p_levels"] == [0.05, 0.01]

    def test_requires_estimate_first(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        client.put(f"/v1/sessions/{sid}/spec", json=SPEC_BODY)
        r = client.post(f"/v1/sessions/{sid}/sensitivity", json=self.GRID)
        assert r.status_code == 409

    def test_poll_before_run_409(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        r = client.get(f"/v1/sessions/{sid}/sensitivity")
        assert r.status_code == 409

    def test_cancel(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        big = {"es_axis": [round(-0.6 + i * 0.1, 2) for i in range(13)],
               "rho_axis": [round(i * 0.05, 2) for i in range(13)],
               "draws": 20, "seed": 0}
        client.post(f"/v1/sessions/{sid}/sensitivity", json=big)
        r = client.delete(f"/v1/sessions/{sid}/sensitivity")
        assert r.status_code == 200
        assert r.json()["status"] in ("cancelled", "done")
        r2 = client.delete(f"/v1/sessions/{sid}/sensitivity")
        assert r2.json()["status"] == "idle"

    def test_mutation_while_running_409(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        big = {"es_axis": [round(-0.6 + i * 0.1, 2) for i in range(13)],
               "rho_axis": [round(i * 0.05, 2) for i in range(13)],
               "draws": 20, "seed": 0}
        client.post(f"/v1/sessions/{sid}/sensitivity", json=big)
        try:
            r = client.post(f"/v1/sessions/{sid}/estimate",
                            json={"algorithm": "LR"})
            assert r.status_code == 409
        finally:
            client.delete(f"/v1/sessions/{sid}/sensitivity")


class TestReportAndExport:
    def test_report_is_html(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        r = client.get(f"/v1/sessions/{sid}/report")
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("text/html")
        assert "<html" in r.text.lower() or "<h1" in r.text.lower()

    def test_export_headers_and_content(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        r = client.get(f"/v1/sessions/{sid}/export")
        assert r.status_code == 200
        assert r.headers["content-disposition"] == \
            "attachment; filename=data_and_weights.csv"
        header = r.text.splitlines()[0]
        assert header.split(",")[:2] == ["treat", "tss_0"]
        assert "LR" in header.split(",")

    def test_export_tsv(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        r = client.get(f"/v1/sessions/{sid}/export", params={"format": "tsv"})
        assert r.headers["content-disposition"].endswith(".tsv")
        assert "\t" in r.text.splitlines()[0]

    def test_export_bad_format_422(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _to_estimated(client, sid)
        r = client.get(f"/v1/sessions/{sid}/export", params={"format": "xlsx"})
        assert r.status_code == 422
        assert "xlsx" in r.json()["error"]

    def test_export_before_weights_409(self, client):
        sid = client.post("/v1/sessions").json()["id"]
        _upload(client, sid)
        r = client.get(f"/v1/sessions/{sid}/export")
        assert r.status_code == 409
