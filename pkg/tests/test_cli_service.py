import csv
import json
import threading
import urllib.error
import urllib.request

import pytest

from animtx import api, cli
from animtx.fixtures import REFERENCE_FIXTURES, fixture_docs, fixture_text
from animtx.service import dispatch_post, make_server

from conftest import bar_doc


@pytest.fixture
def zoom_files(tmp_path):
    out = {}
    for part in ("start", "end", "transition"):
        p = tmp_path / f"{part}.json"
        p.write_text(fixture_text("zoom_lines", part), encoding="utf-8")
        out[part] = str(p)
    return out


@pytest.fixture(scope="module")
def server():
    httpd = make_server("127.0.0.1", 0)
    t = threading.Thread(target=httpd.serve_forever, daemon=True)
    t.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}"
    httpd.shutdown()
    httpd.server_close()


def _request(url, body=None, raw=None):
    data = raw if raw is not None else (None if body is None else json.dumps(body).encode())
    req = urllib.request.Request(url, data=data, method="GET" if data is None else "POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


def _zoom_body():
    d = fixture_docs("zoom_lines")
    return {"start": d["start"], "end": d["end"], "transition": d["transition"]}


# ---------------------------------------------------------------- cli

def test_cli_compile_ok(zoom_files, tmp_path, capsys):
    out = tmp_path / "plan.json"
    assert cli.main(["compile", zoom_files["start"], zoom_files["end"], zoom_files["transition"],
                     "--out", str(out)]) == 0
    assert json.loads(out.read_text())["totalDurationMs"] == 2000


def test_cli_validate_ok(zoom_files, capsys):
    assert cli.main(["validate", zoom_files["start"], zoom_files["end"],
                     zoom_files["transition"]]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_cli_missing_file_exits_1(zoom_files, tmp_path):
    assert cli.main(["compile", str(tmp_path / "nope.json"), zoom_files["end"],
                     zoom_files["transition"]]) == 1


def test_cli_invalid_spec_exits_2(zoom_files, tmp_path, capsys):
    t = fixture_docs("zoom_lines")["transition"]
    t["timeline"]["concat"][2]["component"] = {"mark": "ghost"}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(t))
    assert cli.main(["validate", zoom_files["start"], zoom_files["end"], str(bad)]) == 2
    assert cli.main(["compile", zoom_files["start"], zoom_files["end"], str(bad)]) == 2
    assert "unknown-component" in capsys.readouterr().err


def test_cli_malformed_json_exits_2(zoom_files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["compile", str(bad), zoom_files["end"], zoom_files["transition"]]) == 2


def test_cli_empty_recommendation_exits_3(tmp_path):
    d0, d1 = bar_doc([80, 90], 100), bar_doc([150, 160], 200, ymin=120)
    for d in (d0, d1):
        d["axes"] = []
    paths = []
    for i, d in enumerate((d0, d1)):
        p = tmp_path / f"c{i}.json"
        p.write_text(json.dumps(d))
        paths.append(str(p))
    assert cli.main(["recommend", *paths, "--stages", "2"]) == 3


def test_cli_recommend_writes_report(zoom_files, tmp_path, capsys):
    out = tmp_path / "report"
    assert cli.main(["recommend", zoom_files["start"], zoom_files["end"], "--top", "3",
                     "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "N=2: raw" in text and "#1 N=1" in text
    png = (out / "scores.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    rows = list(csv.DictReader((out / "candidates.csv").open()))
    assert len(rows) == 3 and [r["rank"] for r in rows] == ["1", "2", "3"]
    counts = list(csv.DictReader((out / "counts.csv").open()))
    totals = [r for r in counts if r["component"] == "*"]
    assert [r["stages"] for r in totals] == ["1", "2", "3"]
    assert [r["raw"] for r in totals if r["stages"] == "2"] == ["12"]
    assert sorted(p.name for p in out.glob("candidate-*.json")) == \
        ["candidate-01.json", "candidate-02.json", "candidate-03.json"]


def test_cli_recommend_bad_stage_count_exits_2(zoom_files):
    assert cli.main(["recommend", zoom_files["start"], zoom_files["end"], "--stages", "5"]) == 2


def test_cli_examples_and_conformance(tmp_path, capsys):
    assert cli.main(["examples"]) == 0
    assert "zoom_lines" in capsys.readouterr().out
    assert cli.main(["examples", "bar_rescale", "--out", str(tmp_path / "ex")]) == 0
    assert (tmp_path / "ex" / "transition.json").is_file()
    assert cli.main(["examples", "nope"]) == 2
    assert cli.main(["conformance", "--out", str(tmp_path / "v.json")]) == 0
    assert json.loads((tmp_path / "v.json").read_text())["schema"] == "animtx.conformance/1"


def test_cli_and_service_compile_identical_bytes(zoom_files, tmp_path, server):
    out = tmp_path / "plan.json"
    cli.main(["compile", zoom_files["start"], zoom_files["end"], zoom_files["transition"],
              "--out", str(out)])
    status, body = _request(server + "/compile", _zoom_body())
    assert status == 200 and body == out.read_bytes()


# ---------------------------------------------------------------- service

def test_http_compile_ok(server):
    status, body = _request(server + "/compile", _zoom_body())
    assert status == 200
    assert json.loads(body)["schema"] == "animtx.plan/1"


def test_http_compile_invalid_spec_is_400(server):
    b = _zoom_body()
    b["transition"]["timeline"]["concat"][2]["component"] = {"mark": "ghost"}
    status, body = _request(server + "/compile", b)
    assert status == 400
    assert [d["code"] for d in json.loads(body)["diagnostics"]] == ["unknown-component"]


def test_http_malformed_json_is_400(server):
    status, body = _request(server + "/compile", raw=b"{oops")
    assert status == 400 and json.loads(body)["diagnostics"][0]["code"] == "malformed-json"


def test_http_missing_field_is_400(server):
    status, body = _request(server + "/compile", {"start": {}})
    assert status == 400
    assert {d["code"] for d in json.loads(body)["diagnostics"]} == {"missing-field"}


def test_http_recommend_ok(server):
    d = fixture_docs("bar_rescale")
    status, body = _request(server + "/recommend", {"start": d["start"], "end": d["end"], "top": 2})
    doc = json.loads(body)
    assert status == 200 and len(doc["candidates"]) == 2
    assert doc["candidates"][0]["rank"] == 1


def test_http_recommend_empty_is_422(server):
    d0, d1 = bar_doc([80, 90], 100), bar_doc([150, 160], 200, ymin=120)
    for d in (d0, d1):
        d["axes"] = []
    status, _ = _request(server + "/recommend", {"start": d0, "end": d1, "stages": [2]})
    assert status == 422


def test_http_examples(server):
    status, body = _request(server + "/examples")
    names = [e["name"] for e in json.loads(body)["examples"]]
    assert status == 200 and names == list(REFERENCE_FIXTURES)


def test_http_unknown_path_is_404(server):
    assert _request(server + "/nope")[0] == 404
    assert _request(server + "/nope", {})[0] == 404


def test_internal_error_reports_incident(monkeypatch, server):
    def boom(*a, **k):
        raise RuntimeError("secret detail")
    monkeypatch.setattr(api, "compile_docs", boom)
    status, body = _request(server + "/compile", _zoom_body())
    doc = json.loads(body)
    assert status == 500 and "secret" not in body.decode()
    assert len(doc["incident"]) == 36


def test_dispatch_rejects_non_object_body():
    status, doc = dispatch_post("/recommend", b"[1, 2]")
    assert status == 400 and doc["diagnostics"][0]["code"] == "malformed-body"


def test_static_files_are_optional(tmp_path):
    (tmp_path / "index.html").write_text("<p>player</p>")
    httpd = make_server("127.0.0.1", 0, tmp_path)
    t = threading.Thread(target=httpd.serve_forever, daemon=True)
    t.start()
    try:
        url = f"http://127.0.0.1:{httpd.server_address[1]}"
        assert _request(url + "/") == (200, b"<p>player</p>")
        assert _request(url + "/../../etc/passwd")[0] == 404
    finally:
        httpd.shutdown()
        httpd.server_close()
