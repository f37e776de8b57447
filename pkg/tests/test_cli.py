"""Command line: subcommands, exit codes, API output parity."""

import json

import pytest
from fastapi.testclient import TestClient

from deptex import cli
from deptex.graph import NodeKind
from deptex.service.api import create_app
from deptex.store import ApplicationStore

from test_store import feed_for, gate_sboms, seed_org, slice_for


@pytest.fixture
def store_path(tmp_path):
    store = ApplicationStore(path=tmp_path / "store.json", background_dispatch=False)
    seed_org(store)
    store.persist()
    return tmp_path / "store.json"


def run_cli(args, store_path):
    return cli.main(["--store", str(store_path)] + args)


def test_ingest_vulns_and_slice(store_path, tmp_path, capsys):
    feed_file = tmp_path / "feed.json"
    feed_file.write_text(feed_for())
    assert run_cli(["ingest", "vulns", str(feed_file)], store_path) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["signals"][0]["external_id"] == "OSV-1"

    slice_file = tmp_path / "slice.json"
    slice_file.write_text(slice_for("OSV-1", "asset-1"))
    assert run_cli(["ingest", "slice", str(slice_file)], store_path) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["result"]["depscore"] == 98

    # both ingests persisted
    reloaded = ApplicationStore.load(store_path)
    assert len(reloaded.depscores) == 1


def test_ingest_sbom(store_path, tmp_path, capsys):
    doc = {
        "bomFormat": "CycloneDX",
        "specVersion": "1.5",
        "components": [{"purl": "pkg:pypi/newdep@2.0.0", "name": "newdep"}],
    }
    sbom_file = tmp_path / "sbom.json"
    sbom_file.write_text(json.dumps(doc))
    assert run_cli(["ingest", "sbom", "--asset", "asset-1", str(sbom_file)], store_path) == 0
    assert json.loads(capsys.readouterr().out)["added"] == 1


def test_ingest_error_exit_code(store_path, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    assert run_cli(["ingest", "vulns", str(bad)], store_path) == 2
    err = capsys.readouterr().err
    assert "malformed_document" in err


def test_score_matches_api_bytes(store_path, tmp_path, capsys):
    feed_file = tmp_path / "feed.json"
    feed_file.write_text(feed_for())
    run_cli(["ingest", "vulns", str(feed_file)], store_path)
    capsys.readouterr()

    assert run_cli(["score", "--org", "org-1"], store_path) == 0
    cli_json = capsys.readouterr().out
    assert run_cli(["score", "--org", "org-1", "--format", "csv"], store_path) == 0
    cli_csv = capsys.readouterr().out

    client = TestClient(create_app(ApplicationStore.load(store_path)))
    api_json = client.get("/api/v1/orgs/org-1/leaderboard")
    api_csv = client.get("/api/v1/orgs/org-1/leaderboard?format=csv")
    assert cli_json == api_json.text
    assert cli_csv == api_csv.text


def test_score_override_matches_api(store_path, tmp_path, capsys):
    store = ApplicationStore.load(store_path)
    store.graph.set_asset_tier("asset-1", "tier-1")
    store.ingest_feed(feed_for(), actor="test")
    store.persist()

    args = ["score", "--org", "org-1", "--override-tier", "asset-1:none"]
    assert run_cli(args, store_path) == 0
    cli_out = capsys.readouterr().out
    client = TestClient(create_app(ApplicationStore.load(store_path)))
    api_out = client.get("/api/v1/orgs/org-1/leaderboard?override_tier=asset-1:none")
    assert cli_out == api_out.text


def test_score_unknown_org_exits_2(store_path, capsys):
    assert run_cli(["score", "--org", "org-404"], store_path) == 2
    assert "not_found" in capsys.readouterr().err


def test_gate_exit_codes(store_path, tmp_path, capsys):
    base, head = gate_sboms()
    base_file = tmp_path / "base.json"
    head_file = tmp_path / "head.json"
    base_file.write_text(base)
    head_file.write_text(head)

    args = ["gate", "--asset", "asset-1", "--base", str(base_file), "--head", str(head_file)]
    assert run_cli(args, store_path) == 0  # no policies yet: allow
    assert json.loads(capsys.readouterr().out)["decision"] == "allow"

    store = ApplicationStore.load(store_path)
    store.create_policy(
        {
            "policy_id": "pr-lic",
            "context": "pr",
            "source": 'if "GPL-3.0" in delta.added_licenses { block("no copyleft"); } allow;',
        },
        "t",
    )
    store.persist()
    assert run_cli(args, store_path) == 1
    assert json.loads(capsys.readouterr().out)["comment"] == "no copyleft"


def test_gate_missing_verdict_blocks_with_exit_1(store_path, tmp_path, capsys):
    store = ApplicationStore.load(store_path)
    store.create_policy(
        {"policy_id": "pr-silent", "context": "pr", "source": "let x = 1;"}, "t"
    )
    store.persist()
    base, head = gate_sboms()
    base_file = tmp_path / "base.json"
    head_file = tmp_path / "head.json"
    base_file.write_text(base)
    head_file.write_text(head)
    args = ["gate", "--asset", "asset-1", "--base", str(base_file), "--head", str(head_file)]
    assert run_cli(args, store_path) == 1
    captured = capsys.readouterr()
    assert json.loads(captured.out)["decision"] == "block"
    assert "missing_verdict" in captured.err


def test_policy_test_command(store_path, tmp_path, capsys):
    script = tmp_path / "check.dpx"
    script.write_text(
        "#context: pr\n"
        'if "GPL-3.0" in delta.added_licenses { block("no copyleft"); }\n'
        "allow;\n"
    )
    binding = tmp_path / "binding.json"
    binding.write_text(json.dumps({"delta": {"added_licenses": ["GPL-3.0"]}}))
    args = ["policy", "test", "--binding", str(binding), str(script)]
    assert run_cli(args, store_path) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["outcome"]["decision"] == "block"
    assert out["trace"]  # dry runs always carry the trace


def test_policy_test_syntax_error(store_path, tmp_path, capsys):
    script = tmp_path / "bad.dpx"
    script.write_text("#context: pr\nlet x = ;\n")
    binding = tmp_path / "binding.json"
    binding.write_text("{}")
    args = ["policy", "test", "--binding", str(binding), str(script)]
    assert run_cli(args, store_path) == 2
    assert "syntax_error" in capsys.readouterr().err


def test_alpha_env_changes_scoring(store_path, tmp_path, capsys, monkeypatch):
    feed_file = tmp_path / "feed.json"
    feed_file.write_text(feed_for())
    run_cli(["ingest", "vulns", str(feed_file)], store_path)
    slice_file = tmp_path / "slice.json"
    slice_file.write_text(slice_for("OSV-1", "asset-1", depth=2))
    monkeypatch.setenv("DEPTEX_ALPHA", "0.5")
    run_cli(["ingest", "slice", str(slice_file)], store_path)
    reloaded = ApplicationStore.load(store_path)
    (key,) = reloaded.depscores
    assert reloaded.depscores[key]["epd"] == pytest.approx(0.25)


def test_alpha_env_rejects_garbage(store_path, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DEPTEX_ALPHA", "fast")
    feed_file = tmp_path / "feed.json"
    feed_file.write_text(feed_for())
    assert run_cli(["ingest", "vulns", str(feed_file)], store_path) == 2


def test_serve_wires_uvicorn(store_path, monkeypatch):
    seen = {}

    def fake_run(app, host, port, log_level):
        seen["host"] = host
        seen["port"] = port
        seen["app"] = app

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", fake_run)
    assert run_cli(["serve", "--listen", "0.0.0.0:9001"], store_path) == 0
    assert seen["host"] == "0.0.0.0"
    assert seen["port"] == 9001
    # the wired app answers for the same store
    client = TestClient(seen["app"])
    assert client.get("/api/v1/health").json()["status"] == "ok"


def test_serve_rejects_bad_listen(store_path):
    assert run_cli(["serve", "--listen", "nope"], store_path) == 2


def test_store_created_on_first_ingest(tmp_path, capsys):
    path = tmp_path / "fresh.json"
    feed_file = tmp_path / "feed.json"
    feed_file.write_text(feed_for())
    assert cli.main(["--store", str(path), "ingest", "vulns", str(feed_file)]) == 0
    assert path.exists()
    out = json.loads(capsys.readouterr().out)
    assert out["signals"] == []  # nothing matches an empty graph
