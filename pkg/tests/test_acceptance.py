"""Acceptance gate: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
Each criterion re-derives its expectations from scratch (exact rationals,
raw snapshot walks, recording stubs) rather than trusting library output.
"""

import functools
import json
import random
import time
from fractions import Fraction

import pytest
from fastapi.testclient import TestClient

from deptex.graph import EdgeKind, NodeKind, OrgGraph, TierDef
from deptex.errors import CorruptSnapshotError, MissingVerdictError
from deptex.policy import PolicyScript, SandboxBudget, dry_run, evaluate
from deptex.policy.engine import parse_policy_file
from deptex.reachability import EpdParams, VerifierVerdict, compute_epd
from deptex.risk import AggMode, ContribInputs, contrib, org_risk, unit_risk
from deptex.service.api import create_app
from deptex.service.dispatch import Dispatcher
from deptex.store import ApplicationStore

from test_corpus import SCRIPTS, budget_from, load_case, transport_from
from test_policy import generate_script
from test_store import RecordingTransport


def criterion(number, label):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n[criterion {number}] {label}: FAIL")
                raise
            print(f"\n[criterion {number}] {label}: PASS")

        return wrapper

    return decorate


def make_store(tmp_path, **kwargs):
    return ApplicationStore(
        path=tmp_path / "store.json", background_dispatch=False, **kwargs
    )


# --- 1: exposure-weighted decay formula ---


@criterion(1, "decay formula against exact rational arithmetic")
def test_epd_formula_suite():
    started = time.perf_counter()
    params = EpdParams(alpha=0.85)

    at_entry = compute_epd(0, VerifierVerdict(1.0, False, ""), params)
    assert at_entry == 1.0

    deep = compute_epd(6, VerifierVerdict(0.1, False, ""), params)
    # Fraction(0.85) snaps to the exact binary value of the float, so the
    # rational product is the true value of w * alpha^6 up to one rounding.
    oracle = float(Fraction(0.1) * Fraction(0.85) ** 6)
    assert abs(deep - oracle) < 1e-12

    sanitized = compute_epd(3, VerifierVerdict(1.0, True, "all paths scrubbed"), params)
    assert sanitized == 0.0

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"formula suite took {elapsed:.3f}s"


# --- 2: deep background dependencies stay below shallow public ones ---


@criterion(2, "background noise ranks far below public entry points")
def test_background_noise_use_case(tmp_path):
    started = time.perf_counter()
    store = make_store(tmp_path)
    g = store.graph
    org = g.add_node(NodeKind.ORG, {"name": "acme"})
    unit_pub = g.add_node(NodeKind.UNIT, {"name": "edge"})
    unit_bg = g.add_node(NodeKind.UNIT, {"name": "batch"})
    g.add_edge(org, unit_pub, EdgeKind.CONTAINS)
    g.add_edge(org, unit_bg, EdgeKind.CONTAINS)
    comp = g.add_node(NodeKind.COMP, {"purl": "pkg:pypi/vuln@1.0.0"})

    public_assets, background_assets = [], []
    for i in range(2):
        a = g.add_node(NodeKind.ASSET, {"name": f"public-{i}"})
        g.add_edge(unit_pub, a, EdgeKind.OWNS)
        g.add_edge(a, comp, EdgeKind.DEPENDS_ON, {"direct": True, "scope": "runtime"})
        public_assets.append(a)
    for i in range(8):
        a = g.add_node(NodeKind.ASSET, {"name": f"job-{i}"})
        g.add_edge(unit_bg, a, EdgeKind.OWNS)
        g.add_edge(a, comp, EdgeKind.DEPENDS_ON, {"direct": True, "scope": "runtime"})
        background_assets.append(a)

    store.ingest_feed(
        json.dumps(
            [
                {
                    "id": "OSV-UC3",
                    "severity": [{"type": "CVSS_V3", "score": 9.8}],
                    "affected": [{"package": {"purl": "pkg:pypi/vuln@1.0.0"}}],
                }
            ]
        ),
        actor="test",
    )
    signal = next(store.graph.nodes(NodeKind.SIGNAL))

    def slice_doc(asset_id, entry_kind, depth):
        fns = [{"fn_id": "f0", "name": "entry", "entry_kind": entry_kind}]
        edges = []
        for i in range(1, depth + 1):
            fns.append({"fn_id": f"f{i}", "name": f"hop{i}"})
            edges.append({"from": f"f{i-1}", "to": f"f{i}", "kind": "call"})
        return json.dumps(
            {
                "asset_ref": asset_id,
                "signal_ref": signal.id,
                "functions": fns,
                "edges": edges,
                "entry_points": ["f0"],
                "sink": f"f{depth}",
            }
        )

    for a in public_assets:
        store.ingest_slice(slice_doc(a, "public_http", 0), actor="test")
    for a in background_assets:
        store.ingest_slice(slice_doc(a, "background_job", 6), actor="test")

    for a in public_assets:
        assert store.depscores[(signal.id, a)]["depscore"] == 98
    for a in background_assets:
        assert store.depscores[(signal.id, a)]["depscore"] <= 5

    by_unit = sorted(
        (
            (
                unit_risk(g, signal.id, u, AggMode.SUM, epd_lookup=store.epd_lookup()),
                u,
            )
            for u in (unit_pub, unit_bg)
        ),
        reverse=True,
    )
    assert by_unit[0][1] == unit_pub, "public assets' unit must rank first"

    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"scenario took {elapsed:.3f}s"


# --- 3: blast radius and risk rollup against a raw snapshot walk ---


def oracle_from_snapshot(snap, signal_id, org_id):
    """Affected sets and risks recomputed from nothing but the edge lists."""
    nodes = {n["id"]: n for n in snap["nodes"]}
    edges = snap["edges"]
    tiers = {t["tier_id"]: t["importance"] for t in snap["tiers"]}

    affected_comps = {
        e["dst"] for e in edges if e["src"] == signal_id and e["kind"] == "affects"
    }
    affected_assets = sorted(
        {
            e["src"]
            for e in edges
            if e["kind"] == "depends_on" and e["dst"] in affected_comps
        }
    )
    owners = {}
    for e in edges:
        if e["kind"] == "owns":
            owners.setdefault(e["dst"], set()).add(e["src"])
    affected_units = sorted(
        {u for a in affected_assets for u in owners.get(a, set())}
    )

    sig = nodes[signal_id]

    def one_contrib(asset_id):
        asset = nodes[asset_id]
        rel = [
            e
            for e in edges
            if e["kind"] == "depends_on"
            and e["src"] == asset_id
            and e["dst"] in affected_comps
        ]
        direct = any(e["attrs"].get("direct", True) for e in rel)
        scopes = {e["attrs"].get("scope", "runtime") for e in rel}
        scope_f = 1.0 if "runtime" in scopes else 0.3
        tier = asset.get("tier")
        tier_f = tiers.get(tier, 1.0) if tier else 1.0
        return (
            (sig["severity"] / 10.0)
            * sig["confidence"]
            * tier_f
            * asset["exposure"]
            * (1.0 if direct else 0.8)
            * scope_f
            * (1.25 if asset["critical"] else 1.0)
            * (1.25 if asset_id not in owners else 1.0)
        )

    unit_values = {}
    for unit in sorted(n["id"] for n in snap["nodes"] if n["kind"] == "Unit"):
        owned = {a for a, us in owners.items() if unit in us}
        unit_values[unit] = sum(
            one_contrib(a) for a in sorted(owned & set(affected_assets))
        )
    org_unit_ids = sorted(
        e["dst"] for e in edges if e["src"] == org_id and e["kind"] == "contains"
    )
    total = sum(unit_values[u] for u in org_unit_ids)
    return affected_assets, affected_units, unit_values, total


@criterion(3, "blast radius matches a brute-force snapshot walk on 100 random graphs")
def test_blast_radius_oracle():
    from test_risk import random_org

    started = time.perf_counter()
    rng = random.Random(1202)
    for trial in range(100):
        g, org, signals = random_org(rng)
        assert sum(1 for _ in g.nodes()) <= 50
        snap = g.to_snapshot()
        for signal_id in signals:
            want_assets, want_units, want_unit_vals, want_total = oracle_from_snapshot(
                snap, signal_id, org
            )
            assert g.affected_assets(signal_id) == want_assets, f"trial {trial}"
            assert g.affected_units(signal_id) == want_units, f"trial {trial}"
            for unit, want in want_unit_vals.items():
                got = unit_risk(g, signal_id, unit, AggMode.SUM)
                assert got == want, f"trial {trial} unit {unit}"
            got_total = org_risk(g, signal_id, AggMode.SUM, org)
            assert got_total == want_total, f"trial {trial}"
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"oracle sweep took {elapsed:.3f}s"


# --- 4: risk can never fall when an input gets worse ---


@criterion(4, "contribution monotone under 1000 worst-direction perturbations")
def test_monotonicity_perturbations():
    rng = random.Random(77)

    def random_inputs():
        return ContribInputs(
            sev=round(rng.uniform(0, 10), 2),
            conf=round(rng.random(), 2),
            direct=rng.random() < 0.5,
            scope=rng.choice(["runtime", "dev", "test"]),
            exposure=round(rng.random(), 2),
            critical=rng.random() < 0.5,
            ownership_gap=rng.random() < 0.5,
            tier_importance=round(rng.uniform(0.1, 4.0), 2),
            epd=round(rng.random(), 3) if rng.random() < 0.5 else None,
        )

    def worsen(base):
        choice = rng.randrange(7)
        out = ContribInputs(**vars(base))
        if choice == 0:
            out.sev = min(10.0, base.sev + rng.uniform(0, 10 - base.sev))
        elif choice == 1:
            out.conf = min(1.0, base.conf + rng.uniform(0, 1 - base.conf))
        elif choice == 2:
            out.direct = True
        elif choice == 3:
            out.scope = "runtime"
        elif choice == 4:
            out.critical = True
        elif choice == 5:
            out.ownership_gap = True
        else:
            if base.epd is not None:
                out.epd = min(1.0, base.epd + rng.uniform(0, 1 - base.epd))
            else:
                out.exposure = min(1.0, base.exposure + rng.uniform(0, 1 - base.exposure))
        return out

    violations = 0
    for _ in range(1000):
        base = random_inputs()
        worse = worsen(base)
        if contrib(worse) < contrib(base):
            violations += 1
    assert violations == 0

    for alpha in (0.5, 0.85, 0.99):
        params = EpdParams(alpha=alpha)
        verdict = VerifierVerdict(1.0, False, "")
        values = [compute_epd(d, verdict, params) for d in range(0, 31)]
        assert all(a > b for a, b in zip(values, values[1:])), f"alpha {alpha}"


# --- 5: review gate consults the legal endpoint and fails closed ---


LEGAL_POLICY = (
    'let verdict = http_post("https://legal.example/api/check",'
    " {licenses: delta.added_licenses});\n"
    'if verdict.status == "Unapproved" {\n'
    '  block("legal denied: " + verdict.ticket);\n'
    "}\n"
    "allow;\n"
)


def legal_fixture(tmp_path, response_text):
    calls = []

    def transport(method, url, body):
        calls.append((method, url, body))
        return response_text

    store = make_store(tmp_path, policy_transport=transport)
    store.budget = SandboxBudget(http_allowlist=["https://legal.example/"])
    g = store.graph
    org = g.add_node(NodeKind.ORG, {"name": "acme"})
    unit = g.add_node(NodeKind.UNIT, {"name": "payments"})
    asset = g.add_node(NodeKind.ASSET, {"name": "checkout"})
    g.add_edge(org, unit, EdgeKind.CONTAINS)
    g.add_edge(unit, asset, EdgeKind.OWNS)
    store.create_policy(
        {"policy_id": "pr-legal", "context": "pr", "source": LEGAL_POLICY}, "test"
    )
    base = {"bomFormat": "CycloneDX", "specVersion": "1.5", "components": []}
    head = {
        "bomFormat": "CycloneDX",
        "specVersion": "1.5",
        "components": [
            {
                "purl": "pkg:npm/newlib@2.0.0",
                "name": "newlib",
                "version": "2.0.0",
                "licenses": [{"license": {"id": "SSPL-1.0"}}],
            }
        ],
    }
    body = {"asset": asset, "base_sbom": base, "head_sbom": head}
    return TestClient(create_app(store)), body, calls, store, asset


@criterion(5, "review gate blocks on Unapproved, allows on Approved, fails closed")
def test_legal_gate_use_case(tmp_path):
    client, body, calls, _, _ = legal_fixture(
        tmp_path / "deny", '{"status": "Unapproved", "ticket": "LEG-1139"}'
    )
    denied = client.post("/api/v1/gate/pr", json=body)
    assert denied.status_code == 200
    assert denied.json()["decision"] == "block"
    assert denied.json()["comment"] == "legal denied: LEG-1139"
    assert len(calls) == 1 and calls[0][0] == "POST"
    assert calls[0][2] == {"licenses": ["SSPL-1.0"]}

    client, body, _, _, _ = legal_fixture(
        tmp_path / "ok", '{"status": "Approved", "ticket": "LEG-1139"}'
    )
    approved = client.post("/api/v1/gate/pr", json=body)
    assert approved.status_code == 200
    assert approved.json()["decision"] == "allow"

    client, body, _, store, asset = legal_fixture(
        tmp_path / "silent", '{"status": "Approved"}'
    )
    store.policies.clear()
    store.create_policy(
        {"policy_id": "pr-undecided", "context": "pr", "source": "let x = 1;"}, "test"
    )
    silent = client.post("/api/v1/gate/pr", json=body)
    assert silent.status_code == 422
    assert silent.json()["decision"] == "block"
    assert silent.json()["error"]["code"] == "missing_verdict"

    with pytest.raises(MissingVerdictError):
        store.gate_pr(
            asset,
            json.dumps(body["base_sbom"]),
            json.dumps(body["head_sbom"]),
            "test",
        )


# --- 6: notifications route by tier through real webhook delivery ---


ROUTING_POLICY = (
    "for a in assets {\n"
    '  if a.tier == "tier-1" {\n    notify("pager", {asset: a.id});\n  }\n'
    '  if a.tier == "tier-3" {\n    notify("tickets", {asset: a.id});\n  }\n'
    "}\n"
)


@criterion(6, "tier-1 pages, tier-3 files a ticket, one webhook each")
def test_tier_routing_use_case(tmp_path):
    transport = RecordingTransport()
    store = make_store(tmp_path)
    store.dispatcher = Dispatcher(
        channels=lambda: store.channels, transport=transport, sleep=lambda s: None
    )
    g = store.graph
    org = g.add_node(NodeKind.ORG, {"name": "acme"})
    unit = g.add_node(NodeKind.UNIT, {"name": "core"})
    g.add_edge(org, unit, EdgeKind.CONTAINS)
    g.add_tier(TierDef("tier-1", "Critical", 3.0))
    g.add_tier(TierDef("tier-3", "Routine", 1.0))
    comp = g.add_node(NodeKind.COMP, {"purl": "pkg:pypi/shared@1.0.0"})
    hot = g.add_node(NodeKind.ASSET, {"name": "gateway", "tier": "tier-1"})
    cold = g.add_node(NodeKind.ASSET, {"name": "reports", "tier": "tier-3"})
    for a in (hot, cold):
        g.add_edge(unit, a, EdgeKind.OWNS)
        g.add_edge(a, comp, EdgeKind.DEPENDS_ON, {"direct": True, "scope": "runtime"})

    store.create_channel(
        {"channel_id": "pager", "endpoint": "https://hooks.example/page", "secret": "p"},
        "test",
    )
    store.create_channel(
        {"channel_id": "tickets", "endpoint": "https://hooks.example/ticket"}, "test"
    )
    store.create_policy(
        {"policy_id": "n-route", "context": "notification", "source": ROUTING_POLICY},
        "test",
    )

    result = store.ingest_feed(
        json.dumps(
            [
                {
                    "id": "OSV-UC2",
                    "severity": [{"type": "CVSS_V3", "score": 8.1}],
                    "affected": [{"package": {"purl": "pkg:pypi/shared@1.0.0"}}],
                }
            ]
        ),
        actor="test",
    )

    assert [r["status"] for r in result["dispatch"]] == ["delivered", "delivered"]
    page_calls = [c for c in transport.calls if c[0] == "https://hooks.example/page"]
    ticket_calls = [c for c in transport.calls if c[0] == "https://hooks.example/ticket"]
    assert len(page_calls) == 1, "exactly one page"
    assert len(ticket_calls) == 1, "exactly one ticket"
    assert json.loads(page_calls[0][1])["asset"] == hot
    assert json.loads(ticket_calls[0][1])["asset"] == cold


# --- 7: language corpus plus dry-run/evaluate differential ---


@criterion(7, "script corpus pinned and dry runs agree with plain evaluation")
def test_policylang_conformance():
    assert len(SCRIPTS) >= 30
    failures = {"budget_exceeded": 0, "http_denied": 0}
    valid = invalid = 0
    for path in SCRIPTS:
        case = load_case(path)
        source = path.read_text(encoding="utf-8")
        context, _ = parse_policy_file(source)
        try:
            script = PolicyScript.create(path.stem, context, source)
            result = dry_run(script, case["binding"], budget_from(case), transport_from(case))
        except Exception as exc:
            assert "error" in case, f"{path.stem} failed unexpectedly: {exc}"
            code = case["error"]["code"]
            assert getattr(exc, "code", None) == code
            if code in failures:
                failures[code] += 1
            invalid += 1
            continue
        assert result.outcome.to_dict() == case["outcome"], path.stem
        valid += 1
    assert valid >= 10 and invalid >= 10
    assert failures["budget_exceeded"] >= 1
    assert failures["http_denied"] >= 1

    rng = random.Random(424242)
    binding = {
        "component": {
            "purl": "pkg:pypi/x@1.0.0",
            "licenses": ["MIT", "GPL-3.0"],
            "maintainer_count": 2,
        }
    }
    divergences = 0
    for i in range(200):
        source = generate_script(rng)
        script = PolicyScript.create(f"gen-{i}", "policy", source)
        if dry_run(script, binding).outcome.to_dict() != evaluate(script, binding).to_dict():
            divergences += 1
    assert divergences == 0


# --- 8: snapshots survive a round trip and reject corruption ---


@criterion(8, "1000-node snapshot round trip under a second, corruption rejected")
def test_persistence_round_trip(tmp_path):
    store = make_store(tmp_path)
    g = store.graph
    rng = random.Random(8)
    orgs = [g.add_node(NodeKind.ORG, {"name": f"org {i}"}) for i in range(10)]
    units = [g.add_node(NodeKind.UNIT, {"name": f"unit {i}"}) for i in range(90)]
    for i, u in enumerate(units):
        g.add_edge(orgs[i % 10], u, EdgeKind.CONTAINS)
    assets = [g.add_node(NodeKind.ASSET, {"name": f"asset {i}"}) for i in range(600)]
    for i, a in enumerate(assets):
        g.add_edge(units[i % 90], a, EdgeKind.OWNS)
    comps = [
        g.add_node(NodeKind.COMP, {"purl": f"pkg:pypi/lib{i}@1.0.0"}) for i in range(250)
    ]
    for i, a in enumerate(assets):
        g.add_edge(
            a,
            comps[i % 250],
            EdgeKind.DEPENDS_ON,
            {"direct": bool(i % 2), "scope": "runtime"},
        )
    signals = [
        g.add_node(
            NodeKind.SIGNAL,
            {"external_id": f"CVE-2026-{i}", "severity": round(rng.uniform(1, 10), 1)},
        )
        for i in range(50)
    ]
    for i, s in enumerate(signals):
        g.add_edge(s, comps[i % 250], EdgeKind.AFFECTS)
    total = sum(1 for _ in g.nodes())
    assert total >= 1000

    started = time.perf_counter()
    store.persist()
    reloaded = ApplicationStore.load(store.path)
    elapsed = time.perf_counter() - started
    assert reloaded.graph == store.graph
    assert elapsed < 1.0, f"round trip took {elapsed:.3f}s"

    store.path.write_text('{"nodes": [{"id": "org-1"', encoding="utf-8")
    with pytest.raises(CorruptSnapshotError):
        ApplicationStore.load(store.path)
    store.path.write_text('"just a string"', encoding="utf-8")
    with pytest.raises(CorruptSnapshotError):
        ApplicationStore.load(store.path)
