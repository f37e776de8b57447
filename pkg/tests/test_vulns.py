"""Vulnerability feed parsing and version-range matching.

The matcher is validated against a brute-force quadratic scan over
(entry, component) pairs that re-implements the range rule from scratch.
"""

import json
import random

import pytest

from deptex.errors import MalformedDocumentError, MalformedRangeError, MissingFieldError
from deptex.graph import EdgeKind, NodeKind, OrgGraph
from deptex.vulnfeed import (
    VersionRange,
    match_vulnerabilities,
    parse_feed,
)
from deptex.versions import compare_versions


def feed(entries):
    return json.dumps(entries)


def entry(eid, purl, introduced=None, fixed=None, score=7.5, **extra):
    events = []
    if introduced is not None:
        events.append({"introduced": introduced})
    if fixed is not None:
        events.append({"fixed": fixed})
    body = {
        "id": eid,
        "severity": [{"type": "CVSS_V3", "score": score}],
        "affected": [
            {
                "package": {"purl": purl},
                "ranges": [{"type": "SEMVER", "events": events}] if events else [],
            }
        ],
    }
    body.update(extra)
    return body


# --- parsing ---

def test_parse_minimal_entry():
    entries = parse_feed(feed([entry("CVE-2026-1", "pkg:pypi/requests", fixed="2.0.0")]))
    assert len(entries) == 1
    e = entries[0]
    assert e.external_id == "CVE-2026-1"
    assert e.severity == 7.5
    assert e.confidence == 1.0
    assert e.affected[0].ranges[0].fixed == "2.0.0"


def test_parse_vulns_wrapper_object():
    doc = json.dumps({"vulns": [entry("CVE-2026-2", "pkg:pypi/x", fixed="1.0.0")]})
    assert len(parse_feed(doc)) == 1


def test_missing_id():
    with pytest.raises(MissingFieldError):
        parse_feed(feed([{"affected": [{"package": {"purl": "pkg:pypi/x"}}]}]))


def test_missing_purl():
    with pytest.raises(MissingFieldError) as exc:
        parse_feed(feed([{"id": "X", "affected": [{"package": {}}]}]))
    assert "package.purl" in str(exc.value)


def test_empty_affected_is_malformed_range():
    with pytest.raises(MalformedRangeError):
        parse_feed(feed([{"id": "X", "affected": []}]))
    with pytest.raises(MalformedRangeError):
        parse_feed(feed([{"id": "X"}]))


def test_range_with_no_events_rejected():
    doc = feed(
        [{"id": "X", "affected": [{"package": {"purl": "pkg:pypi/x"}, "ranges": [{"events": []}]}]}]
    )
    with pytest.raises(MalformedRangeError):
        parse_feed(doc)


def test_inverted_range_rejected():
    with pytest.raises(MalformedRangeError):
        parse_feed(feed([entry("X", "pkg:pypi/x", introduced="3.0.0", fixed="2.0.0")]))
    with pytest.raises(MalformedRangeError):
        parse_feed(feed([entry("X", "pkg:pypi/x", introduced="2.0.0", fixed="2.0.0")]))


def test_severity_takes_max_score():
    body = entry("X", "pkg:pypi/x", fixed="1.0.0")
    body["severity"] = [{"score": 4.0}, {"score": 9.1}, {"score": 2.2}]
    assert parse_feed(feed([body]))[0].severity == 9.1


def test_severity_out_of_range_rejected():
    body = entry("X", "pkg:pypi/x", fixed="1.0.0", score=11.0)
    with pytest.raises(MalformedDocumentError):
        parse_feed(feed([body]))


def test_confidence_extension_honored():
    body = entry("X", "pkg:pypi/x", fixed="1.0.0", confidence=0.4)
    assert parse_feed(feed([body]))[0].confidence == 0.4


def test_summary_becomes_description():
    body = entry("X", "pkg:pypi/x", fixed="1.0.0", summary="RCE in parser")
    assert parse_feed(feed([body]))[0].description == "RCE in parser"


def test_not_json():
    with pytest.raises(MalformedDocumentError):
        parse_feed("nope{")


# --- range semantics ---

def test_range_half_open():
    r = VersionRange(introduced="1.0.0", fixed="2.0.0")
    assert r.contains("1.0.0")          # inclusive lower bound
    assert r.contains("1.9.9")
    assert not r.contains("2.0.0")      # exclusive upper bound
    assert not r.contains("0.9.9")


def test_range_open_below():
    r = VersionRange(fixed="2.0.0")
    assert r.contains("0.0.1")
    assert r.contains("1.9.1")
    assert not r.contains("2.0.0")


def test_range_open_above():
    r = VersionRange(introduced="3.0.0")
    assert not r.contains("1.9.1")
    assert r.contains("3.0.0")
    assert r.contains("99.0.0")


def test_range_zero_sentinel():
    r = VersionRange(introduced="0", fixed="1.5.0")
    assert r.contains("0.0.1")
    assert r.contains("1.4.9")
    assert not r.contains("1.5.0")


def test_prerelease_inside_range():
    r = VersionRange(introduced="1.0.0-alpha", fixed="1.0.0")
    assert r.contains("1.0.0-beta")
    assert not r.contains("1.0.0")


# --- matching against the graph ---

def graph_with_comps(versions_by_name):
    g = OrgGraph()
    g.add_node(NodeKind.ASSET, {"id": "asset-1"})
    for name, version in versions_by_name.items():
        cid = g.add_node(
            NodeKind.COMP,
            {"purl": f"pkg:pypi/{name}@{version}", "name": name, "version": version},
        )
        g.add_edge("asset-1", cid, EdgeKind.DEPENDS_ON, {"direct": True, "depth": 1})
    return g


def test_match_fixed_bound():
    g = graph_with_comps({"requests": "1.9.1"})
    results = match_vulnerabilities(
        g, parse_feed(feed([entry("CVE-A", "pkg:pypi/requests", fixed="2.0.0")]))
    )
    assert len(results) == 1
    assert results[0].external_id == "CVE-A"
    signal = g.node(results[0].signal_id)
    assert signal.severity == 7.5
    assert g.affected_assets(results[0].signal_id) == ["asset-1"]


def test_no_match_below_introduced():
    g = graph_with_comps({"requests": "1.9.1"})
    results = match_vulnerabilities(
        g, parse_feed(feed([entry("CVE-B", "pkg:pypi/requests", introduced="3.0.0")]))
    )
    assert results == []
    assert list(g.nodes(NodeKind.SIGNAL)) == []


def test_unmatched_entry_creates_no_node():
    g = graph_with_comps({"requests": "1.9.1"})
    match_vulnerabilities(
        g, parse_feed(feed([entry("CVE-C", "pkg:pypi/unrelated", fixed="9.9.9")]))
    )
    assert list(g.nodes(NodeKind.SIGNAL)) == []


def test_reingest_is_idempotent():
    g = graph_with_comps({"requests": "1.9.1"})
    entries = parse_feed(feed([entry("CVE-D", "pkg:pypi/requests", fixed="2.0.0")]))
    first = match_vulnerabilities(g, entries)
    second = match_vulnerabilities(g, entries)
    assert first[0].signal_id == second[0].signal_id
    assert len(list(g.nodes(NodeKind.SIGNAL))) == 1
    assert len(g.out_edges(first[0].signal_id, EdgeKind.AFFECTS)) == 1


def test_reingest_updates_severity():
    g = graph_with_comps({"requests": "1.9.1"})
    match_vulnerabilities(
        g, parse_feed(feed([entry("CVE-E", "pkg:pypi/requests", fixed="2.0.0", score=5.0)]))
    )
    match_vulnerabilities(
        g, parse_feed(feed([entry("CVE-E", "pkg:pypi/requests", fixed="2.0.0", score=9.8)]))
    )
    (signal,) = g.nodes(NodeKind.SIGNAL)
    assert signal.severity == 9.8


def test_versionless_purl_with_no_ranges_matches_everything():
    g = graph_with_comps({"anything": "3.4.5"})
    results = match_vulnerabilities(
        g,
        parse_feed(feed([{"id": "CVE-F", "affected": [{"package": {"purl": "pkg:pypi/anything"}}]}])),
    )
    assert len(results) == 1


def test_pinned_purl_exact_match_only():
    g = graph_with_comps({"pinned": "1.2.3"})
    hits = match_vulnerabilities(
        g,
        parse_feed(feed([{"id": "CVE-G", "affected": [{"package": {"purl": "pkg:pypi/pinned@1.2.3"}}]}])),
    )
    assert len(hits) == 1
    misses = match_vulnerabilities(
        g,
        parse_feed(feed([{"id": "CVE-H", "affected": [{"package": {"purl": "pkg:pypi/pinned@1.2.4"}}]}])),
    )
    assert misses == []


# --- quadratic brute-force oracle ---

def oracle_matches(components, entries):
    """Re-derive the match set the slow way: every (entry, comp) pair."""
    out = {}
    for e in entries:
        hits = []
        for comp_purl, comp_version in components:
            base = comp_purl.rsplit("@", 1)[0]
            for pkg in e.affected:
                if pkg.purl.split("?")[0].rsplit("@", 1)[0].replace("pkg:", "pkg:") != base:
                    # base purl mismatch
                    if pkg.purl != base:
                        continue
                if not pkg.ranges:
                    hits.append(comp_purl)
                    break
                matched = False
                for r in pkg.ranges:
                    lo_ok = (
                        r.introduced is None
                        or r.introduced == "0"
                        or compare_versions(comp_version, r.introduced) >= 0
                    )
                    hi_ok = r.fixed is None or compare_versions(comp_version, r.fixed) < 0
                    if lo_ok and hi_ok:
                        matched = True
                        break
                if matched:
                    hits.append(comp_purl)
                    break
        if hits:
            out[e.external_id] = sorted(hits)
    return out


def test_matcher_agrees_with_quadratic_oracle():
    rng = random.Random(42)
    names = [f"lib{i}" for i in range(12)]
    comps = {}
    for name in names:
        comps[name] = f"{rng.randint(0, 5)}.{rng.randint(0, 9)}.{rng.randint(0, 9)}"
    g = graph_with_comps(comps)

    raw_entries = []
    for i in range(30):
        name = rng.choice(names)
        lo = f"{rng.randint(0, 3)}.0.0"
        hi = f"{rng.randint(4, 8)}.0.0"
        form = rng.randint(0, 2)
        if form == 0:
            raw_entries.append(entry(f"V-{i}", f"pkg:pypi/{name}", introduced=lo, fixed=hi))
        elif form == 1:
            raw_entries.append(entry(f"V-{i}", f"pkg:pypi/{name}", fixed=hi))
        else:
            raw_entries.append(entry(f"V-{i}", f"pkg:pypi/{name}", introduced=lo))
    entries = parse_feed(feed(raw_entries))

    results = match_vulnerabilities(g, entries)
    got = {
        r.external_id: sorted(g.node(c).purl for c in r.comp_ids) for r in results
    }
    expected = oracle_matches(
        [(f"pkg:pypi/{n}@{v}", v) for n, v in comps.items()], entries
    )
    assert got == expected
