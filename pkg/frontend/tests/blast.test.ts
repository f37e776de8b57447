import { beforeEach, describe, expect, it } from "vitest";
import { DeptexApi } from "../src/api.js";
import { BlastRadiusView } from "../src/views/blast.js";
import { FakeServer, mountRoot } from "./fake_api.js";

const BLAST = {
  signal_id: "signal-1",
  external_id: "OSV-2041-77",
  severity: 9.8,
  asset_count: 3,
  unit_count: 2,
  gap_assets: ["asset-9"],
  assets: [
    { id: "asset-1", name: "billing", tier: "tier-1", ownership_gap: false, depscore: 98 },
    { id: "asset-4", name: "etl", tier: null, ownership_gap: false, depscore: 4 },
    { id: "asset-9", name: "legacy-sync", tier: null, ownership_gap: true, depscore: null },
  ],
  units: [
    { id: "unit-1", name: "payments", risk: 7.35 },
    { id: "unit-2", name: "data", risk: 0.294 },
  ],
};

describe("blast radius view", () => {
  let server: FakeServer;
  let root: HTMLElement;

  beforeEach(async () => {
    server = new FakeServer();
    server.on("GET", "/api/v1/signals", [
      { id: "signal-1", kind: "signal", name: "osv", external_id: "OSV-2041-77" },
    ]);
    server.on("GET", "/api/v1/signals/signal-1/blast-radius", BLAST);
    root = mountRoot();
    const view = new BlastRadiusView(root, new DeptexApi("", "", server.fetch));
    await view.init();
  });

  it("loads the selected signal's radius straight from the API", () => {
    const fetched = server.calls("GET", "/api/v1/signals/signal-1/blast-radius");
    expect(fetched.length).toBe(1);
    const header = root.querySelector(".blast-header") as HTMLElement;
    expect(header.textContent).toContain("OSV-2041-77");
    expect(header.textContent).toContain("severity 9.8");
    expect(header.textContent).toContain("3 assets across 2 units");
  });

  it("lists hit units with their served risk values", () => {
    const units = Array.from(root.querySelectorAll(".unit-node"));
    expect(units.map((u) => (u as HTMLElement).dataset.unit)).toEqual([
      "unit-1",
      "unit-2",
    ]);
    expect(units[0].textContent).toContain("risk 7.35");
    expect(units[1].textContent).toContain("risk 0.294");
  });

  it("badges assets with tier, depscore, and ownership gaps", () => {
    const nodes = new Map(
      Array.from(root.querySelectorAll(".asset-node")).map((n) => [
        (n as HTMLElement).dataset.asset,
        n as HTMLElement,
      ]),
    );
    expect(nodes.size).toBe(3);

    const scored = nodes.get("asset-1");
    expect(scored?.querySelector(".pill.plain")?.textContent).toBe("tier-1");
    expect(scored?.querySelector(".pill.warn")?.textContent).toBe("depscore 98");
    expect(scored?.querySelector(".pill.bad")).toBeNull();

    const unowned = nodes.get("asset-9");
    expect(unowned?.querySelector(".pill.bad")?.textContent).toBe("unowned");
    expect(unowned?.querySelector(".pill.warn")).toBeNull();
  });
});
