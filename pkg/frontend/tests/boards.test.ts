import { beforeEach, describe, expect, it } from "vitest";
import { DeptexApi } from "../src/api.js";
import { TierManagerView } from "../src/views/tiers.js";
import { StatusBoardView } from "../src/views/statuses.js";
import { FakeServer, mountRoot } from "./fake_api.js";

describe("tier manager view", () => {
  let server: FakeServer;
  let root: HTMLElement;
  let view: TierManagerView;

  beforeEach(async () => {
    server = new FakeServer();
    server.on("GET", "/api/v1/tiers", [
      { tier_id: "tier-1", name: "Gold", importance: 3 },
      { tier_id: "tier-3", name: "Best effort", importance: 0.5 },
    ]);
    root = mountRoot();
    view = new TierManagerView(root, new DeptexApi("", "", server.fetch));
    await view.init();
  });

  it("shows one slider per tier preloaded with its importance", () => {
    const rows = Array.from(root.querySelectorAll(".tier-row"));
    expect(rows.map((r) => (r as HTMLElement).dataset.tier)).toEqual([
      "tier-1",
      "tier-3",
    ]);
    const sliders = rows.map(
      (r) => r.querySelector(".tier-slider") as HTMLInputElement,
    );
    expect(sliders[0].value).toBe("3");
    expect(sliders[1].value).toBe("0.5");
    expect(sliders[0].type).toBe("range");
  });

  it("saving a slider issues the tier update call", async () => {
    server.on("PUT", "/api/v1/tiers/tier-1", {
      tier_id: "tier-1",
      name: "Gold",
      importance: 4.5,
    });
    await view.saveImportance("tier-1", "4.5");

    const puts = server.calls("PUT", "/api/v1/tiers/tier-1");
    expect(puts.length).toBe(1);
    expect(puts[0].body).toEqual({ importance: 4.5 });
    expect((root.querySelector(".view-status") as HTMLElement).innerText).toContain(
      "tier-1 importance now 4.5",
    );
  });

  it("surfaces a rejected importance instead of swallowing it", async () => {
    server.fail("PUT", "/api/v1/tiers/tier-1", 400, {
      code: "invalid_field",
      message: "importance must be non-negative",
    });
    await view.saveImportance("tier-1", "-2");
    expect((root.querySelector(".view-status") as HTMLElement).innerText).toContain(
      "invalid_field",
    );
  });
});

describe("status board view", () => {
  let server: FakeServer;
  let root: HTMLElement;

  beforeEach(async () => {
    server = new FakeServer();
    server.on("GET", "/api/v1/statuses", [
      { status_id: "approved", name: "Approved", color_hint: "#3fb96f" },
      { status_id: "quarantined", name: "Quarantined", color_hint: "#e0564f" },
    ]);
    server.on("GET", "/api/v1/assets", [
      { id: "asset-1", kind: "asset", name: "billing", tier: null, compliance_status: "approved" },
      { id: "asset-2", kind: "asset", name: "etl", tier: null, compliance_status: "approved" },
      { id: "asset-3", kind: "asset", name: "web", tier: null, compliance_status: "quarantined" },
      { id: "asset-4", kind: "asset", name: "batch", tier: null, compliance_status: "" },
    ]);
    root = mountRoot();
    const view = new StatusBoardView(root, new DeptexApi("", "", server.fetch));
    await view.init();
  });

  it("buckets assets per status with an explicit unset bucket", () => {
    const rows = Array.from(root.querySelectorAll(".status-row"));
    const byStatus = new Map(
      rows.map((r) => [(r as HTMLElement).dataset.status, r as HTMLElement]),
    );
    expect(byStatus.size).toBe(3);
    expect(byStatus.get("approved")?.querySelector(".status-count")?.textContent).toBe("2");
    expect(byStatus.get("quarantined")?.querySelector(".status-count")?.textContent).toBe("1");
    expect(byStatus.get("(no status)")?.querySelector(".status-count")?.textContent).toBe("1");
    expect(byStatus.get("(no status)")?.textContent).toContain("batch");
  });

  it("sizes distribution bars with flex ratios, not computed percentages", () => {
    const approved = root.querySelector('[data-status="approved"] .bar-fill') as HTMLElement;
    expect(approved.style.flexGrow).toBe("2");
    const rest = root.querySelector('[data-status="approved"] .bar-rest') as HTMLElement;
    expect(rest.style.flexGrow).toBe("2");
  });

  it("applies the served color hint to the swatch", () => {
    const swatch = root.querySelector(
      '[data-status="quarantined"] .status-swatch',
    ) as HTMLElement;
    expect(swatch.style.background).toBe("#e0564f");
  });
});
