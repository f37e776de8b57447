import { DeptexApi, leaderboardPath, AggMode } from "../api.js";
import { clear, emptyNote, errorMessage, make, pill } from "../dom.js";
import type { LeaderboardRow, TierRecord } from "../types.js";

type PendingOverride = {
  assetId: string;
  tier: string | null;
};

// Signals ranked org-first. Every number shown comes straight from the
// API response; this view never computes risk, it only asks the server
// again with an override parameter for what-if previews.
export class LeaderboardView {
  private api: DeptexApi;
  private orgSelect: HTMLSelectElement;
  private aggSelect: HTMLSelectElement;
  private assetSelect: HTMLSelectElement;
  private tierSelect: HTMLSelectElement;
  private confirmBtn: HTMLButtonElement;
  private discardBtn: HTMLButtonElement;
  private boardBox: HTMLDivElement;
  private previewBox: HTMLDivElement;
  private statusLine: HTMLDivElement;
  private pending: PendingOverride | null = null;

  constructor(root: HTMLElement, api: DeptexApi) {
    this.api = api;

    const controls = make("div", "controls");
    this.orgSelect = make("select", "lb-org");
    this.aggSelect = make("select", "lb-agg");
    for (const mode of ["sum", "max", "mean"]) {
      const opt = make("option", "", mode);
      opt.value = mode;
      this.aggSelect.appendChild(opt);
    }
    const refreshBtn = make("button", "btn", "Refresh");
    refreshBtn.type = "button";
    refreshBtn.addEventListener("click", () => void this.refresh());
    controls.appendChild(label("Org", this.orgSelect));
    controls.appendChild(label("Aggregation", this.aggSelect));
    controls.appendChild(refreshBtn);

    const whatif = make("div", "controls whatif");
    this.assetSelect = make("select", "lb-asset");
    this.tierSelect = make("select", "lb-tier");
    const previewBtn = make("button", "btn", "Preview");
    previewBtn.type = "button";
    previewBtn.addEventListener("click", () => {
      const tier = this.tierSelect.value === "" ? null : this.tierSelect.value;
      void this.preview(this.assetSelect.value, tier);
    });
    this.confirmBtn = make("button", "btn confirm", "Apply tier");
    this.confirmBtn.type = "button";
    this.confirmBtn.disabled = true;
    this.confirmBtn.addEventListener("click", () => void this.confirmPreview());
    this.discardBtn = make("button", "btn", "Discard");
    this.discardBtn.type = "button";
    this.discardBtn.disabled = true;
    this.discardBtn.addEventListener("click", () => this.clearPreview());
    whatif.appendChild(label("What-if asset", this.assetSelect));
    whatif.appendChild(label("tier", this.tierSelect));
    whatif.appendChild(previewBtn);
    whatif.appendChild(this.confirmBtn);
    whatif.appendChild(this.discardBtn);

    this.statusLine = make("div", "view-status");
    this.boardBox = make("div", "board");
    this.previewBox = make("div", "board preview-board");

    root.appendChild(controls);
    root.appendChild(whatif);
    root.appendChild(this.statusLine);
    root.appendChild(this.previewBox);
    root.appendChild(this.boardBox);

    this.orgSelect.addEventListener("change", () => void this.refresh());
    this.aggSelect.addEventListener("change", () => void this.refresh());
  }

  async init(): Promise<void> {
    const [orgs, assets, tiers] = await Promise.all([
      this.api.listOrgs(),
      this.api.listAssets(),
      this.api.listTiers(),
    ]);
    fillSelect(this.orgSelect, orgs.map((o) => [o.id, `${o.name} (${o.id})`]));
    fillSelect(this.assetSelect, assets.map((a) => [a.id, `${a.name} (${a.id})`]));
    this.fillTierOptions(tiers);
    if (this.orgSelect.value) await this.refresh();
  }

  private fillTierOptions(tiers: TierRecord[]): void {
    const entries: [string, string][] = tiers.map((t) => [t.tier_id, t.tier_id]);
    entries.push(["", "(no tier)"]);
    fillSelect(this.tierSelect, entries);
  }

  agg(): AggMode {
    return this.aggSelect.value as AggMode;
  }

  async refresh(): Promise<void> {
    const org = this.orgSelect.value;
    if (!org) return;
    try {
      const rows = await this.api.leaderboard(org, { agg: this.agg() });
      clear(this.boardBox);
      this.boardBox.appendChild(renderBoard(rows, false));
      this.statusLine.innerText = "";
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  // Ask the server for the board as it would look with one asset moved to
  // another tier. Nothing is persisted; the same override_tier parameter a
  // direct API call would use is sent verbatim.
  async preview(assetId: string, tier: string | null): Promise<void> {
    const org = this.orgSelect.value;
    if (!org || !assetId) return;
    const query = { agg: this.agg(), overrides: { [assetId]: tier } };
    try {
      const rows = await this.api.leaderboard(org, query);
      clear(this.previewBox);
      const banner = make("div", "preview-banner");
      banner.appendChild(pill("preview", "warn"));
      banner.appendChild(
        make(
          "span",
          "preview-note",
          ` ${assetId} as ${tier ?? "(no tier)"}, nothing saved (${leaderboardPath(org, query)})`,
        ),
      );
      this.previewBox.appendChild(banner);
      this.previewBox.appendChild(renderBoard(rows, true));
      this.pending = { assetId, tier };
      this.confirmBtn.disabled = false;
      this.discardBtn.disabled = false;
      this.statusLine.innerText = "";
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  async confirmPreview(): Promise<void> {
    if (!this.pending) return;
    const { assetId, tier } = this.pending;
    try {
      await this.api.setAssetTier(assetId, tier);
      this.clearPreview();
      await this.refresh();
      this.statusLine.innerText = `tier saved for ${assetId}`;
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  clearPreview(): void {
    this.pending = null;
    this.confirmBtn.disabled = true;
    this.discardBtn.disabled = true;
    clear(this.previewBox);
  }
}

function label(text: string, control: HTMLElement): HTMLLabelElement {
  const wrap = make("label", "field");
  wrap.appendChild(make("span", "field-name", text));
  wrap.appendChild(control);
  return wrap;
}

function fillSelect(select: HTMLSelectElement, entries: [string, string][]): void {
  clear(select);
  for (const [value, text] of entries) {
    const opt = make("option", "", text);
    opt.value = value;
    select.appendChild(opt);
  }
}

// Rows land in the DOM in exactly the order the response listed them.
function renderBoard(rows: LeaderboardRow[], isPreview: boolean): HTMLElement {
  if (rows.length === 0) {
    const box = make("div");
    emptyNote(box, "No signals yet.");
    return box;
  }
  const table = make("table", isPreview ? "lb-table preview" : "lb-table");
  const head = make("tr");
  for (const col of ["signal", "org risk", "assets", "units", "gaps"]) {
    head.appendChild(make("th", "", col));
  }
  table.appendChild(head);
  for (const row of rows) {
    const tr = make("tr", "lb-row");
    tr.dataset.signal = row.signal_id;
    tr.appendChild(make("td", "cell-signal", row.external_id));
    tr.appendChild(make("td", "cell-risk", String(row.org_risk)));
    tr.appendChild(make("td", "cell-assets", String(row.asset_count)));
    tr.appendChild(make("td", "cell-units", String(row.unit_count)));
    const gaps = make("td", "cell-gaps");
    if (row.gap_count > 0) {
      gaps.appendChild(pill(`${row.gap_count} unowned`, "bad"));
    } else {
      gaps.innerText = "0";
    }
    tr.appendChild(gaps);
    table.appendChild(tr);
  }
  return table;
}
