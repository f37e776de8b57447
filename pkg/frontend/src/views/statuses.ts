import { DeptexApi } from "../api.js";
import { clear, emptyNote, errorMessage, make } from "../dom.js";
import type { AssetRecord, StatusRecord } from "../types.js";

const UNSET = "(no status)";

/** How assets spread across the compliance statuses. */
export class StatusBoardView {
  private api: DeptexApi;
  private boardBox: HTMLDivElement;
  private statusLine: HTMLDivElement;

  constructor(root: HTMLElement, api: DeptexApi) {
    this.api = api;
    const refreshBtn = make("button", "btn", "Refresh");
    refreshBtn.type = "button";
    refreshBtn.addEventListener("click", () => void this.refresh());
    const controls = make("div", "controls");
    controls.appendChild(refreshBtn);
    this.statusLine = make("div", "view-status");
    this.boardBox = make("div", "status-board");
    root.appendChild(controls);
    root.appendChild(this.statusLine);
    root.appendChild(this.boardBox);
  }

  async init(): Promise<void> {
    await this.refresh();
  }

  async refresh(): Promise<void> {
    try {
      const [statuses, assets] = await Promise.all([
        this.api.listStatuses(),
        this.api.listAssets(),
      ]);
      this.render(statuses, assets);
      this.statusLine.innerText = "";
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  private render(statuses: StatusRecord[], assets: AssetRecord[]): void {
    clear(this.boardBox);
    if (assets.length === 0) {
      emptyNote(this.boardBox, "No assets registered.");
      return;
    }

    const buckets = new Map<string, AssetRecord[]>();
    for (const status of statuses) {
      buckets.set(status.status_id, []);
    }
    buckets.set(UNSET, []);
    for (const asset of assets) {
      const key =
        typeof asset.compliance_status === "string" && asset.compliance_status !== ""
          ? asset.compliance_status
          : UNSET;
      const bucket = buckets.get(key) ?? [];
      bucket.push(asset);
      buckets.set(key, bucket);
    }

    const hintByStatus = new Map(statuses.map((s) => [s.status_id, s.color_hint]));
    for (const [statusId, members] of buckets) {
      const row = make("div", "status-row");
      row.dataset.status = statusId;
      const head = make("div", "status-head");
      const swatch = make("span", "status-swatch");
      const hint = hintByStatus.get(statusId);
      if (hint) swatch.style.background = hint;
      head.appendChild(swatch);
      head.appendChild(make("span", "status-name", statusId));
      head.appendChild(make("span", "status-count", String(members.length)));
      row.appendChild(head);

      // Bar widths lean on flexbox ratios; the count is never re-derived here.
      const barTrack = make("div", "bar-track");
      const bar = make("div", "bar-fill");
      bar.style.flexGrow = String(members.length);
      const rest = make("div", "bar-rest");
      rest.style.flexGrow = String(assets.length - members.length);
      barTrack.appendChild(bar);
      barTrack.appendChild(rest);
      row.appendChild(barTrack);

      const names = make("div", "status-assets");
      for (const asset of members) {
        names.appendChild(make("span", "status-asset", asset.name));
      }
      row.appendChild(names);
      this.boardBox.appendChild(row);
    }
  }
}
