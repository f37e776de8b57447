import { DeptexApi } from "../api.js";
import { clear, emptyNote, errorMessage, make } from "../dom.js";
import type { TierRecord } from "../types.js";

/** Importance sliders per tier, plus a form for defining new ones. */
export class TierManagerView {
  private api: DeptexApi;
  private rowsBox: HTMLDivElement;
  private statusLine: HTMLDivElement;
  private idInput: HTMLInputElement;
  private nameInput: HTMLInputElement;
  private importanceInput: HTMLInputElement;

  constructor(root: HTMLElement, api: DeptexApi) {
    this.api = api;
    this.statusLine = make("div", "view-status");
    this.rowsBox = make("div", "tier-rows");

    const form = make("div", "controls tier-form");
    this.idInput = make("input", "tier-id-input");
    this.idInput.placeholder = "tier id (e.g. tier-1)";
    this.nameInput = make("input", "tier-name-input");
    this.nameInput.placeholder = "display name";
    this.importanceInput = make("input", "tier-importance-input");
    this.importanceInput.type = "number";
    this.importanceInput.step = "0.1";
    this.importanceInput.min = "0";
    this.importanceInput.value = "1.0";
    const addBtn = make("button", "btn", "Add tier");
    addBtn.type = "button";
    addBtn.addEventListener("click", () => void this.create());
    form.appendChild(this.idInput);
    form.appendChild(this.nameInput);
    form.appendChild(this.importanceInput);
    form.appendChild(addBtn);

    root.appendChild(form);
    root.appendChild(this.statusLine);
    root.appendChild(this.rowsBox);
  }

  async init(): Promise<void> {
    await this.refresh();
  }

  async refresh(): Promise<void> {
    try {
      const tiers = await this.api.listTiers();
      this.render(tiers);
      this.statusLine.innerText = "";
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  private render(tiers: TierRecord[]): void {
    clear(this.rowsBox);
    if (tiers.length === 0) {
      emptyNote(this.rowsBox, "No tiers defined yet.");
      return;
    }
    for (const tier of tiers) {
      this.rowsBox.appendChild(this.tierRow(tier));
    }
  }

  private tierRow(tier: TierRecord): HTMLElement {
    const row = make("div", "tier-row");
    row.dataset.tier = tier.tier_id;
    row.appendChild(make("span", "tier-name", `${tier.name} (${tier.tier_id})`));

    const slider = make("input", "tier-slider");
    slider.type = "range";
    slider.min = "0";
    slider.max = "5";
    slider.step = "0.1";
    slider.value = String(tier.importance);
    const readout = make("span", "tier-readout", String(tier.importance));
    slider.addEventListener("input", () => {
      readout.innerText = slider.value;
    });

    const saveBtn = make("button", "btn", "Save");
    saveBtn.type = "button";
    saveBtn.addEventListener("click", () => void this.saveImportance(tier.tier_id, slider.value));

    row.appendChild(slider);
    row.appendChild(readout);
    row.appendChild(saveBtn);
    return row;
  }

  async saveImportance(tierId: string, raw: string): Promise<void> {
    try {
      const updated = await this.api.updateTier(tierId, { importance: Number(raw) });
      await this.refresh();
      this.statusLine.innerText = `${updated.tier_id} importance now ${String(updated.importance)}`;
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  async create(): Promise<void> {
    try {
      await this.api.createTier({
        tier_id: this.idInput.value,
        name: this.nameInput.value || this.idInput.value,
        importance: Number(this.importanceInput.value),
      });
      this.idInput.value = "";
      this.nameInput.value = "";
      await this.refresh();
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }
}
