import { DeptexApi } from "../api.js";
import { clear, emptyNote, errorMessage, make, pill } from "../dom.js";
import type { BlastAsset, BlastRadius } from "../types.js";

/** Pick a signal, see which units and assets it lands on. */
export class BlastRadiusView {
  private api: DeptexApi;
  private signalSelect: HTMLSelectElement;
  private treeBox: HTMLDivElement;
  private statusLine: HTMLDivElement;

  constructor(root: HTMLElement, api: DeptexApi) {
    this.api = api;
    const controls = make("div", "controls");
    this.signalSelect = make("select", "br-signal");
    const loadBtn = make("button", "btn", "Show blast radius");
    loadBtn.type = "button";
    loadBtn.addEventListener("click", () => void this.load());
    const wrap = make("label", "field");
    wrap.appendChild(make("span", "field-name", "Signal"));
    wrap.appendChild(this.signalSelect);
    controls.appendChild(wrap);
    controls.appendChild(loadBtn);
    this.statusLine = make("div", "view-status");
    this.treeBox = make("div", "blast-tree");
    root.appendChild(controls);
    root.appendChild(this.statusLine);
    root.appendChild(this.treeBox);
    this.signalSelect.addEventListener("change", () => void this.load());
  }

  async init(): Promise<void> {
    const signals = await this.api.listSignals();
    clear(this.signalSelect);
    for (const sig of signals) {
      const opt = make("option", "", String(sig.external_id ?? sig.id));
      opt.value = sig.id;
      this.signalSelect.appendChild(opt);
    }
    if (this.signalSelect.value) await this.load();
  }

  async load(): Promise<void> {
    const ref = this.signalSelect.value;
    if (!ref) return;
    try {
      const blast = await this.api.blastRadius(ref);
      this.render(blast);
      this.statusLine.innerText = "";
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  private render(blast: BlastRadius): void {
    clear(this.treeBox);
    const header = make("div", "blast-header");
    header.appendChild(make("strong", "", blast.external_id));
    header.appendChild(make("span", "sev", ` severity ${String(blast.severity)}`));
    header.appendChild(
      make(
        "span",
        "counts",
        ` touches ${String(blast.asset_count)} assets across ${String(blast.unit_count)} units`,
      ),
    );
    this.treeBox.appendChild(header);

    if (blast.units.length === 0 && blast.assets.length === 0) {
      emptyNote(this.treeBox, "Nothing reachable from this signal.");
      return;
    }

    const tree = make("ul", "blast-root");

    const unitBranch = make("li", "branch");
    unitBranch.appendChild(make("div", "branch-name", "Units"));
    const unitList = make("ul", "unit-list");
    for (const unit of blast.units) {
      const li = make("li", "unit-node");
      li.dataset.unit = unit.id;
      li.appendChild(make("span", "unit-name", unit.name));
      li.appendChild(make("span", "unit-risk", ` risk ${String(unit.risk)}`));
      unitList.appendChild(li);
    }
    if (blast.units.length === 0) emptyNote(unitBranch, "No owning units reached.");
    unitBranch.appendChild(unitList);
    tree.appendChild(unitBranch);

    const assetBranch = make("li", "branch");
    assetBranch.appendChild(make("div", "branch-name", "Assets"));
    assetBranch.appendChild(renderAssets(blast.assets));
    tree.appendChild(assetBranch);

    this.treeBox.appendChild(tree);
  }
}

function renderAssets(assets: BlastAsset[]): HTMLElement {
  const list = make("ul", "asset-list");
  for (const asset of assets) {
    const li = make("li", "asset-node");
    li.dataset.asset = asset.id;
    li.appendChild(make("span", "asset-name", asset.name));
    if (asset.tier !== null) {
      li.appendChild(pill(asset.tier, "plain"));
    }
    if (asset.depscore !== null) {
      li.appendChild(pill(`depscore ${String(asset.depscore)}`, "warn"));
    }
    if (asset.ownership_gap) {
      li.appendChild(pill("unowned", "bad"));
    }
    list.appendChild(li);
  }
  return list;
}
