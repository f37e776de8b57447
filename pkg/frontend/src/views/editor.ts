import { ApiFault, DeptexApi } from "../api.js";
import { clear, emptyNote, errorMessage, make, pill, prettyJson } from "../dom.js";
import type { DryRunOutcome, DryRunResult, PolicyContext } from "../types.js";

const CONTEXTS: PolicyContext[] = ["status", "policy", "pr", "notification"];

const STARTER: Record<PolicyContext, string> = {
  status: 'if asset.depscore > 80 {\n  transition("quarantined");\n}\n',
  policy: 'if "GPL-3.0" in component.licenses {\n  violation("copyleft license");\n}\n',
  pr: "allow;\n",
  notification: 'notify("ops", {signal: signal.external_id});\n',
};

/**
 * Write a policy, pick a binding, run it against the sandbox without
 * touching stored state, and read the trace back.
 */
export class PolicyEditorView {
  private api: DeptexApi;
  private contextSelect: HTMLSelectElement;
  private storedSelect: HTMLSelectElement;
  private sourceArea: HTMLTextAreaElement;
  private refsArea: HTMLTextAreaElement;
  private bindingArea: HTMLTextAreaElement;
  private outcomeBox: HTMLDivElement;
  private errorBox: HTMLDivElement;
  private traceBox: HTMLDivElement;
  private statusLine: HTMLDivElement;

  constructor(root: HTMLElement, api: DeptexApi) {
    this.api = api;

    const controls = make("div", "controls");
    this.contextSelect = make("select", "ed-context");
    for (const ctx of CONTEXTS) {
      const opt = make("option", "", ctx);
      opt.value = ctx;
      this.contextSelect.appendChild(opt);
    }
    this.contextSelect.addEventListener("change", () => {
      this.sourceArea.value = STARTER[this.context()];
    });
    this.storedSelect = make("select", "ed-stored");
    const runBtn = make("button", "btn run", "Dry run");
    runBtn.type = "button";
    runBtn.addEventListener("click", () => void this.run());
    const runStoredBtn = make("button", "btn", "Dry run stored");
    runStoredBtn.type = "button";
    runStoredBtn.addEventListener("click", () => void this.runStored());
    const saveBtn = make("button", "btn", "Save policy");
    saveBtn.type = "button";
    saveBtn.addEventListener("click", () => void this.save());
    controls.appendChild(labelled("Context", this.contextSelect));
    controls.appendChild(labelled("Stored", this.storedSelect));
    controls.appendChild(runBtn);
    controls.appendChild(runStoredBtn);
    controls.appendChild(saveBtn);

    const editors = make("div", "editor-grid");
    this.sourceArea = make("textarea", "ed-source");
    this.sourceArea.rows = 12;
    this.sourceArea.spellcheck = false;
    this.sourceArea.value = STARTER.status;
    this.refsArea = make("textarea", "ed-refs");
    this.refsArea.rows = 3;
    this.refsArea.spellcheck = false;
    this.refsArea.value = '{"asset": ""}';
    this.bindingArea = make("textarea", "ed-binding");
    this.bindingArea.rows = 8;
    this.bindingArea.spellcheck = false;
    this.bindingArea.value = "{}";
    const buildBtn = make("button", "btn", "Build binding from refs");
    buildBtn.type = "button";
    buildBtn.addEventListener("click", () => void this.buildBinding());

    const left = make("div", "editor-col");
    left.appendChild(make("div", "col-title", "Policy source"));
    left.appendChild(this.sourceArea);
    const right = make("div", "editor-col");
    right.appendChild(make("div", "col-title", "Binding fixture"));
    right.appendChild(this.refsArea);
    right.appendChild(buildBtn);
    right.appendChild(this.bindingArea);
    editors.appendChild(left);
    editors.appendChild(right);

    this.statusLine = make("div", "view-status");
    this.errorBox = make("div", "ed-error");
    this.outcomeBox = make("div", "ed-outcome");
    this.traceBox = make("div", "ed-trace");

    root.appendChild(controls);
    root.appendChild(editors);
    root.appendChild(this.statusLine);
    root.appendChild(this.errorBox);
    root.appendChild(this.outcomeBox);
    root.appendChild(this.traceBox);
  }

  async init(): Promise<void> {
    const policies = await this.api.listPolicies();
    clear(this.storedSelect);
    const none = make("option", "", "(none)");
    none.value = "";
    this.storedSelect.appendChild(none);
    for (const pol of policies) {
      const opt = make("option", "", `${pol.policy_id} [${pol.context}]`);
      opt.value = pol.policy_id;
      this.storedSelect.appendChild(opt);
    }
  }

  context(): PolicyContext {
    return this.contextSelect.value as PolicyContext;
  }

  private binding(): Record<string, unknown> | null {
    try {
      const parsed: unknown = JSON.parse(this.bindingArea.value);
      if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
        this.statusLine.innerText = "binding must be a JSON object";
        return null;
      }
      return parsed as Record<string, unknown>;
    } catch {
      this.statusLine.innerText = "binding is not valid JSON";
      return null;
    }
  }

  async buildBinding(): Promise<void> {
    let refs: Record<string, unknown>;
    try {
      refs = JSON.parse(this.refsArea.value) as Record<string, unknown>;
    } catch {
      this.statusLine.innerText = "refs must be valid JSON";
      return;
    }
    try {
      const binding = await this.api.buildBinding(this.context(), refs);
      this.bindingArea.value = prettyJson(binding);
      this.statusLine.innerText = "";
    } catch (e) {
      this.statusLine.innerText = errorMessage(e);
    }
  }

  async run(): Promise<void> {
    const binding = this.binding();
    if (binding === null) return;
    await this.execute(() =>
      this.api.dryRunAdhoc(this.context(), this.sourceArea.value, binding),
    );
  }

  async runStored(): Promise<void> {
    const policyId = this.storedSelect.value;
    if (!policyId) {
      this.statusLine.innerText = "pick a stored policy first";
      return;
    }
    const binding = this.binding();
    if (binding === null) return;
    await this.execute(() => this.api.dryRunStored(policyId, binding));
  }

  async save(): Promise<void> {
    const policyId = window.prompt("policy id?") ?? "";
    if (!policyId) return;
    try {
      await this.api.createPolicy({
        policy_id: policyId,
        context: this.context(),
        source: this.sourceArea.value,
      });
      await this.init();
      this.statusLine.innerText = `saved ${policyId}`;
    } catch (e) {
      this.showFault(e);
    }
  }

  private async execute(call: () => Promise<DryRunResult>): Promise<void> {
    clear(this.errorBox);
    clear(this.outcomeBox);
    clear(this.traceBox);
    this.statusLine.innerText = "";
    try {
      const result = await call();
      this.renderResult(result);
    } catch (e) {
      this.showFault(e);
    }
  }

  private showFault(e: unknown): void {
    clear(this.errorBox);
    if (!(e instanceof ApiFault)) {
      this.statusLine.innerText = errorMessage(e);
      return;
    }
    const body = e.body;
    const head = make("div", "fault-head");
    head.appendChild(pill(body.code, "bad"));
    head.appendChild(make("span", "fault-msg", ` ${body.message}`));
    this.errorBox.appendChild(head);

    if (body.code === "syntax_error" && typeof body.line === "number") {
      this.errorBox.appendChild(this.syntaxMarker(body.line, body.col ?? 1));
    }
    if (typeof body.kind === "string") {
      this.errorBox.appendChild(make("div", "fault-detail", `budget dimension: ${body.kind}`));
    }
    if (typeof body.url === "string") {
      this.errorBox.appendChild(make("div", "fault-detail", `blocked url: ${body.url}`));
    }
    if (Array.isArray(body.partial_trace)) {
      const partial = make("pre", "trace-pre");
      partial.innerText = prettyJson(body.partial_trace);
      this.errorBox.appendChild(make("div", "col-title", "Partial trace"));
      this.errorBox.appendChild(partial);
    }
  }

  // Point at the offending spot: echo the source line, then a caret row.
  private syntaxMarker(line: number, col: number): HTMLElement {
    const box = make("div", "syntax-marker");
    const lines = this.sourceArea.value.split("\n");
    const text = lines[line - 1] ?? "";
    const gutter = `${String(line)} | `;
    const srcLine = make("pre", "marker-line", gutter + text);
    const caret = make("pre", "marker-caret");
    const indent = col > 1 ? col - 1 : 0;
    caret.innerText = " ".repeat(gutter.length + indent) + "^";
    box.appendChild(srcLine);
    box.appendChild(caret);
    box.dataset.line = String(line);
    box.dataset.col = String(col);
    return box;
  }

  private renderResult(result: DryRunResult): void {
    this.outcomeBox.appendChild(renderOutcome(result.outcome));

    const tracePane = make("div", "trace-pane");
    tracePane.appendChild(make("div", "col-title", `Trace (${String(result.trace.length)} steps)`));
    const tracePre = make("pre", "trace-pre");
    tracePre.innerText = prettyJson(result.trace);
    tracePane.appendChild(tracePre);

    if (result.http_log.length > 0) {
      tracePane.appendChild(make("div", "col-title", "HTTP calls"));
      const httpPre = make("pre", "trace-pre");
      httpPre.innerText = prettyJson(result.http_log);
      tracePane.appendChild(httpPre);
    }
    if (result.logs.length > 0) {
      tracePane.appendChild(make("div", "col-title", "Logs"));
      const logList = make("ul", "log-list");
      for (const entry of result.logs) {
        logList.appendChild(make("li", "", entry));
      }
      tracePane.appendChild(logList);
    }
    this.traceBox.appendChild(tracePane);
  }
}

function labelled(text: string, control: HTMLElement): HTMLLabelElement {
  const wrap = make("label", "field");
  wrap.appendChild(make("span", "field-name", text));
  wrap.appendChild(control);
  return wrap;
}

// The outcome dict's keys say which context ran; no discriminator field.
function renderOutcome(outcome: DryRunOutcome): HTMLElement {
  const box = make("div", "outcome-box");
  if ("decision" in outcome) {
    box.appendChild(pill(outcome.decision, outcome.decision === "allow" ? "ok" : "bad"));
    if (outcome.comment !== "") {
      box.appendChild(make("div", "outcome-comment", outcome.comment));
    }
    return box;
  }
  if ("pass" in outcome) {
    box.appendChild(pill(outcome.pass ? "pass" : "violations", outcome.pass ? "ok" : "bad"));
    const list = make("ul", "violation-list");
    for (const v of outcome.violations) {
      list.appendChild(make("li", "", v));
    }
    box.appendChild(list);
    return box;
  }
  if ("transition_to" in outcome) {
    if (outcome.transition_to === null) {
      box.appendChild(pill("no transition", "plain"));
    } else {
      box.appendChild(pill(`transition: ${outcome.transition_to}`, "warn"));
    }
    return box;
  }
  if ("dispatches" in outcome) {
    box.appendChild(pill(`${String(outcome.dispatches.length)} notifications`, "warn"));
    const list = make("ul", "dispatch-list");
    for (const d of outcome.dispatches) {
      const li = make("li", "");
      li.appendChild(make("code", "", d.channel_id));
      li.appendChild(make("span", "", ` ${prettyJson(d.payload)}`));
      list.appendChild(li);
    }
    box.appendChild(list);
    return box;
  }
  emptyNote(box, "Unrecognized outcome shape.");
  return box;
}
