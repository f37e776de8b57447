import { DeptexApi } from "./api.js";
import { el, errorMessage } from "./dom.js";
import { LeaderboardView } from "./views/leaderboard.js";
import { BlastRadiusView } from "./views/blast.js";
import { PolicyEditorView } from "./views/editor.js";
import { TierManagerView } from "./views/tiers.js";
import { StatusBoardView } from "./views/statuses.js";

const POLL_MS = 5000;

type ViewHandle = {
  init: () => Promise<void>;
};

function boot(): void {
  const api = new DeptexApi("");

  const tokenInput = el<HTMLInputElement>("token-input");
  tokenInput.addEventListener("change", () => {
    api.setToken(tokenInput.value.trim());
  });

  const leaderboard = new LeaderboardView(el("view-leaderboard"), api);
  const views: Record<string, ViewHandle> = {
    leaderboard,
    blast: new BlastRadiusView(el("view-blast"), api),
    editor: new PolicyEditorView(el("view-editor"), api),
    tiers: new TierManagerView(el("view-tiers"), api),
    statuses: new StatusBoardView(el("view-statuses"), api),
  };
  const initialized = new Set<string>();
  const globalStatus = el("global-status");

  let activeTab = "leaderboard";
  let pollTimer: number | null = null;

  function stopPolling(): void {
    if (pollTimer !== null) {
      window.clearInterval(pollTimer);
      pollTimer = null;
    }
  }

  // Only the board that is on screen gets refreshed on a timer.
  function startPolling(): void {
    stopPolling();
    pollTimer = window.setInterval(() => {
      void leaderboard.refresh();
    }, POLL_MS);
  }

  async function activate(tab: string): Promise<void> {
    activeTab = tab;
    for (const name of Object.keys(views)) {
      el(`view-${name}`).classList.toggle("hidden", name !== tab);
      el(`tab-${name}`).classList.toggle("active", name === tab);
    }
    if (tab === "leaderboard") {
      startPolling();
    } else {
      stopPolling();
    }
    if (!initialized.has(tab)) {
      try {
        await views[tab].init();
        initialized.add(tab);
        globalStatus.innerText = "";
      } catch (e) {
        globalStatus.innerText = errorMessage(e);
      }
    }
  }

  for (const name of Object.keys(views)) {
    el(`tab-${name}`).addEventListener("click", () => {
      void activate(name);
    });
  }

  void api
    .health()
    .then((h) => {
      globalStatus.innerText = `connected, ${String(h.nodes)} nodes`;
    })
    .catch((e: unknown) => {
      globalStatus.innerText = errorMessage(e);
    });
  void activate(activeTab);
}

boot();
