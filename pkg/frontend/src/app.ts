import { ApiClient } from "./api.js";
import { DashboardStore } from "./state.js";
import { SwapController } from "./swap.js";
import { renderJudgeTable, renderVentureTable, violationText } from "./tables.js";
import type { SwapDraft } from "./types.js";

// DOM glue: everything interesting lives in the testable modules above.
export async function mountDashboard(root: HTMLElement, baseUrl: string, bearerToken?: string) {
  const api = new ApiClient({ baseUrl, bearerToken });
  const store = new DashboardStore();
  const swaps = new SwapController(api, store);

  store.loadAssignment(await api.getAssignment());
  store.loadJudges(await api.getJudges());

  const trackSelect = document.createElement("select");
  trackSelect.append(new Option("All tracks", ""));
  for (const track of store.tracks()) {
    trackSelect.append(new Option(track, track));
  }
  const ventureSection = document.createElement("section");
  const judgeSection = document.createElement("section");
  const banner = document.createElement("div");
  banner.className = "banner";

  function redraw() {
    ventureSection.innerHTML = renderVentureTable(store.filteredVentures());
    judgeSection.innerHTML = renderJudgeTable(store.sortedJudges());
  }

  trackSelect.addEventListener("change", () => {
    store.filters.track = trackSelect.value || null;
    redraw();
  });

  root.append(trackSelect, banner, ventureSection, judgeSection);
  redraw();

  let draft: SwapDraft | null = null;
  ventureSection.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const judgeId = target.dataset.judge;
    const ventureId = target.closest("tr")?.dataset.venture;
    if (!judgeId || !ventureId) {
      return;
    }
    try {
      draft = await swaps.beginSwap(ventureId, judgeId);
      if (draft.candidates.length === 0) {
        banner.textContent = "no feasible replacement";
        return;
      }
      draft = swaps.select(draft, draft.candidates[0].judge_id);
      const { outcome, draft: next } = await swaps.commit(draft);
      draft = next;
      if (outcome.kind === "committed") {
        banner.textContent = `swap committed; assignment version ${outcome.version}`;
        store.loadJudges(await api.getJudges());
        redraw();
      } else if (outcome.kind === "violation") {
        banner.textContent = next.violations.map(violationText).join("; ");
      } else {
        banner.textContent = `assignment changed meanwhile (now v${outcome.currentVersion}); draft rebased`;
        redraw();
      }
    } catch (error) {
      banner.textContent = `request failed: ${String(error)}`;
    }
  });
}
