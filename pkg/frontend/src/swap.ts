import type { ApiClient } from "./api.js";
import type { DashboardStore } from "./state.js";
import type { SwapDraft, SwapOutcome } from "./types.js";

// Swap lifecycle: remove a judge, review ranked replacements, commit. All
// constraint checking happens server-side; 409 responses are surfaced back
// into the draft for inline display.
export class SwapController {
  constructor(
    private api: ApiClient,
    private store: DashboardStore,
  ) {}

  async beginSwap(ventureId: string, removeJudgeId: string): Promise<SwapDraft> {
    const suggestions = await this.api.getSuggestions(ventureId, removeJudgeId);
    return {
      ventureId,
      removeJudgeId,
      candidates: suggestions.candidates,
      selected: null,
      expectedVersion: this.store.version,
      violations: [],
    };
  }

  select(draft: SwapDraft, judgeId: string): SwapDraft {
    if (!draft.candidates.some((c) => c.judge_id === judgeId)) {
      throw new Error(`judge ${judgeId} is not among the suggested replacements`);
    }
    return { ...draft, selected: judgeId, violations: [] };
  }

  canCommit(draft: SwapDraft): boolean {
    return draft.selected !== null && draft.violations.length === 0;
  }

  async commit(draft: SwapDraft): Promise<{ outcome: SwapOutcome; draft: SwapDraft }> {
    if (!this.canCommit(draft) || draft.selected === null) {
      throw new Error("draft is not ready to commit");
    }
    const outcome = await this.api.postSwap({
      venture_id: draft.ventureId,
      remove_judge_id: draft.removeJudgeId,
      add_judge_id: draft.selected,
      expected_version: draft.expectedVersion,
    });
    if (outcome.kind === "committed") {
      this.store.loadAssignment(await this.api.getAssignment());
      return { outcome, draft };
    }
    if (outcome.kind === "violation") {
      return { outcome, draft: { ...draft, violations: outcome.violations } };
    }
    // version conflict: rebase the draft onto the server's current state
    this.store.loadAssignment(await this.api.getAssignment());
    return {
      outcome,
      draft: { ...draft, expectedVersion: this.store.version, violations: [] },
    };
  }
}
