// Payload shapes returned by the assignment service. The dashboard renders
// these verbatim and never computes similarity client-side.

export interface PanelSeat {
  judge_id: string;
  similarity: number;
}

export interface VentureView {
  venture_id: string;
  track: string;
  quality: number;
  panel_size_required: number;
  judges: PanelSeat[];
}

export interface AssignmentPair {
  judge_id: string;
  venture_id: string;
  similarity: number;
  track: string;
}

export interface AssignmentView {
  version: number;
  ventures: VentureView[];
  pairs: AssignmentPair[];
}

export interface JudgeView {
  judge_id: string;
  tracks: string[];
  load: number;
  load_max: number;
  ventures: string[];
}

export interface SuggestionCandidate {
  judge_id: string;
  similarity: number;
}

export interface SuggestionsResponse {
  venture_id: string;
  removed_judge_id: string;
  candidates: SuggestionCandidate[];
}

export interface Violation {
  kind: string;
  judge_id?: string | null;
  venture_id?: string | null;
  observed?: number;
  required?: number;
}

export interface SwapRequest {
  venture_id: string;
  remove_judge_id: string;
  add_judge_id: string;
  expected_version: number;
}

export interface SwapSuccess {
  version: number;
  venture_id: string;
  quality: number;
}

export type SwapOutcome =
  | { kind: "committed"; version: number; quality: number }
  | { kind: "violation"; violations: Violation[] }
  | { kind: "conflict"; currentVersion: number };

export interface SwapDraft {
  ventureId: string;
  removeJudgeId: string;
  candidates: SuggestionCandidate[];
  selected: string | null;
  expectedVersion: number;
  violations: Violation[];
}
