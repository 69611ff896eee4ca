import type { AssignmentView, JudgeView, VentureView } from "./types.js";

export type VentureSortKey = "venture_id" | "quality" | "track";
export type JudgeSortKey = "judge_id" | "load";

export interface Filters {
  track: string | null;
  venture: string | null;
  judge: string | null;
}

// Holds the latest server payloads plus display state. Every number shown by
// the dashboard comes straight from these payloads.
export class DashboardStore {
  assignment: AssignmentView | null = null;
  judges: JudgeView[] = [];
  filters: Filters = { track: null, venture: null, judge: null };
  ventureSort: VentureSortKey = "venture_id";
  ventureSortAscending = true;

  get version(): number {
    return this.assignment?.version ?? 0;
  }

  loadAssignment(assignment: AssignmentView): void {
    this.assignment = assignment;
  }

  loadJudges(judges: JudgeView[]): void {
    this.judges = judges;
  }

  tracks(): string[] {
    const seen = new Set<string>();
    for (const venture of this.assignment?.ventures ?? []) {
      seen.add(venture.track);
    }
    return [...seen].sort();
  }

  filteredVentures(): VentureView[] {
    let ventures = [...(this.assignment?.ventures ?? [])];
    const { track, venture, judge } = this.filters;
    if (track !== null) {
      ventures = ventures.filter((v) => v.track === track);
    }
    if (venture !== null) {
      ventures = ventures.filter((v) => v.venture_id === venture);
    }
    if (judge !== null) {
      ventures = ventures.filter((v) => v.judges.some((seat) => seat.judge_id === judge));
    }
    const key = this.ventureSort;
    const direction = this.ventureSortAscending ? 1 : -1;
    ventures.sort((a, b) => {
      const left = a[key];
      const right = b[key];
      if (left === right) {
        return a.venture_id < b.venture_id ? -1 : 1;
      }
      return left < right ? -direction : direction;
    });
    return ventures;
  }

  sortedJudges(key: JudgeSortKey = "judge_id", ascending = true): JudgeView[] {
    const judges = [...this.judges];
    const direction = ascending ? 1 : -1;
    judges.sort((a, b) => {
      if (a[key] === b[key]) {
        return a.judge_id < b.judge_id ? -1 : 1;
      }
      return a[key] < b[key] ? -direction : direction;
    });
    return judges;
  }
}
