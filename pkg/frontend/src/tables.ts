import type { JudgeView, VentureView, Violation } from "./types.js";

export interface Badge {
  label: string;
  ok: boolean;
}

export interface VentureRow {
  ventureId: string;
  track: string;
  quality: number;
  judges: { judgeId: string; similarity: number }[];
  badges: Badge[];
}

export interface JudgeRow {
  judgeId: string;
  tracks: string;
  load: string;
  atCapacity: boolean;
  ventures: string;
}

export function ventureRow(venture: VentureView): VentureRow {
  const panelOk = venture.judges.length === venture.panel_size_required;
  return {
    ventureId: venture.venture_id,
    track: venture.track,
    quality: venture.quality,
    judges: venture.judges.map((seat) => ({ judgeId: seat.judge_id, similarity: seat.similarity })),
    badges: [
      {
        label: `panel ${venture.judges.length}/${venture.panel_size_required}`,
        ok: panelOk,
      },
    ],
  };
}

export function judgeRow(judge: JudgeView): JudgeRow {
  return {
    judgeId: judge.judge_id,
    tracks: judge.tracks.join(", "),
    load: `${judge.load}/${judge.load_max}`,
    atCapacity: judge.load >= judge.load_max,
    ventures: judge.ventures.join(", "),
  };
}

export function violationText(violation: Violation): string {
  switch (violation.kind) {
    case "coi":
      return `conflict of interest: ${violation.judge_id} may not review ${violation.venture_id}`;
    case "load_max":
      return `load ${violation.observed}/${violation.required}: ${violation.judge_id} is at capacity`;
    case "panel_size":
      return `panel has ${violation.observed} of ${violation.required} judges`;
    case "not_assigned":
      return `${violation.judge_id} is not on this panel`;
    case "already_assigned":
      return `${violation.judge_id} is already on this panel`;
    default:
      return `${violation.kind}: ${violation.judge_id ?? ""} ${violation.venture_id ?? ""}`.trim();
  }
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderVentureTable(ventures: VentureView[]): string {
  if (ventures.length === 0) {
    return '<p class="empty-state">No ventures to show.</p>';
  }
  const rows = ventures.map((venture) => {
    const row = ventureRow(venture);
    const badges = row.badges
      .map((b) => `<span class="badge ${b.ok ? "ok" : "bad"}">${escapeHtml(b.label)}</span>`)
      .join(" ");
    const seats = row.judges
      .map(
        (seat) =>
          `<li data-judge="${escapeHtml(seat.judgeId)}">${escapeHtml(seat.judgeId)} ` +
          `(${seat.similarity.toFixed(6)})</li>`,
      )
      .join("");
    return (
      `<tr data-venture="${escapeHtml(row.ventureId)}">` +
      `<td>${escapeHtml(row.ventureId)}</td>` +
      `<td>${escapeHtml(row.track)}</td>` +
      `<td>${row.quality.toFixed(6)}</td>` +
      `<td>${badges}</td>` +
      `<td><ul>${seats}</ul></td>` +
      `</tr>`
    );
  });
  return (
    "<table><thead><tr><th>Venture</th><th>Track</th><th>Quality</th>" +
    "<th>Status</th><th>Panel</th></tr></thead><tbody>" +
    rows.join("") +
    "</tbody></table>"
  );
}

export function renderJudgeTable(judges: JudgeView[]): string {
  if (judges.length === 0) {
    return '<p class="empty-state">No judges to show.</p>';
  }
  const rows = judges.map((judge) => {
    const row = judgeRow(judge);
    return (
      `<tr data-judge="${escapeHtml(row.judgeId)}">` +
      `<td>${escapeHtml(row.judgeId)}</td>` +
      `<td>${escapeHtml(row.tracks)}</td>` +
      `<td class="${row.atCapacity ? "at-capacity" : ""}">${escapeHtml(row.load)}</td>` +
      `<td>${escapeHtml(row.ventures)}</td>` +
      `</tr>`
    );
  });
  return (
    "<table><thead><tr><th>Judge</th><th>Tracks</th><th>Load</th><th>Ventures</th></tr></thead>" +
    "<tbody>" +
    rows.join("") +
    "</tbody></table>"
  );
}
