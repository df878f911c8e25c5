/**
 * Intervention card: the render model for one /map response.
 *
 * Numbers are passed through verbatim from the response — formatting
 * happens at the last moment and only for display strings, so the
 * card's numeric fields stay exactly equal to the service's.
 */

import type { MapResponse } from "./api.js";

export interface CardRow {
  name: string;
  before: number;
  after: number;
  delta: number;
}

export interface InterventionCard {
  kind: "found" | "infeasible";
  recordId: number;
  delta: number;
  riskBefore: number;
  riskAfter: number | null;
  mad: number | null;
  achievedDrop: number | null;
  rows: CardRow[];
  diagnosis: string[]; // per-cell reasons for the infeasible card
  binaryNote: string | null;
}

export function buildCard(resp: MapResponse): InterventionCard {
  if (resp.status === "found") {
    let note: string | null = null;
    if (resp.binary_rounding) {
      note = resp.binary_rounding.meets_delta
        ? "binary variables snapped to 0/1 still reach the required drop"
        : "binary variables snapped to 0/1 no longer reach the required drop";
    }
    return {
      kind: "found",
      recordId: resp.record_id,
      delta: resp.delta,
      riskBefore: resp.risk_before,
      riskAfter: resp.risk_after ?? null,
      mad: resp.mad ?? null,
      achievedDrop: resp.achieved_drop ?? null,
      rows: (resp.per_feature ?? []).map((p) => ({
        name: p.name,
        before: p.before,
        after: p.after,
        delta: p.delta,
      })),
      diagnosis: [],
      binaryNote: note,
    };
  }
  const reasons = new Map<string, number>();
  for (const cell of resp.per_cell) {
    reasons.set(cell.reason, (reasons.get(cell.reason) ?? 0) + 1);
  }
  return {
    kind: "infeasible",
    recordId: resp.record_id,
    delta: resp.delta,
    riskBefore: resp.risk_before,
    riskAfter: null,
    mad: null,
    achievedDrop: null,
    rows: [],
    diagnosis: [...reasons.entries()].map(([r, n]) => `${n} cells: ${r}`),
    binaryNote: null,
  };
}

const fmt = (v: number, digits = 3): string =>
  Math.abs(v) >= 1000 ? v.toFixed(0) : v.toFixed(digits);

export function renderCardHtml(card: InterventionCard): string {
  if (card.kind === "infeasible") {
    const why = card.diagnosis.map((d) => `<li>${d}</li>`).join("");
    return (
      `<div class="card infeasible"><h3>No intervention within these controls</h3>` +
      `<p>required drop ${fmt(card.delta, 2)} from risk ${fmt(card.riskBefore, 2)}</p>` +
      `<ul class="diagnosis">${why}</ul></div>`
    );
  }
  const rows = card.rows
    .map(
      (r) =>
        `<tr><td>${r.name}</td><td>${fmt(r.before)}</td>` +
        `<td>${fmt(r.after)}</td><td class="delta">${r.delta >= 0 ? "+" : ""}${fmt(r.delta)}</td></tr>`,
    )
    .join("");
  const note = card.binaryNote ? `<p class="note">${card.binaryNote}</p>` : "";
  return (
    `<div class="card found"><h3>Minimal intervention</h3>` +
    `<p>risk ${fmt(card.riskBefore, 2)} &rarr; ${fmt(card.riskAfter ?? NaN, 2)}` +
    ` (drop ${fmt(card.achievedDrop ?? NaN, 2)}, distance ${fmt(card.mad ?? NaN)})</p>` +
    `<table><thead><tr><th>variable</th><th>now</th><th>target</th><th>change</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>${note}</div>`
  );
}
