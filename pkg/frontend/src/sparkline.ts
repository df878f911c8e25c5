/** SVG sparkline of the session history: one point per attempt,
 * distance on the y axis, infeasible attempts drawn as hollow marks on
 * the baseline so the iterate-and-compare loop stays visible. */

import type { HistoryEntry } from "./state.js";

export function sparklineSvg(history: HistoryEntry[], width = 220, height = 48): string {
  if (history.length === 0) return `<svg width="${width}" height="${height}"></svg>`;
  const mads = history.map((h) => h.mad).filter((m): m is number => m !== null);
  const maxMad = mads.length ? Math.max(...mads) : 1;
  const pad = 6;
  const step = history.length > 1 ? (width - 2 * pad) / (history.length - 1) : 0;
  const y = (m: number) => height - pad - (m / (maxMad || 1)) * (height - 2 * pad);
  const marks: string[] = [];
  const pathPts: string[] = [];
  history.forEach((h, i) => {
    const cx = pad + i * step;
    if (h.mad === null) {
      marks.push(
        `<circle cx="${cx.toFixed(1)}" cy="${(height - pad).toFixed(1)}" r="3" ` +
          `class="infeasible" fill="none" stroke="currentColor"/>`,
      );
    } else {
      const cy = y(h.mad);
      pathPts.push(`${cx.toFixed(1)},${cy.toFixed(1)}`);
      marks.push(
        `<circle cx="${cx.toFixed(1)}" cy="${cy.toFixed(1)}" r="3" class="found"/>` +
          `<title>delta=${h.delta.toFixed(2)} mad=${h.mad.toFixed(3)}</title>`,
      );
    }
  });
  const path = pathPts.length > 1
    ? `<polyline points="${pathPts.join(" ")}" fill="none" stroke="currentColor"/>`
    : "";
  return `<svg width="${width}" height="${height}" class="sparkline">${path}${marks.join("")}</svg>`;
}
