/** Patient table model: rows sorted by predicted risk, toggleable order. */

import type { PatientRecord } from "./api.js";

export interface TableState {
  rows: PatientRecord[];
  descending: boolean;
}

export function buildTable(records: PatientRecord[]): TableState {
  return { rows: sortRows(records, true), descending: true };
}

export function toggleSort(state: TableState): TableState {
  const descending = !state.descending;
  return { rows: sortRows(state.rows, descending), descending };
}

function sortRows(records: PatientRecord[], descending: boolean): PatientRecord[] {
  const rows = [...records].sort((a, b) =>
    descending ? b.risk - a.risk || a.id - b.id : a.risk - b.risk || a.id - b.id,
  );
  return rows;
}

export function renderTableHtml(
  state: TableState,
  columns: string[],
  selectedId: number | null,
): string {
  if (state.rows.length === 0) {
    return `<p class="empty">No records in this split.</p>`;
  }
  const arrow = state.descending ? "&darr;" : "&uarr;";
  const head =
    `<tr><th>id</th><th class="sortable" data-sort="risk">risk ${arrow}</th>` +
    columns.map((c) => `<th>${c}</th>`).join("") +
    `</tr>`;
  const body = state.rows
    .map((r) => {
      const cls = r.id === selectedId ? ` class="selected"` : "";
      const cells = columns
        .map((c) => `<td>${formatCell(r.features[c])}</td>`)
        .join("");
      return (
        `<tr${cls} data-id="${r.id}"><td>${r.id}</td>` +
        `<td>${r.risk.toFixed(3)}</td>${cells}</tr>`
      );
    })
    .join("");
  return `<table class="patients"><thead>${head}</thead><tbody>${body}</tbody></table>`;
}

function formatCell(v: number | undefined): string {
  if (v === undefined) return "";
  return Math.abs(v) >= 1000 ? v.toFixed(0) : `${+v.toFixed(2)}`;
}
