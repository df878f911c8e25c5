/**
 * DOM wiring for the explorer. One in-flight /map request per session:
 * newer requests abort the previous one, and any change of patient,
 * controls or delta marks the visible card as stale until the next
 * response lands.
 */

import { ApiClient, Meta, PatientRecord, ServiceError } from "./api.js";
import { buildCard, renderCardHtml } from "./card.js";
import { sparklineSvg } from "./sparkline.js";
import {
  SessionState,
  initialState,
  recordResult,
  requestBlocked,
  selectRecord,
  setDelta,
  toggleFeature,
} from "./state.js";
import { TableState, buildTable, renderTableHtml, toggleSort } from "./table.js";

const $ = (id: string) => document.getElementById(id)!;

export class ExplorerApp {
  private state!: SessionState;
  private meta!: Meta;
  private table!: TableState;
  private records: PatientRecord[] = [];
  private inflight: AbortController | null = null;

  constructor(private api: ApiClient) {}

  async start(): Promise<void> {
    try {
      this.meta = await this.api.meta();
      const resp = await this.api.records("test");
      this.records = resp.records;
    } catch (err) {
      $("banner").textContent = `failed to reach the service: ${String(err)}`;
      $("banner").classList.add("error");
      return;
    }
    this.state = initialState(this.meta.default_delta);
    this.table = buildTable(this.records);
    this.renderToggles();
    this.renderTable();
    this.renderDelta();
    this.renderCard();
    ($("delta") as HTMLInputElement).addEventListener("input", (ev) => {
      this.state = setDelta(this.state, Number((ev.target as HTMLInputElement).value));
      this.renderDelta();
      this.renderCard();
    });
    $("go").addEventListener("click", () => void this.requestIntervention());
  }

  private renderToggles(): void {
    const host = $("toggles");
    host.innerHTML = this.meta.allowed_accessible
      .map(
        (name) =>
          `<label><input type="checkbox" data-name="${name}" ` +
          `${this.state.accessible.has(name) ? "checked" : ""}/> ${name}</label>`,
      )
      .join("");
    host.querySelectorAll("input").forEach((el) =>
      el.addEventListener("change", () => {
        this.state = toggleFeature(
          this.state,
          (el as HTMLInputElement).dataset.name!,
          this.meta.allowed_accessible,
        );
        this.renderCard();
      }),
    );
  }

  private renderTable(): void {
    const host = $("patients");
    const preview = this.meta.allowed_accessible.slice(0, 4);
    host.innerHTML = renderTableHtml(this.table, preview, this.state.recordId);
    host.querySelectorAll("tbody tr").forEach((tr) =>
      tr.addEventListener("click", () => {
        this.state = selectRecord(this.state, Number((tr as HTMLElement).dataset.id));
        this.renderTable();
        this.renderCard();
      }),
    );
    host.querySelector("th.sortable")?.addEventListener("click", () => {
      this.table = toggleSort(this.table);
      this.renderTable();
    });
  }

  private renderDelta(): void {
    ($("delta") as HTMLInputElement).value = String(this.state.delta);
    $("delta-label").textContent = `required risk drop: ${this.state.delta.toFixed(2)}`;
  }

  private renderCard(): void {
    const blocked = requestBlocked(this.state);
    ($("go") as HTMLButtonElement).disabled = blocked !== null;
    $("validation").textContent = blocked ?? "";
    const card = $("card");
    if (this.state.lastResult === null) {
      card.innerHTML = `<p class="empty">no intervention requested yet</p>`;
    } else {
      card.innerHTML = renderCardHtml(buildCard(this.state.lastResult));
      card.classList.toggle("stale", this.state.stale);
    }
    $("history").innerHTML = sparklineSvg(this.state.history);
  }

  async requestIntervention(): Promise<void> {
    const blocked = requestBlocked(this.state);
    if (blocked !== null) return; // belt and braces: the button is disabled
    this.inflight?.abort();
    this.inflight = new AbortController();
    const signal = this.inflight.signal;
    $("validation").textContent = "computing...";
    try {
      const resp = await this.api.map(
        {
          record_id: this.state.recordId!,
          accessible: [...this.state.accessible].sort(),
          delta: this.state.delta,
        },
        signal,
      );
      if (signal.aborted) return; // a newer request superseded this one
      this.state = recordResult(this.state, resp);
      $("validation").textContent = "";
      this.renderCard();
    } catch (err) {
      if (signal.aborted) return;
      if (err instanceof ServiceError) {
        $("validation").textContent = err.body.message; // inline 4xx message
      } else {
        $("validation").textContent = `request failed: ${String(err)}`;
      }
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("patients")) {
  // ?api=http://host:port points the UI at a service on another origin
  const base = new URLSearchParams(window.location.search).get("api") ?? "";
  const app = new ExplorerApp(new ApiClient(base));
  void app.start();
}
