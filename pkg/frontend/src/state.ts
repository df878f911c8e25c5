/**
 * Session state: which patient, which controls, which risk drop, what
 * came back last, and the history of (controls, delta, mad) attempts.
 *
 * Pure data + pure transition functions; the DOM layer owns nothing.
 */

import type { MapResponse } from "./api.js";

export interface HistoryEntry {
  accessible: string[];
  delta: number;
  mad: number | null; // null marks an infeasible attempt
}

export interface SessionState {
  recordId: number | null;
  accessible: Set<string>;
  delta: number;
  lastResult: MapResponse | null;
  /** result no longer matches the current controls/delta/record */
  stale: boolean;
  history: HistoryEntry[];
}

export function initialState(defaultDelta: number): SessionState {
  return {
    recordId: null,
    accessible: new Set(),
    delta: clampDelta(defaultDelta),
    lastResult: null,
    stale: false,
    history: [],
  };
}

export function clampDelta(delta: number): number {
  if (!Number.isFinite(delta)) return 0.5;
  return Math.min(1.0, Math.max(0.01, delta));
}

export function selectRecord(state: SessionState, id: number): SessionState {
  return { ...state, recordId: id, stale: state.lastResult !== null };
}

export function setDelta(state: SessionState, delta: number): SessionState {
  return { ...state, delta: clampDelta(delta), stale: state.lastResult !== null };
}

export function toggleFeature(
  state: SessionState,
  name: string,
  allowed: string[],
): SessionState {
  if (!allowed.includes(name)) return state; // never widen past /meta
  const next = new Set(state.accessible);
  if (next.has(name)) next.delete(name);
  else next.add(name);
  return { ...state, accessible: next, stale: state.lastResult !== null };
}

/** Why a request cannot be issued right now, or null if it can. */
export function requestBlocked(state: SessionState): string | null {
  if (state.recordId === null) return "select a patient first";
  if (state.accessible.size === 0) return "toggle at least one controllable variable";
  if (!(state.delta > 0 && state.delta <= 1)) return "risk drop must be in (0, 1]";
  return null;
}

export function recordResult(
  state: SessionState,
  result: MapResponse,
): SessionState {
  const entry: HistoryEntry = {
    accessible: [...state.accessible].sort(),
    delta: state.delta,
    mad: result.status === "found" ? result.mad ?? null : null,
  };
  return {
    ...state,
    lastResult: result,
    stale: false,
    history: [...state.history, entry], // append-only
  };
}
