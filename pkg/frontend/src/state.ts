/**
 * Pure app state and transitions. The UI renders from this; the only
 * side effects (HTTP) live in api.ts and main.ts.
 */

import type { CaseSummary } from "./api.js";

export interface AppState {
  cases: CaseSummary[];
  currentId: string | null;
  frame: number;
  frames: number;
  playing: boolean;
  error: string | null;
  pending: boolean; // a verdict POST is in flight; block double submits
}

export function initialState(): AppState {
  return {
    cases: [],
    currentId: null,
    frame: 0,
    frames: 1,
    playing: false,
    error: null,
    pending: false,
  };
}

export function progress(state: AppState): { labeled: number; total: number } {
  const labeled = state.cases.filter((c) => c.labeled).length;
  return { labeled, total: state.cases.length };
}

/** First unlabeled case after `afterId` (wrapping), else null. */
export function nextUnlabeled(
  cases: CaseSummary[],
  afterId: string | null,
): string | null {
  if (cases.length === 0) return null;
  const start = afterId === null ? -1 : cases.findIndex((c) => c.case_id === afterId);
  for (let k = 1; k <= cases.length; k++) {
    const c = cases[(start + k) % cases.length];
    if (!c.labeled) return c.case_id;
  }
  return null;
}

/** Record a verdict locally (optimistic view after the POST succeeds). */
export function withVerdict(
  cases: CaseSummary[],
  caseId: string,
  verdict: string,
): CaseSummary[] {
  return cases.map((c) =>
    c.case_id === caseId ? { ...c, labeled: true, verdict } : c,
  );
}

export function clampFrame(frame: number, frames: number): number {
  if (frames <= 0) return 0;
  return Math.min(Math.max(0, Math.round(frame)), frames - 1);
}

/** Advance one frame, wrapping at the end of the cycle (cine loop). */
export function advanceFrame(frame: number, frames: number): number {
  if (frames <= 0) return 0;
  return (frame + 1) % frames;
}
