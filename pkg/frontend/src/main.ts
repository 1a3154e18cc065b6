/**
 * Wiring: three panes (case list, curves, animated overlay), keyboard
 * shortcuts, verdict submission with retry on failure. All server state
 * is re-read after writes; nothing is persisted client-side.
 */

import { ApiError, ReviewApi, type CaseView } from "./api.js";
import { actionForKey } from "./keyboard.js";
import { renderPlotSvg } from "./plot.js";
import {
  advanceFrame,
  clampFrame,
  initialState,
  nextUnlabeled,
  progress,
  withVerdict,
  type AppState,
} from "./state.js";

const api = new ReviewApi("");
const state: AppState = initialState();
let view: CaseView | null = null;
let timer: number | null = null;

const $ = (id: string) => document.getElementById(id)!;

function setError(message: string | null): void {
  state.error = message;
  const el = $("error-banner");
  el.textContent = message ?? "";
  el.style.display = message ? "block" : "none";
}

function renderList(): void {
  const ul = $("case-list");
  ul.innerHTML = "";
  for (const c of state.cases) {
    const li = document.createElement("li");
    const mark = c.labeled ? (c.verdict === "good" ? "[g]" : "[e]") : "[ ]";
    li.textContent = `${mark} ${c.case_id}`;
    li.className =
      (c.case_id === state.currentId ? "current " : "") +
      (c.labeled ? (c.verdict === "good" ? "good" : "erroneous") : "");
    li.onclick = () => void openCase(c.case_id);
    ul.appendChild(li);
  }
  const p = progress(state);
  $("progress").textContent = `${p.labeled} / ${p.total} labeled`;
}

function renderCase(): void {
  if (!view) return;
  $("case-title").textContent = view.caseId;
  $("plot").innerHTML = renderPlotSvg(view.structures, view.frames, state.frame);
  const img = $("frame-img") as HTMLImageElement;
  img.src = view.frameUrls[state.frame];
  $("frame-label").textContent = `frame ${state.frame + 1} / ${view.frames}`;
  const slider = $("frame-slider") as HTMLInputElement;
  slider.max = String(view.frames - 1);
  slider.value = String(state.frame);
  $("play-btn").textContent = state.playing ? "pause" : "play";
  for (const v of ["good", "erroneous"] as const) {
    $(`btn-${v}`).classList.toggle("selected", view.verdict === v);
  }
}

function setFrame(frame: number): void {
  if (!view) return;
  state.frame = clampFrame(frame, view.frames);
  renderCase();
}

function setPlaying(playing: boolean): void {
  state.playing = playing;
  if (timer !== null) {
    window.clearInterval(timer);
    timer = null;
  }
  if (playing && view) {
    timer = window.setInterval(() => {
      if (view) setFrame(advanceFrame(state.frame, view.frames));
    }, 120);
  }
  renderCase();
}

async function refreshList(): Promise<void> {
  const listing = await api.listCases();
  state.cases = listing.cases;
  renderList();
}

async function openCase(caseId: string): Promise<void> {
  try {
    setPlaying(false);
    view = await api.fetchCase(caseId);
    state.currentId = caseId;
    state.frames = view.frames;
    state.frame = 0;
    setError(null);
    renderList();
    renderCase();
    setPlaying(true);
  } catch (err) {
    // keep the list usable; surface the failure
    setError(err instanceof ApiError ? err.message : `failed to load ${caseId}`);
  }
}

async function submitVerdict(verdict: "good" | "erroneous"): Promise<void> {
  if (!view || state.pending) return;
  const caseId = view.caseId;
  state.pending = true;
  try {
    await api.postVerdict(caseId, verdict);
    state.cases = withVerdict(state.cases, caseId, verdict);
    view.verdict = verdict;
    setError(null);
    renderList();
    const next = nextUnlabeled(state.cases, caseId);
    if (next) await openCase(next);
    else renderCase();
  } catch {
    setError(`could not save verdict for ${caseId}; press ${verdict === "good" ? "g" : "e"} to retry`);
  } finally {
    state.pending = false;
  }
}

function onKey(ev: KeyboardEvent): void {
  const action = actionForKey(ev.key);
  if (!action) return;
  ev.preventDefault();
  if (action.kind === "verdict") void submitVerdict(action.verdict);
  else if (action.kind === "toggle-play") setPlaying(!state.playing);
  else if (action.kind === "step") {
    setPlaying(false);
    setFrame(state.frame + action.delta);
  } else if (action.kind === "next-case") {
    const next = nextUnlabeled(state.cases, state.currentId);
    if (next) void openCase(next);
  }
}

async function start(): Promise<void> {
  $("btn-good").onclick = () => void submitVerdict("good");
  $("btn-erroneous").onclick = () => void submitVerdict("erroneous");
  $("play-btn").onclick = () => setPlaying(!state.playing);
  ($("frame-slider") as HTMLInputElement).oninput = (ev) => {
    setPlaying(false);
    setFrame(Number((ev.target as HTMLInputElement).value));
  };
  ($("frame-img") as HTMLImageElement).onerror = () =>
    setError("overlay frame missing for this case");
  document.addEventListener("keydown", onKey);
  try {
    await refreshList();
    const first = nextUnlabeled(state.cases, null) ?? state.cases[0]?.case_id ?? null;
    if (first) await openCase(first);
    else setError("no cases available");
  } catch {
    setError("cannot reach the review service");
  }
}

void start();
