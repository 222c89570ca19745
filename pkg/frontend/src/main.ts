/** DOM wiring for the review console. All inference happens on the
 * server; this file only moves state between the API, the session and
 * the renderers. */

import { ApiClient, ApiError } from "./api.js";
import {
  addCode,
  allDecided,
  applyPrediction,
  createSession,
  decide,
  removeAddedCode,
  submitReview,
  type DecisionState,
  type ReviewSession,
} from "./session.js";
import {
  renderAddedCodes,
  renderAttentionText,
  renderModelOptions,
  renderSuggestionList,
  escapeHtml,
} from "./render.js";
import type { DocumentEntry } from "./types.js";

const api = new ApiClient("");

let session: ReviewSession | null = null;
let selectedCode: string | null = null;

const el = {
  model: document.getElementById("model") as HTMLSelectElement,
  docS: document.getElementById("doc-s") as HTMLTextAreaElement,
  docE: document.getElementById("doc-e") as HTMLTextAreaElement,
  docA: document.getElementById("doc-a") as HTMLTextAreaElement,
  suggest: document.getElementById("suggest") as HTMLButtonElement,
  status: document.getElementById("status") as HTMLElement,
  suggestions: document.getElementById("suggestions") as HTMLElement,
  evidence: document.getElementById("evidence") as HTMLElement,
  addInput: document.getElementById("add-code") as HTMLInputElement,
  addButton: document.getElementById("add-button") as HTMLButtonElement,
  addedList: document.getElementById("added-list") as HTMLElement,
  coder: document.getElementById("coder") as HTMLInputElement,
  submit: document.getElementById("submit") as HTMLButtonElement,
};

function setStatus(message: string, kind: "info" | "error" = "info"): void {
  el.status.textContent = message;
  el.status.className = `status ${kind}`;
}

function collectDocuments(): DocumentEntry[] {
  const docs: DocumentEntry[] = [];
  const sources: [string, HTMLTextAreaElement][] = [
    ["S", el.docS],
    ["E", el.docE],
    ["A", el.docA],
  ];
  for (const [type, area] of sources) {
    if (area.value.trim()) {
      docs.push({ type: type as DocumentEntry["type"], seq: 0, text: area.value });
    }
  }
  return docs;
}

function refresh(): void {
  if (!session || !session.response) {
    el.suggestions.innerHTML = "";
    el.evidence.innerHTML = "";
    el.addedList.innerHTML = "";
    el.submit.disabled = true;
    return;
  }
  el.suggestions.innerHTML = renderSuggestionList(
    session.response,
    session.decisions,
    selectedCode,
  );
  el.addedList.innerHTML = renderAddedCodes(session.added);
  const selected = session.response.suggestions.find((s) => s.code === selectedCode);
  if (selected?.attention) {
    el.evidence.innerHTML =
      `<h3>Evidence for ${escapeHtml(selected.code)}</h3>` +
      `<p class="note-text">${renderAttentionText(selected.attention)}</p>`;
  } else if (selected) {
    el.evidence.innerHTML =
      `<h3>${escapeHtml(selected.code)}</h3>` +
      `<p class="muted">This model does not expose attention evidence.</p>`;
  } else {
    el.evidence.innerHTML = `<p class="muted">Select a code to inspect its evidence.</p>`;
  }
  el.submit.disabled = session.submitted || !allDecided(session) || !el.coder.value.trim();
}

async function loadModels(): Promise<void> {
  try {
    const models = await api.listModels();
    el.model.innerHTML = renderModelOptions(models);
    setStatus(models.length ? `${models.length} model(s) loaded` : "no models available");
  } catch (err) {
    setStatus(`failed to list models: ${err}`, "error");
  }
}

async function requestSuggestions(): Promise<void> {
  const documents = collectDocuments();
  if (!documents.length) {
    setStatus("enter at least one document", "error");
    return;
  }
  session = createSession(el.model.value, documents);
  selectedCode = null;
  setStatus("requesting suggestions…");
  try {
    const response = await api.predict({
      model_id: session.modelId,
      documents: session.documents,
    });
    applyPrediction(session, response);
    selectedCode = response.suggestions[0]?.code ?? null;
    const trace = response.trace;
    setStatus(
      `${response.suggestions.length} suggestions ` +
        `(${trace.token_count} tokens${trace.truncated ? ", truncated" : ""})`,
    );
  } catch (err) {
    session = null;
    setStatus(err instanceof ApiError ? err.message : String(err), "error");
  }
  refresh();
}

function onSuggestionClick(event: Event): void {
  const target = event.target as HTMLElement;
  if (!session) {
    return;
  }
  const button = target.closest("button[data-decision]") as HTMLButtonElement | null;
  if (button) {
    decide(session, button.dataset.code!, button.dataset.decision as DecisionState);
    refresh();
    return;
  }
  const row = target.closest("li[data-code]") as HTMLElement | null;
  if (row) {
    selectedCode = row.dataset.code ?? null;
    refresh();
  }
}

function onAddCode(): void {
  if (!session || !el.addInput.value.trim()) {
    return;
  }
  try {
    addCode(session, el.addInput.value);
    el.addInput.value = "";
  } catch (err) {
    setStatus(String(err instanceof Error ? err.message : err), "error");
  }
  refresh();
}

function onAddedListClick(event: Event): void {
  const target = event.target as HTMLElement;
  if (session && target.dataset.remove) {
    removeAddedCode(session, target.dataset.remove);
    refresh();
  }
}

async function onSubmit(): Promise<void> {
  if (!session) {
    return;
  }
  el.submit.disabled = true;
  try {
    const ack = await submitReview(session, api, el.coder.value.trim());
    setStatus(ack.stored ? "review submitted" : "review already recorded");
    refresh();
  } catch (err) {
    setStatus(err instanceof ApiError ? err.message : String(err), "error");
    el.submit.disabled = false;
  }
}

el.suggest.addEventListener("click", () => void requestSuggestions());
el.suggestions.addEventListener("click", onSuggestionClick);
el.addButton.addEventListener("click", onAddCode);
el.addedList.addEventListener("click", onAddedListClick);
el.submit.addEventListener("click", () => void onSubmit());
el.coder.addEventListener("input", refresh);

void loadModels();
refresh();
