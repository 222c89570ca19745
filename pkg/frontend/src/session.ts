/** Review session state machine.
 *
 * All decisions stay local until submission; a session submits at most
 * once, and the fingerprint makes a retried submission idempotent on
 * the server side. The console itself computes nothing: every number
 * shown comes from the service response.
 */

import type { ApiClient } from "./api.js";
import type {
  DocumentEntry,
  FeedbackAck,
  FeedbackDecision,
  FeedbackRecord,
  PredictionResponse,
} from "./types.js";

export type DecisionState = "pending" | "accepted" | "rejected" | "skipped";

export interface ReviewSession {
  modelId: string;
  documents: DocumentEntry[];
  response: PredictionResponse | null;
  decisions: Map<string, DecisionState>;
  added: string[];
  submitting: boolean;
  submitted: boolean;
  lastAck: FeedbackAck | null;
}

export function createSession(modelId: string, documents: DocumentEntry[]): ReviewSession {
  return {
    modelId,
    documents,
    response: null,
    decisions: new Map(),
    added: [],
    submitting: false,
    submitted: false,
    lastAck: null,
  };
}

/** Attach a prediction response; every suggested code starts pending. */
export function applyPrediction(session: ReviewSession, response: PredictionResponse): void {
  session.response = response;
  session.decisions = new Map(response.suggestions.map((s) => [s.code, "pending"]));
  session.added = [];
}

export function decide(session: ReviewSession, code: string, state: DecisionState): void {
  if (session.submitted) {
    throw new Error("session already submitted");
  }
  if (!session.decisions.has(code)) {
    throw new Error(`code ${code} is not among the suggestions`);
  }
  session.decisions.set(code, state);
}

/** Add a code the model did not suggest; normalized like server codes. */
export function addCode(session: ReviewSession, rawCode: string): void {
  if (session.submitted) {
    throw new Error("session already submitted");
  }
  const code = rawCode.trim().toUpperCase();
  if (!code) {
    throw new Error("empty code");
  }
  if (session.decisions.has(code)) {
    throw new Error(`code ${code} is already suggested; accept it instead`);
  }
  if (!session.added.includes(code)) {
    session.added.push(code);
  }
}

export function removeAddedCode(session: ReviewSession, code: string): void {
  session.added = session.added.filter((c) => c !== code);
}

/** Submission requires every suggestion decided or explicitly skipped. */
export function allDecided(session: ReviewSession): boolean {
  if (!session.response) {
    return false;
  }
  for (const state of session.decisions.values()) {
    if (state === "pending") {
      return false;
    }
  }
  return true;
}

/** FNV-1a (64-bit) over the canonical request content. */
export function fingerprintOf(session: ReviewSession): string {
  const canonical = JSON.stringify({
    model_id: session.modelId,
    documents: session.documents.map((d) => [d.type, d.seq, d.text]),
  });
  let hash = 0xcbf29ce484222325n;
  const prime = 0x100000001b3n;
  const mask = 0xffffffffffffffffn;
  for (let i = 0; i < canonical.length; i++) {
    hash ^= BigInt(canonical.charCodeAt(i));
    hash = (hash * prime) & mask;
  }
  return hash.toString(16).padStart(16, "0");
}

/** Build the feedback record: skipped codes are omitted, added codes
 * are marked `added`. Throws while any suggestion is still pending. */
export function buildFeedback(
  session: ReviewSession,
  coderId: string,
  timestamp?: string,
): FeedbackRecord {
  if (!session.response) {
    throw new Error("no prediction to review");
  }
  if (!allDecided(session)) {
    throw new Error("every suggestion needs a decision (or an explicit skip)");
  }
  const decisions: FeedbackDecision[] = [];
  for (const [code, state] of session.decisions.entries()) {
    if (state === "accepted" || state === "rejected") {
      decisions.push({ code, decision: state });
    }
  }
  for (const code of session.added) {
    decisions.push({ code, decision: "added" });
  }
  if (decisions.length === 0) {
    throw new Error("nothing to submit: all suggestions were skipped");
  }
  return {
    fingerprint: fingerprintOf(session),
    model_id: session.modelId,
    suggested: session.response.suggestions.map((s) => s.code),
    decisions,
    coder_id: coderId,
    timestamp: timestamp ?? new Date().toISOString(),
  };
}

/** Submit exactly once; concurrent or repeated calls are no-ops that
 * resolve to the first acknowledgment. */
export async function submitReview(
  session: ReviewSession,
  api: ApiClient,
  coderId: string,
): Promise<FeedbackAck> {
  if (session.submitted && session.lastAck) {
    return session.lastAck;
  }
  if (session.submitting) {
    throw new Error("submission already in flight");
  }
  const record = buildFeedback(session, coderId);
  session.submitting = true;
  try {
    const ack = await api.submitFeedback(record);
    session.submitted = true;
    session.lastAck = ack;
    return ack;
  } finally {
    session.submitting = false;
  }
}
