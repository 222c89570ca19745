import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiClient } from "../src/api.js";
import {
  addCode,
  allDecided,
  applyPrediction,
  buildFeedback,
  createSession,
  decide,
  fingerprintOf,
  submitReview,
} from "../src/session.js";
import type { DocumentEntry } from "../src/types.js";
import { threeCodeResponse } from "./fixtures.js";

const docs: DocumentEntry[] = [{ type: "S", seq: 0, text: "fever cough admitted" }];

function readySession() {
  const session = createSession("cnn_att", docs);
  applyPrediction(session, threeCodeResponse());
  return session;
}

test("prediction leaves every suggestion pending", () => {
  const session = readySession();
  assert.equal(session.decisions.size, 3);
  for (const state of session.decisions.values()) {
    assert.equal(state, "pending");
  }
  assert.equal(allDecided(session), false);
});

test("submission requires every suggestion decided or skipped", () => {
  const session = readySession();
  decide(session, "I10", "accepted");
  decide(session, "J18", "rejected");
  assert.equal(allDecided(session), false);
  assert.throws(() => buildFeedback(session, "coder-1"), /decision/);
  decide(session, "E11", "skipped");
  assert.equal(allDecided(session), true);
});

test("feedback record: accept 2, reject 1 gives 3 decisions", () => {
  const session = readySession();
  decide(session, "I10", "accepted");
  decide(session, "J18", "accepted");
  decide(session, "E11", "rejected");
  const record = buildFeedback(session, "coder-1", "2024-06-01T00:00:00Z");
  assert.equal(record.decisions.length, 3);
  assert.deepEqual(record.suggested, ["J18", "I10", "E11"]);
  assert.equal(record.coder_id, "coder-1");
});

test("skipped codes are omitted; added codes are marked added", () => {
  const session = readySession();
  decide(session, "I10", "accepted");
  decide(session, "J18", "skipped");
  decide(session, "E11", "skipped");
  addCode(session, " a41 ");
  const record = buildFeedback(session, "coder-1");
  assert.deepEqual(record.decisions, [
    { code: "I10", decision: "accepted" },
    { code: "A41", decision: "added" },
  ]);
});

test("adding an already-suggested code is rejected", () => {
  const session = readySession();
  assert.throws(() => addCode(session, "i10"), /already suggested/);
});

test("deciding an unknown code is rejected", () => {
  const session = readySession();
  assert.throws(() => decide(session, "Z99", "accepted"), /not among/);
});

test("fingerprint is deterministic and content-sensitive", () => {
  const a = createSession("m", docs);
  const b = createSession("m", [{ type: "S", seq: 0, text: "fever cough admitted" }]);
  assert.equal(fingerprintOf(a), fingerprintOf(b));
  const c = createSession("m", [{ type: "S", seq: 0, text: "different text" }]);
  assert.notEqual(fingerprintOf(a), fingerprintOf(c));
  const d = createSession("other-model", docs);
  assert.notEqual(fingerprintOf(a), fingerprintOf(d));
});

function countingApi(): { api: ApiClient; calls: () => number } {
  let calls = 0;
  const fetchFn = async () => {
    calls += 1;
    return new Response(JSON.stringify({ status: "ok", stored: calls === 1 }), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { api: new ApiClient("http://mock", fetchFn), calls: () => calls };
}

test("double submit posts exactly once and locks the session", async () => {
  const session = readySession();
  decide(session, "I10", "accepted");
  decide(session, "J18", "rejected");
  decide(session, "E11", "skipped");
  const { api, calls } = countingApi();
  const first = await submitReview(session, api, "coder-1");
  assert.equal(first.stored, true);
  assert.equal(session.submitted, true);
  const second = await submitReview(session, api, "coder-1");
  assert.equal(second.stored, true); // cached acknowledgment, no new POST
  assert.equal(calls(), 1);
  assert.throws(() => decide(session, "I10", "rejected"), /already submitted/);
});

test("failed submission leaves the session retryable", async () => {
  const session = readySession();
  decide(session, "I10", "accepted");
  decide(session, "J18", "skipped");
  decide(session, "E11", "skipped");
  let attempt = 0;
  const flaky = new ApiClient("http://mock", async () => {
    attempt += 1;
    if (attempt === 1) {
      return new Response(JSON.stringify({ error: "boom" }), { status: 500 });
    }
    return new Response(JSON.stringify({ status: "ok", stored: true }), { status: 200 });
  });
  await assert.rejects(() => submitReview(session, flaky, "c"), /boom/);
  assert.equal(session.submitted, false);
  const ack = await submitReview(session, flaky, "c");
  assert.equal(ack.stored, true);
  assert.equal(attempt, 2);
});
