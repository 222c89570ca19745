/** End-to-end: accept/reject/submit round-trips exactly one feedback
 * record through a live prediction service (double submits included).
 * Requires the icdkit Python package to be installed. */
import assert from "node:assert/strict";
import { spawn } from "node:child_process";
import { mkdtempSync, readFileSync, mkdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { after, before, test } from "node:test";
import { ApiClient } from "../src/api.js";
import { applyPrediction, createSession, decide, fingerprintOf, submitReview, } from "../src/session.js";
import { threeCodeResponse } from "./fixtures.js";
const port = 20000 + Math.floor(Math.random() * 20000);
const base = `http://127.0.0.1:${port}`;
let server;
let feedbackLog;
before(async () => {
    const dir = mkdtempSync(join(tmpdir(), "icdkit-console-"));
    const modelsDir = join(dir, "models");
    mkdirSync(modelsDir);
    feedbackLog = join(dir, "feedback.jsonl");
    server = spawn("python3", [
        "-m", "icdkit.cli", "serve",
        "--models", modelsDir,
        "--port", String(port),
        "--feedback-log", feedbackLog,
    ], { stdio: "ignore" });
    const api = new ApiClient(base);
    for (let i = 0; i < 60; i++) {
        try {
            const health = await api.health();
            assert.equal(health.status, "ok");
            return;
        }
        catch {
            await new Promise((resolve) => setTimeout(resolve, 250));
        }
    }
    throw new Error("prediction service did not come up");
});
after(() => {
    server.kill("SIGTERM");
});
test("accept/reject review round-trips exactly one feedback record", async () => {
    const api = new ApiClient(base);
    const session = createSession("cnn_att", [
        { type: "S", seq: 0, text: "fever cough admitted hypertension" },
    ]);
    applyPrediction(session, threeCodeResponse());
    decide(session, "I10", "accepted");
    decide(session, "J18", "accepted");
    decide(session, "E11", "rejected");
    const first = await submitReview(session, api, "coder-9");
    assert.equal(first.stored, true);
    // double-click: session guard swallows the second click
    const second = await submitReview(session, api, "coder-9");
    assert.equal(second.stored, true);
    // even a raw duplicate POST is deduplicated server-side
    const third = await api.submitFeedback({
        fingerprint: fingerprintOf(session),
        model_id: "cnn_att",
        suggested: ["J18", "I10", "E11"],
        decisions: [
            { code: "I10", decision: "accepted" },
            { code: "J18", decision: "accepted" },
            { code: "E11", decision: "rejected" },
        ],
        coder_id: "coder-9",
        timestamp: new Date().toISOString(),
    });
    assert.equal(third.stored, false);
    const lines = readFileSync(feedbackLog, "utf-8").trim().split("\n");
    assert.equal(lines.length, 1);
    const record = JSON.parse(lines[0]);
    assert.equal(record.coder_id, "coder-9");
    assert.equal(record.decisions.length, 3);
});
test("models endpoint answers (empty models dir)", async () => {
    const api = new ApiClient(base);
    const models = await api.listModels();
    assert.deepEqual(models, []);
});
