import assert from "node:assert/strict";
import { test } from "node:test";

import {
  escapeHtml,
  highlightIntensities,
  renderAttentionText,
  renderSuggestionList,
} from "../src/render.js";
import { threeCodeResponse } from "./fixtures.js";

test("suggestion list renders three rows in confidence order", () => {
  const response = threeCodeResponse();
  const html = renderSuggestionList(response, new Map());
  const order = [...html.matchAll(/<li[^>]*data-code="([A-Z0-9]+)"/g)].map((m) => m[1]);
  assert.deepEqual(order, ["I10", "J18", "E11"]);
  assert.equal((html.match(/<li/g) ?? []).length, 3);
});

test("above-threshold codes are visually distinguished", () => {
  const html = renderSuggestionList(threeCodeResponse(), new Map());
  const rows = html.split("<li").slice(1);
  assert.ok(rows[0].includes("above-threshold")); // I10
  assert.ok(rows[1].includes("above-threshold")); // J18
  assert.ok(!rows[2].includes("above-threshold")); // E11 below threshold
});

test("decision state is reflected on the row and its buttons", () => {
  const decisions = new Map<string, "accepted" | "rejected" | "pending" | "skipped">([
    ["I10", "accepted"],
    ["J18", "rejected"],
    ["E11", "pending"],
  ]);
  const html = renderSuggestionList(threeCodeResponse(), decisions as never);
  const rows = html.split("<li").slice(1);
  assert.ok(rows[0].includes("decision-accepted"));
  assert.ok(rows[1].includes("decision-rejected"));
  assert.ok(rows[2].includes("decision-pending"));
  assert.match(rows[0], /data-decision="accepted" class="active"/);
});

test("uniform attention weights render with uniform intensity", () => {
  const uniform = threeCodeResponse().suggestions[0].attention!;
  const intensities = highlightIntensities(uniform);
  assert.equal(intensities.length, 4);
  for (const value of intensities) {
    assert.equal(value, 1);
  }
  const html = renderAttentionText(uniform);
  const alphas = [...html.matchAll(/rgba\(255, 170, 0, ([0-9.]+)\)/g)].map((m) => m[1]);
  assert.equal(new Set(alphas).size, 1);
});

test("dominant-weight token is the strongest highlight", () => {
  const skewed = threeCodeResponse().suggestions[1].attention!;
  const intensities = highlightIntensities(skewed);
  const maxIdx = intensities.indexOf(Math.max(...intensities));
  assert.equal(skewed[maxIdx].token, "hypertension");
  assert.equal(intensities[maxIdx], 1);
  for (let i = 0; i < intensities.length; i++) {
    if (i !== maxIdx) {
      assert.ok(intensities[i] < 1);
      // intensity stays proportional to the raw weight
      assert.ok(Math.abs(intensities[i] - skewed[i].weight / 0.7) < 1e-12);
    }
  }
});

test("attention text keeps token order and escapes content", () => {
  const html = renderAttentionText([
    { token: "<script>", weight: 0.5 },
    { token: "safe", weight: 0.5 },
  ]);
  assert.ok(html.includes("&lt;script&gt;"));
  assert.ok(!html.includes("<script>"));
  assert.ok(html.indexOf("&lt;script&gt;") < html.indexOf("safe"));
});

test("rendering a response without attention disables highlighting only", () => {
  const response = threeCodeResponse();
  for (const suggestion of response.suggestions) {
    delete suggestion.attention;
  }
  const html = renderSuggestionList(response, new Map());
  assert.equal((html.match(/<li/g) ?? []).length, 3);
});

test("escapeHtml covers the critical characters", () => {
  assert.equal(escapeHtml(`<a href="x">&'</a>`), "&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;");
});
