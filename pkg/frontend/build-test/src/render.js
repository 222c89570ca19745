/** Pure HTML renderers for the suggestion list and attention
 * highlighting. No DOM access here so the renderers are testable
 * anywhere; main.ts assigns the returned strings to innerHTML. */
export function escapeHtml(text) {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;")
        .replace(/'/g, "&#39;");
}
/** Highlight intensity per token: weight relative to the row maximum,
 * so the strongest token is fully saturated and uniform weights render
 * uniformly. */
export function highlightIntensities(attention) {
    const max = attention.reduce((m, a) => Math.max(m, a.weight), 0);
    if (max <= 0) {
        return attention.map(() => 0);
    }
    return attention.map((a) => a.weight / max);
}
export function renderAttentionText(attention) {
    const intensities = highlightIntensities(attention);
    return attention
        .map((entry, i) => {
        const alpha = (0.85 * intensities[i]).toFixed(4);
        return (`<span class="tok" data-weight="${entry.weight.toFixed(6)}" ` +
            `style="background-color: rgba(255, 170, 0, ${alpha})">` +
            `${escapeHtml(entry.token)}</span>`);
    })
        .join(" ");
}
const DECISION_LABELS = [
    ["accepted", "Accept"],
    ["rejected", "Reject"],
    ["skipped", "Skip"],
];
function renderSuggestionRow(suggestion, state, selected) {
    const classes = ["suggestion", `decision-${state}`];
    if (suggestion.above_threshold) {
        classes.push("above-threshold");
    }
    if (selected) {
        classes.push("selected");
    }
    const buttons = DECISION_LABELS.map(([value, label]) => `<button type="button" data-code="${escapeHtml(suggestion.code)}" ` +
        `data-decision="${value}" class="${state === value ? "active" : ""}">` +
        `${label}</button>`).join("");
    return (`<li class="${classes.join(" ")}" data-code="${escapeHtml(suggestion.code)}">` +
        `<span class="code">${escapeHtml(suggestion.code)}</span>` +
        `<span class="confidence">${(suggestion.confidence * 100).toFixed(1)}%</span>` +
        `<span class="actions">${buttons}</span>` +
        `</li>`);
}
/** Suggestion list in descending confidence order; above-threshold
 * codes carry a distinguishing class. */
export function renderSuggestionList(response, decisions, selectedCode = null) {
    const ordered = [...response.suggestions].sort((a, b) => b.confidence - a.confidence);
    const rows = ordered.map((s) => renderSuggestionRow(s, decisions.get(s.code) ?? "pending", s.code === selectedCode));
    return `<ul class="suggestions">${rows.join("")}</ul>`;
}
export function renderAddedCodes(added) {
    if (added.length === 0) {
        return "";
    }
    const items = added
        .map((code) => `<li class="added-code" data-code="${escapeHtml(code)}">` +
        `<span class="code">${escapeHtml(code)}</span>` +
        `<button type="button" data-remove="${escapeHtml(code)}">Remove</button></li>`)
        .join("");
    return `<ul class="added">${items}</ul>`;
}
export function renderModelOptions(models) {
    return models
        .map((m) => `<option value="${escapeHtml(m.model_id)}">` +
        `${escapeHtml(m.model_id)} (${escapeHtml(m.family)}, t=${m.threshold})</option>`)
        .join("");
}
