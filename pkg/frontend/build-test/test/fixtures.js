/** Three-code fixture with attention, deliberately unsorted. */
export function threeCodeResponse() {
    return {
        model_id: "cnn_att",
        threshold: 0.28,
        suggestions: [
            {
                code: "J18",
                confidence: 0.41,
                above_threshold: true,
                attention: [
                    { token: "fever", weight: 0.25 },
                    { token: "cough", weight: 0.25 },
                    { token: "infiltrate", weight: 0.25 },
                    { token: "admitted", weight: 0.25 },
                ],
            },
            {
                code: "I10",
                confidence: 0.92,
                above_threshold: true,
                attention: [
                    { token: "fever", weight: 0.1 },
                    { token: "hypertension", weight: 0.7 },
                    { token: "infiltrate", weight: 0.1 },
                    { token: "admitted", weight: 0.1 },
                ],
            },
            {
                code: "E11",
                confidence: 0.12,
                above_threshold: false,
                attention: [
                    { token: "fever", weight: 0.4 },
                    { token: "cough", weight: 0.3 },
                    { token: "infiltrate", weight: 0.2 },
                    { token: "admitted", weight: 0.1 },
                ],
            },
        ],
        trace: { token_count: 4, truncated: false },
    };
}
