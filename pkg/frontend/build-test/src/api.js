/** Thin fetch client for the prediction service endpoints. */
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
export class ApiClient {
    constructor(baseUrl, fetchFn) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    }
    async request(path, init) {
        const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
        let body = null;
        try {
            body = await response.json();
        }
        catch {
            // non-JSON error bodies fall through to the status check
        }
        if (!response.ok) {
            const detail = body && typeof body === "object" && "error" in body
                ? String(body.error)
                : `HTTP ${response.status}`;
            throw new ApiError(response.status, detail);
        }
        return body;
    }
    listModels() {
        return this.request("/models");
    }
    predict(request) {
        return this.request("/predict", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(request),
        });
    }
    submitFeedback(record) {
        return this.request("/feedback", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(record),
        });
    }
    health() {
        return this.request("/health");
    }
}
