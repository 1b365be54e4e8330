/** Typed client for the prediction service; fetch is injectable for tests. */

import type {
    ModelDoc,
    PredictRequest,
    PredictResponse,
    SchemaDoc,
    ServiceError,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
    readonly status: number;
    readonly body: ServiceError;

    constructor(status: number, body: ServiceError) {
        super(`${body.error} (HTTP ${status})`);
        this.status = status;
        this.body = body;
    }
}

async function errorOf(res: Response): Promise<ApiError> {
    let body: ServiceError = { error: `HTTP ${res.status}` };
    try {
        body = (await res.json()) as ServiceError;
    } catch {
        /* non-JSON error body */
    }
    return new ApiError(res.status, body);
}

export class ApiClient {
    private readonly base: string;
    private readonly fetchFn: FetchLike;

    constructor(baseUrl = "", fetchFn?: FetchLike) {
        this.base = baseUrl.replace(/\/$/, "");
        this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
    }

    async getSchema(): Promise<SchemaDoc> {
        const res = await this.fetchFn(`${this.base}/api/v1/schema`);
        if (!res.ok) throw await errorOf(res);
        return (await res.json()) as SchemaDoc;
    }

    async getModel(): Promise<ModelDoc> {
        const res = await this.fetchFn(`${this.base}/api/v1/model`);
        if (!res.ok) throw await errorOf(res);
        return (await res.json()) as ModelDoc;
    }

    async predict(req: PredictRequest, signal?: AbortSignal): Promise<PredictResponse> {
        const res = await this.fetchFn(`${this.base}/api/v1/predict`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(req),
            signal,
        });
        if (!res.ok) throw await errorOf(res);
        return (await res.json()) as PredictResponse;
    }

    /** Returns the raw CSV response text, byte-for-byte. */
    async predictBatch(csvText: string): Promise<string> {
        const res = await this.fetchFn(`${this.base}/api/v1/predict/batch`, {
            method: "POST",
            headers: { "content-type": "text/csv" },
            body: csvText,
        });
        if (!res.ok) throw await errorOf(res);
        return await res.text();
    }
}

/** At most one in-flight request: starting a new run aborts the previous. */
export class LatestWins {
    private controller: AbortController | null = null;

    async run<T>(fn: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
        this.controller?.abort();
        const controller = new AbortController();
        this.controller = controller;
        try {
            return await fn(controller.signal);
        } catch (err) {
            if (controller.signal.aborted) return null; // superseded
            throw err;
        } finally {
            if (this.controller === controller) this.controller = null;
        }
    }
}
