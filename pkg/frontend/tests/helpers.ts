import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";
import type { ModelDoc, PredictResponse, SchemaDoc } from "../src/types.js";

export interface SingleFixture {
    request: { features: Record<string, number>; explain: boolean };
    response: PredictResponse;
}

export interface Fixtures {
    schema: SchemaDoc;
    model: ModelDoc;
    singles: SingleFixture[];
    batch: { request: string; response: string };
    missing_feature_error: { status: number; body: { error: string; feature: string } };
}

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixtures(): Fixtures {
    return JSON.parse(readFileSync(join(here, "fixtures", "fixtures.json"), "utf-8"));
}

function jsonResponse(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
    });
}

/** Fetch stub replaying the recorded service responses. */
export function serviceFetch(fx: Fixtures): FetchLike {
    return async (url, init) => {
        if (url.endsWith("/api/v1/schema")) return jsonResponse(200, fx.schema);
        if (url.endsWith("/api/v1/model")) return jsonResponse(200, fx.model);
        if (url.endsWith("/api/v1/predict/batch")) {
            if (init?.body === fx.batch.request) {
                return new Response(fx.batch.response, {
                    status: 200,
                    headers: { "content-type": "text/csv" },
                });
            }
            return jsonResponse(400, { error: "EmptyDataset" });
        }
        if (url.endsWith("/api/v1/predict")) {
            const sent = JSON.parse(String(init?.body));
            const canon = (o: Record<string, number>) =>
                JSON.stringify(Object.keys(o).sort().map((k) => [k, o[k]]));
            for (const single of fx.singles) {
                if (canon(single.request.features) === canon(sent.features)) {
                    return jsonResponse(200, single.response);
                }
            }
            const missing = fx.schema.features.find((f) => !(f.name in sent.features));
            if (missing) {
                return jsonResponse(400, { error: "MissingFeature", feature: missing.name });
            }
            return jsonResponse(400, { error: "UnknownFixture" });
        }
        return jsonResponse(404, { error: "NotFound" });
    };
}
