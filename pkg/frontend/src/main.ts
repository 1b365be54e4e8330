/** Application wiring: fetch schema/model once, then drive the three views. */

import { ApiClient, ApiError, LatestWins } from "./api.js";
import {
    applyFailure,
    applyResponse,
    batchErrorMessage,
    buildRequest,
    canSubmit,
    initForm,
    modelInfoView,
    parseBatchResponse,
    resultView,
    setExplain,
    setField,
    shapBars,
    type BatchView,
    type FormState,
} from "./model.js";
import {
    renderBanner,
    renderBatch,
    renderForm,
    renderModelInfo,
    renderResult,
    renderShapChart,
} from "./render.js";
import type { ModelDoc, SchemaDoc } from "./types.js";

const PAGE_SIZE = 10;

function byId(id: string): HTMLElement {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
}

async function boot(): Promise<void> {
    const api = new ApiClient("");
    const inflight = new LatestWins();

    let schema: SchemaDoc;
    let model: ModelDoc | null = null;
    try {
        schema = await api.getSchema();
        model = await api.getModel();
    } catch (err) {
        renderBanner(byId("global-banner"),
            err instanceof ApiError && err.status === 503
                ? "no model loaded"
                : "service unreachable");
        return;
    }
    renderModelInfo(byId("model-info"), modelInfoView(model, schema));

    let form: FormState = initForm(schema, model);

    const redrawForm = () => {
        renderForm(byId("predict-form"), schema, form, onField, onExplain, onSubmit);
        const resp = form.lastResponse;
        renderResult(byId("predict-result"), resp ? resultView(resp) : null);
        renderShapChart(byId("shap-chart"), resp?.shap ? shapBars(resp.shap) : null);
    };

    const onField = (name: string, value: string) => {
        form = setField(form, name, value);
        redrawForm();
    };
    const onExplain = (on: boolean) => {
        form = setExplain(form, on);
        redrawForm();
    };
    const onSubmit = () => {
        if (!canSubmit(form, schema)) return;
        const request = buildRequest(form, schema);
        void inflight.run((signal) => api.predict(request, signal)).then((resp) => {
            if (resp === null) return; // superseded by a newer submit
            form = applyResponse(form, resp);
            redrawForm();
        }).catch((err) => {
            form = applyFailure(form, err instanceof ApiError ? err.body : null);
            redrawForm();
        });
    };
    redrawForm();

    // batch upload
    const fileInput = byId("batch-file") as HTMLInputElement;
    let batch: BatchView | null = null;
    let page = 0;
    const redrawBatch = () => {
        if (batch) {
            renderBatch(byId("batch-result"), batch, page, PAGE_SIZE,
                (p) => { page = p; redrawBatch(); },
                () => downloadCsv(batch!.downloadText));
        }
    };
    fileInput.addEventListener("change", async () => {
        const file = fileInput.files?.[0];
        if (!file) return;
        renderBanner(byId("batch-banner"), null);
        try {
            const text = await file.text();
            const responseText = await api.predictBatch(text);
            batch = parseBatchResponse(responseText, model?.feature_ranges ?? {});
            page = 0;
            redrawBatch();
        } catch (err) {
            batch = null;
            renderBanner(byId("batch-banner"),
                err instanceof ApiError ? batchErrorMessage(err.body) : "service unreachable");
        }
    });
}

/** The download blob is the server response text unchanged. */
function downloadCsv(text: string): void {
    const blob = new Blob([text], { type: "text/csv" });
    const url = URL.createObjectURL(blob);
    const a = document.createElement("a");
    a.href = url;
    a.download = "predictions.csv";
    a.click();
    URL.revokeObjectURL(url);
}

void boot();
