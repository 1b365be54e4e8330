/** View-model layer: pure state and presentation logic.
 *
 * Every displayed capacity string is the server's p_kn_display verbatim;
 * this module never rounds or reformats predictions.
 */

import type {
    ModelDoc,
    PredictRequest,
    PredictResponse,
    SchemaDoc,
    ServiceError,
    ShapDoc,
} from "./types.js";

// --- single prediction form ---

export interface FormState {
    fields: Record<string, string>;        // raw text per feature
    explain: boolean;
    ranges: Record<string, [number, number]>;
    lastResponse: PredictResponse | null;
    fieldError: { feature: string; message: string } | null;
    banner: string | null;                 // connectivity / generic failure
}

export function initForm(schema: SchemaDoc, model: ModelDoc | null): FormState {
    const fields: Record<string, string> = {};
    for (const f of schema.features) fields[f.name] = "";
    return {
        fields,
        explain: false,
        ranges: model?.feature_ranges ?? {},
        lastResponse: null,
        fieldError: null,
        banner: null,
    };
}

export function setField(state: FormState, name: string, text: string): FormState {
    return { ...state, fields: { ...state.fields, [name]: text }, fieldError: null };
}

export function setExplain(state: FormState, explain: boolean): FormState {
    return { ...state, explain };
}

export function fieldValue(state: FormState, name: string): number | null {
    const text = (state.fields[name] ?? "").trim();
    if (text === "") return null;
    const v = Number(text);
    return Number.isFinite(v) ? v : null;
}

/** Submit stays disabled until all fields parse to finite numbers. */
export function canSubmit(state: FormState, schema: SchemaDoc): boolean {
    return schema.features.every((f) => fieldValue(state, f.name) !== null);
}

export function missingFields(state: FormState, schema: SchemaDoc): string[] {
    return schema.features.filter((f) => fieldValue(state, f.name) === null)
        .map((f) => f.name);
}

/** Client-side range hint before submitting; server flags are authoritative. */
export function outOfRangeHint(state: FormState, name: string): boolean {
    const v = fieldValue(state, name);
    const range = state.ranges[name];
    if (v === null || !range) return false;
    return v < range[0] || v > range[1];
}

export function buildRequest(state: FormState, schema: SchemaDoc): PredictRequest {
    const features: Record<string, number> = {};
    for (const f of schema.features) {
        const v = fieldValue(state, f.name);
        if (v === null) throw new Error(`field ${f.name} is not a finite number`);
        features[f.name] = v;
    }
    return { features, explain: state.explain };
}

export function applyResponse(state: FormState, resp: PredictResponse): FormState {
    return { ...state, lastResponse: resp, fieldError: null, banner: null };
}

export function applyFailure(state: FormState, err: ServiceError | null): FormState {
    if (err && (err.error === "MissingFeature" || err.error === "NonFiniteValue") && err.feature) {
        return { ...state, fieldError: { feature: err.feature, message: err.error } };
    }
    const banner = err ? `request failed: ${err.error}` : "service unreachable";
    return { ...state, banner };
}

// --- result card ---

export interface ResultView {
    display: string;   // server display string, verbatim
    raw: number;
    unit: string;
    flagged: string[]; // features outside the training range, per the server
}

export function resultView(resp: PredictResponse, targetUnit = "kN"): ResultView {
    return {
        display: resp.p_kn_display,
        raw: resp.p_kn,
        unit: targetUnit,
        flagged: Object.entries(resp.extrapolation_flags)
            .filter(([, on]) => on)
            .map(([name]) => name),
    };
}

// --- SHAP bar chart ---

export interface ShapBar {
    name: string;
    phi: number;        // response value, unmodified
    widthPct: number;   // |phi| relative to the largest magnitude
    positive: boolean;  // capacity-increasing
}

/** Bars for all features, sorted descending by |phi|. */
export function shapBars(shap: ShapDoc): ShapBar[] {
    const names = shap.features ?? shap.phi.map((_, i) => `x${i}`);
    const maxAbs = Math.max(...shap.phi.map(Math.abs), Number.MIN_VALUE);
    return names
        .map((name, i) => ({
            name,
            phi: shap.phi[i],
            widthPct: (100 * Math.abs(shap.phi[i])) / maxAbs,
            positive: shap.phi[i] >= 0,
        }))
        .sort((a, b) => Math.abs(b.phi) - Math.abs(a.phi));
}

// --- batch view ---

export interface BatchView {
    header: string[];
    rows: string[][];
    downloadText: string;   // response body verbatim, for byte-identical download
    highlighted: boolean[]; // any input outside the training range
}

function splitCsvLine(line: string): string[] {
    return line.split(",");
}

export function parseBatchResponse(csvText: string,
                                   ranges: Record<string, [number, number]>): BatchView {
    const lines = csvText.split("\n").filter((l) => l.replace("\r", "") !== "");
    const header = splitCsvLine(lines[0].replace(/\r$/, ""));
    const rows = lines.slice(1).map((l) => splitCsvLine(l.replace(/\r$/, "")));
    const highlighted = rows.map((row) =>
        header.some((name, j) => {
            const range = ranges[name];
            if (!range) return false;
            const v = Number(row[j]);
            return Number.isFinite(v) && (v < range[0] || v > range[1]);
        }),
    );
    return { header, rows, downloadText: csvText, highlighted };
}

export function pageCount(total: number, pageSize: number): number {
    return Math.max(1, Math.ceil(total / pageSize));
}

export function paginate<T>(rows: T[], page: number, pageSize: number): T[] {
    const p = Math.min(Math.max(page, 0), pageCount(rows.length, pageSize) - 1);
    return rows.slice(p * pageSize, (p + 1) * pageSize);
}

export function batchErrorMessage(err: ServiceError): string {
    if (err.error === "ParseError" || err.error === "MissingValue") {
        return `${err.error} at row ${err.row}, column ${err.column}`;
    }
    if (err.error === "MissingColumn") return `missing column ${err.column}`;
    if (err.error === "EmptyDataset") return "empty dataset: the file has no data rows";
    if (err.error === "TooManyRows") return `too many rows (limit ${err.limit})`;
    return err.error;
}

// --- model info panel ---

export interface InfoRow {
    name: string;
    unit: string;
    description: string;
    lo: number | null;
    hi: number | null;
}

export interface ModelInfoView {
    title: string;
    testR2: string;
    metrics: { split: string; r2: string; rmse: string; mae: string; n: string }[];
    hyperparameters: { key: string; value: string }[];
    features: InfoRow[];
    trainingRows: string;
    createdAt: string;
}

function fmtMetric(v: number | null | undefined): string {
    return v === null || v === undefined ? "n/a" : v.toFixed(4);
}

export function modelInfoView(model: ModelDoc, schema: SchemaDoc): ModelInfoView {
    const metrics = (["train", "test"] as const)
        .filter((split) => model.metrics[split])
        .map((split) => {
            const m = model.metrics[split]!;
            return {
                split,
                r2: fmtMetric(m.r2),
                rmse: fmtMetric(m.rmse),
                mae: fmtMetric(m.mae),
                n: String(m.n),
            };
        });
    return {
        title: `${model.family} — test R² ${fmtMetric(model.metrics.test?.r2)}`,
        testR2: fmtMetric(model.metrics.test?.r2),
        metrics,
        hyperparameters: Object.entries(model.hyperparameters)
            .sort(([a], [b]) => a.localeCompare(b))
            .map(([key, value]) => ({ key, value: String(value) })),
        features: schema.features.map((f) => {
            const range = model.feature_ranges[f.name];
            return {
                name: f.name,
                unit: f.unit,
                description: f.description,
                lo: range ? range[0] : null,
                hi: range ? range[1] : null,
            };
        }),
        trainingRows: model.training_rows == null ? "?" : String(model.training_rows),
        createdAt: model.created_at ?? "?",
    };
}
