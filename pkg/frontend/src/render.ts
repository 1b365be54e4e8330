/** DOM rendering for the three views; all strings come from the view models. */

import type { BatchView, FormState, ModelInfoView, ResultView, ShapBar } from "./model.js";
import type { SchemaDoc } from "./types.js";
import { outOfRangeHint } from "./model.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, cls?: string, text?: string): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (cls) node.className = cls;
    if (text !== undefined) node.textContent = text;
    return node;
}

export function renderForm(root: HTMLElement, schema: SchemaDoc, state: FormState,
                           onInput: (name: string, value: string) => void,
                           onExplain: (on: boolean) => void,
                           onSubmit: () => void): void {
    root.replaceChildren();
    const grid = el("div", "form-grid");
    for (const f of schema.features) {
        const wrap = el("label", "field");
        wrap.append(el("span", "field-name", `${f.name} (${f.unit})`));
        const input = el("input");
        input.type = "number";
        input.step = "any";
        input.name = f.name;
        input.value = state.fields[f.name] ?? "";
        input.title = f.description;
        const range = state.ranges[f.name];
        if (range) {
            input.placeholder = `${range[0].toPrecision(4)} … ${range[1].toPrecision(4)}`;
        }
        input.addEventListener("input", () => onInput(f.name, input.value));
        input.addEventListener("keydown", (ev) => {
            if (ev.key === "Enter") onSubmit();
        });
        wrap.append(input);
        if (outOfRangeHint(state, f.name)) {
            wrap.append(el("span", "hint warn", "outside training range"));
        }
        if (state.fieldError?.feature === f.name) {
            wrap.append(el("span", "hint error", state.fieldError.message));
        }
        grid.append(wrap);
    }
    root.append(grid);

    const controls = el("div", "controls");
    const explain = el("label", "explain-toggle");
    const box = el("input");
    box.type = "checkbox";
    box.checked = state.explain;
    box.addEventListener("change", () => onExplain(box.checked));
    explain.append(box, el("span", undefined, "explain (SHAP)"));
    controls.append(explain);

    const submit = el("button", "submit", "Predict");
    submit.disabled = !canSubmitNow(root, schema, state);
    submit.addEventListener("click", onSubmit);
    controls.append(submit);
    root.append(controls);

    if (state.banner) root.append(el("div", "banner error", state.banner));
}

function canSubmitNow(_root: HTMLElement, schema: SchemaDoc, state: FormState): boolean {
    return schema.features.every((f) => {
        const t = (state.fields[f.name] ?? "").trim();
        return t !== "" && Number.isFinite(Number(t));
    });
}

export function renderResult(root: HTMLElement, view: ResultView | null): void {
    root.replaceChildren();
    if (!view) return;
    const card = el("div", "result-card");
    card.append(el("div", "result-value", `${view.display} ${view.unit}`));
    if (view.flagged.length) {
        card.append(el("div", "hint warn",
            `extrapolating on: ${view.flagged.join(", ")}`));
    }
    root.append(card);
}

export function renderShapChart(root: HTMLElement, bars: ShapBar[] | null): void {
    root.replaceChildren();
    if (!bars) return;
    const chart = el("div", "shap-chart");
    for (const bar of bars) {
        const row = el("div", "shap-row");
        row.append(el("span", "shap-name", bar.name));
        const track = el("div", "shap-track");
        const fill = el("div", `shap-bar ${bar.positive ? "pos" : "neg"}`);
        fill.style.width = `${bar.widthPct.toFixed(2)}%`;
        fill.dataset.phi = String(bar.phi);
        track.append(fill);
        row.append(track);
        row.append(el("span", "shap-value", bar.phi.toFixed(3)));
        chart.append(row);
    }
    root.append(chart);
}

export function renderBatch(root: HTMLElement, view: BatchView, page: number,
                            pageSize: number,
                            onPage: (p: number) => void,
                            onDownload: () => void): void {
    root.replaceChildren();
    const table = el("table", "batch-table");
    const head = el("tr");
    for (const name of view.header) head.append(el("th", undefined, name));
    table.append(head);
    const start = page * pageSize;
    for (const [i, row] of view.rows.slice(start, start + pageSize).entries()) {
        const tr = el("tr", view.highlighted[start + i] ? "extrapolated" : undefined);
        for (const cell of row) tr.append(el("td", undefined, cell));
        table.append(tr);
    }
    root.append(table);

    const pages = Math.max(1, Math.ceil(view.rows.length / pageSize));
    const nav = el("div", "pager");
    const prev = el("button", undefined, "prev");
    prev.disabled = page <= 0;
    prev.addEventListener("click", () => onPage(page - 1));
    const next = el("button", undefined, "next");
    next.disabled = page >= pages - 1;
    next.addEventListener("click", () => onPage(page + 1));
    nav.append(prev, el("span", "page-label", `page ${page + 1} / ${pages}`), next);
    const download = el("button", "download", "Download CSV");
    download.addEventListener("click", onDownload);
    nav.append(download);
    root.append(nav);
}

export function renderBanner(root: HTMLElement, message: string | null): void {
    root.replaceChildren();
    if (message) root.append(el("div", "banner error", message));
}

export function renderModelInfo(root: HTMLElement, view: ModelInfoView | null): void {
    root.replaceChildren();
    if (!view) {
        root.append(el("div", "banner error", "no model loaded"));
        return;
    }
    root.append(el("h2", undefined, view.title));
    const meta = el("div", "info-meta",
        `trained on ${view.trainingRows} rows · created ${view.createdAt}`);
    root.append(meta);

    const mtable = el("table", "info-table");
    const mhead = el("tr");
    for (const h of ["split", "R²", "RMSE", "MAE", "n"]) mhead.append(el("th", undefined, h));
    mtable.append(mhead);
    for (const m of view.metrics) {
        const tr = el("tr");
        for (const v of [m.split, m.r2, m.rmse, m.mae, m.n]) tr.append(el("td", undefined, v));
        mtable.append(tr);
    }
    root.append(mtable);

    if (view.hyperparameters.length) {
        const hp = el("dl", "hyperparams");
        for (const { key, value } of view.hyperparameters) {
            hp.append(el("dt", undefined, key), el("dd", undefined, value));
        }
        root.append(hp);
    }

    const ftable = el("table", "info-table");
    const fhead = el("tr");
    for (const h of ["feature", "unit", "description", "training range"]) {
        fhead.append(el("th", undefined, h));
    }
    ftable.append(fhead);
    for (const f of view.features) {
        const tr = el("tr");
        const range = f.lo === null ? "?" : `[${f.lo!.toPrecision(5)}, ${f.hi!.toPrecision(5)}]`;
        for (const v of [f.name, f.unit, f.description, range]) tr.append(el("td", undefined, v));
        ftable.append(tr);
    }
    root.append(ftable);
}
