/** DOM bindings: textarea editor, caret-anchored overlay list, badges,
 * theta readout, latency indicator, and the unreachable-service banner. */

import { CompletionClient, CompletionItem, FetchLike } from "./api.js";
import { EditorController, EditorView } from "./editor.js";

const MIRROR_STYLES = [
    "fontFamily", "fontSize", "fontWeight", "lineHeight", "letterSpacing",
    "padding", "border", "boxSizing", "whiteSpace", "wordWrap", "width",
] as const;

/** Pixel position of the caret inside a textarea, via a hidden mirror div. */
function caretPosition(area: HTMLTextAreaElement, doc: Document): { left: number; top: number } {
    const mirror = doc.createElement("div");
    const style = doc.defaultView!.getComputedStyle(area);
    for (const prop of MIRROR_STYLES) {
        mirror.style[prop as any] = style[prop as any];
    }
    mirror.style.position = "absolute";
    mirror.style.visibility = "hidden";
    mirror.style.whiteSpace = "pre-wrap";
    mirror.textContent = area.value.slice(0, area.selectionStart ?? 0);
    const marker = doc.createElement("span");
    marker.textContent = "​";
    mirror.appendChild(marker);
    doc.body.appendChild(mirror);
    const areaRect = area.getBoundingClientRect();
    const markerRect = marker.getBoundingClientRect();
    const mirrorRect = mirror.getBoundingClientRect();
    doc.body.removeChild(mirror);
    return {
        left: areaRect.left + (markerRect.left - mirrorRect.left) - area.scrollLeft,
        top: areaRect.top + (markerRect.top - mirrorRect.top) - area.scrollTop + 20,
    };
}

class DomView implements EditorView {
    selected = -1;
    private items: CompletionItem[] = [];

    constructor(
        private readonly doc: Document,
        private readonly area: HTMLTextAreaElement,
        private readonly list: HTMLElement,
        private readonly thetaEl: HTMLElement,
        private readonly latencyEl: HTMLElement,
        private readonly banner: HTMLElement,
        private readonly onAccept: (item: CompletionItem) => void,
    ) {}

    getText(): string {
        return this.area.value;
    }

    getCursor(): number {
        return this.area.selectionStart ?? this.area.value.length;
    }

    setText(text: string, cursor: number): void {
        this.area.value = text;
        this.area.selectionStart = this.area.selectionEnd = cursor;
        this.area.focus();
    }

    renderSuggestions(items: CompletionItem[], theta: number): void {
        this.items = items;
        this.selected = items.length ? 0 : -1;
        this.thetaEl.textContent = `θ ${theta.toFixed(3)}`;
        this.list.replaceChildren();
        items.forEach((item, index) => {
            const row = this.doc.createElement("div");
            row.className = "suggestion" + (index === this.selected ? " selected" : "");
            const label = this.doc.createElement("span");
            label.className = "text";
            label.textContent = item.text;
            row.appendChild(label);
            for (const [flag, name] of [
                [item.origin.scope, "scope"],
                [item.origin.model, "model"],
                [item.origin.repetition, "repetition"],
            ] as const) {
                if (flag) {
                    const badge = this.doc.createElement("span");
                    badge.className = `badge ${name}`;
                    badge.textContent = name;
                    row.appendChild(badge);
                }
            }
            const score = this.doc.createElement("span");
            score.className = "score";
            score.textContent = item.score.toFixed(4);
            row.appendChild(score);
            row.addEventListener("mousedown", (event) => {
                event.preventDefault();
                this.onAccept(item);
            });
            this.list.appendChild(row);
        });
        if (items.length) {
            const pos = caretPosition(this.area, this.doc);
            this.list.style.left = `${pos.left}px`;
            this.list.style.top = `${pos.top}px`;
            this.list.classList.add("visible");
        } else {
            this.list.classList.remove("visible");
        }
    }

    clearSuggestions(): void {
        this.items = [];
        this.selected = -1;
        this.list.replaceChildren();
        this.list.classList.remove("visible");
    }

    showBanner(message: string): void {
        this.banner.textContent = message;
        this.banner.classList.add("visible");
    }

    hideBanner(): void {
        this.banner.classList.remove("visible");
    }

    updateLatency(lastMs: number, p75: number, overBudget: boolean): void {
        this.latencyEl.textContent = `last ${lastMs.toFixed(1)}ms · p75 ${p75.toFixed(1)}ms`;
        this.latencyEl.classList.toggle("warn", overBudget);
    }

    moveSelection(delta: number): void {
        if (!this.items.length) {
            return;
        }
        this.selected = (this.selected + delta + this.items.length) % this.items.length;
        const rows = this.list.querySelectorAll(".suggestion");
        rows.forEach((row, i) => row.classList.toggle("selected", i === this.selected));
    }

    selectedItem(): CompletionItem | null {
        return this.selected >= 0 ? this.items[this.selected] : null;
    }

    hasSuggestions(): boolean {
        return this.items.length > 0;
    }
}

export function bootstrap(
    doc: Document,
    baseUrl = "http://127.0.0.1:8337",
    fetchFn?: FetchLike,
): EditorController {
    const area = doc.getElementById("editor") as HTMLTextAreaElement;
    const list = doc.getElementById("suggestions")!;
    const thetaEl = doc.getElementById("theta")!;
    const latencyEl = doc.getElementById("latency")!;
    const banner = doc.getElementById("banner")!;

    const client = fetchFn
        ? new CompletionClient(baseUrl, fetchFn)
        : new CompletionClient(baseUrl);
    let view: DomView;
    const controller = new EditorController(
        {
            getText: () => view.getText(),
            getCursor: () => view.getCursor(),
            setText: (t, c) => view.setText(t, c),
            renderSuggestions: (items, theta) => view.renderSuggestions(items, theta),
            clearSuggestions: () => view.clearSuggestions(),
            showBanner: (m) => view.showBanner(m),
            hideBanner: () => view.hideBanner(),
            updateLatency: (l, p, o) => view.updateLatency(l, p, o),
        },
        client,
    );
    view = new DomView(doc, area, list, thetaEl, latencyEl, banner, (item) =>
        controller.accept(item),
    );

    area.addEventListener("input", () => controller.onEdit());
    area.addEventListener("click", () => controller.onEdit());
    area.addEventListener("keydown", (event) => {
        if (!view.hasSuggestions()) {
            return;
        }
        if (event.key === "ArrowDown") {
            event.preventDefault();
            view.moveSelection(1);
        } else if (event.key === "ArrowUp") {
            event.preventDefault();
            view.moveSelection(-1);
        } else if (event.key === "Tab" || event.key === "Enter") {
            const item = view.selectedItem();
            if (item) {
                event.preventDefault();
                controller.accept(item);
            }
        } else if (event.key === "Escape") {
            controller.dismiss();
        }
    });
    return controller;
}

declare global {
    interface Window {
        nextokController?: EditorController;
    }
}

if (typeof document !== "undefined" && document.getElementById("editor")) {
    const params = new URLSearchParams(location.search);
    const base = params.get("service") ?? "http://127.0.0.1:8337";
    window.nextokController = bootstrap(document, base);
}
