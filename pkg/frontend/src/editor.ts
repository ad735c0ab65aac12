/** Editor controller: the type -> suggest -> accept loop, DOM-free.
 *
 * Holds the single-in-flight/stale-drop discipline: every edit bumps a
 * version counter, a response is rendered only if nothing changed since its
 * request was sent, and at most one request is on the wire (edits that
 * arrive mid-flight mark the state dirty and re-fire on completion).
 * Rendering order is exactly the response order; the controller never
 * re-sorts.
 */

import { CompletionClient, CompletionItem, CompleteResponse } from "./api.js";
import { debounce, Debounced } from "./debounce.js";
import { LatencyTracker } from "./latency.js";

export interface EditorView {
    getText(): string;
    getCursor(): number; // UTF-16 character index
    setText(text: string, cursor: number): void;
    renderSuggestions(items: CompletionItem[], theta: number): void;
    clearSuggestions(): void;
    showBanner(message: string): void;
    hideBanner(): void;
    updateLatency(lastMs: number, p75: number, overBudget: boolean): void;
}

export interface ControllerOptions {
    debounceMs?: number;
    k?: number;
    budgetMs?: number;
}

const IDENT_CHAR = /[A-Za-z0-9_]/;
const TRIGGER_BEFORE = /[A-Za-z0-9_.\s(={,;[]/;

/** A completion is requested only at identifier boundaries: the start of
 * input, inside or at the end of an identifier, after a member-access dot,
 * or after whitespace/opening punctuation where a new token can begin. */
export function atIdentifierBoundary(text: string, cursor: number): boolean {
    if (cursor === 0) {
        return true;
    }
    return TRIGGER_BEFORE.test(text[cursor - 1]);
}

/** Splice accepted text at the cursor. If the caret sits at the end of an
 * identifier fragment and the accepted text starts with it, the fragment is
 * completed instead of duplicated. */
export function spliceAccept(
    text: string,
    cursor: number,
    accepted: string,
): { text: string; cursor: number } {
    const before = text.slice(0, cursor);
    const match = /[A-Za-z_][A-Za-z0-9_]*$/.exec(before);
    let start = cursor;
    if (match && accepted.startsWith(match[0])) {
        start = cursor - match[0].length;
    }
    const next = text.slice(0, start) + accepted + text.slice(cursor);
    return { text: next, cursor: start + accepted.length };
}

export class EditorController {
    private version = 0;
    private inFlight = false;
    private dirty = false;
    private readonly k: number;
    private readonly fire: Debounced<[]>;
    readonly latency: LatencyTracker;
    lastItems: CompletionItem[] = [];
    lastTheta = 0;

    constructor(
        private readonly view: EditorView,
        private readonly client: CompletionClient,
        options: ControllerOptions = {},
    ) {
        this.k = options.k ?? 8;
        this.latency = new LatencyTracker(options.budgetMs ?? 100);
        this.fire = debounce(() => this.request(), options.debounceMs ?? 75);
    }

    /** Call on every text or caret change. */
    onEdit(force = false): void {
        this.version += 1;
        const text = this.view.getText();
        const cursor = this.view.getCursor();
        if (!force && !atIdentifierBoundary(text, cursor)) {
            this.fire.cancel();
            this.lastItems = [];
            this.view.clearSuggestions();
            return;
        }
        this.fire();
    }

    /** Accept a suggestion: splice its text and re-trigger completion
     * unconditionally (the caret may land after punctuation). */
    accept(item: CompletionItem): void {
        const { text, cursor } = spliceAccept(
            this.view.getText(),
            this.view.getCursor(),
            item.text,
        );
        this.view.setText(text, cursor);
        this.view.clearSuggestions();
        this.lastItems = [];
        this.onEdit(true);
    }

    dismiss(): void {
        this.fire.cancel();
        this.lastItems = [];
        this.view.clearSuggestions();
    }

    private request(): void {
        if (this.inFlight) {
            this.dirty = true;
            return;
        }
        this.inFlight = true;
        const sentVersion = this.version;
        const text = this.view.getText();
        const cursor = this.view.getCursor();
        const started = Date.now();
        this.client
            .complete(text, cursor, this.k)
            .then((resp) => this.onResponse(resp, sentVersion, started))
            .catch(() => {
                this.inFlight = false;
                this.view.showBanner("completion service unreachable");
                this.refireIfDirty();
            });
    }

    private onResponse(resp: CompleteResponse, sentVersion: number, started: number): void {
        this.inFlight = false;
        this.view.hideBanner();
        const measured = resp.latency_ms > 0 ? resp.latency_ms : Date.now() - started;
        this.latency.record(measured);
        this.view.updateLatency(measured, this.latency.p75 ?? measured, this.latency.overBudget);
        if (sentVersion === this.version) {
            // render in response order, never re-sorted
            this.lastItems = resp.items;
            this.lastTheta = resp.theta;
            this.view.renderSuggestions(resp.items, resp.theta);
        }
        this.refireIfDirty();
    }

    private refireIfDirty(): void {
        if (this.dirty) {
            this.dirty = false;
            this.request();
        }
    }
}
