/** Scripted completion loop, DOM-free: type a prefix, receive the list in
 * score order, accept an item and see the text spliced, and never render a
 * stale response. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { CompletionClient, CompleteResponse, CompletionItem, FetchLike } from "../src/api.js";
import { EditorController, EditorView, atIdentifierBoundary, spliceAccept } from "../src/editor.js";

function item(text: string, score: number, scope = true): CompletionItem {
    return {
        text,
        score,
        origin: { scope, model: !scope, repetition: false },
        concatenated: text.endsWith("()"),
    };
}

function response(items: CompletionItem[], theta = 0.3, latency = 8): CompleteResponse {
    return { items, theta, latency_ms: latency };
}

class FakeView implements EditorView {
    text = "";
    cursor = 0;
    rendered: CompletionItem[][] = [];
    thetas: number[] = [];
    clears = 0;
    banner: string | null = null;
    latencyUpdates: Array<{ last: number; p75: number; over: boolean }> = [];

    getText() { return this.text; }
    getCursor() { return this.cursor; }
    setText(text: string, cursor: number) { this.text = text; this.cursor = cursor; }
    renderSuggestions(items: CompletionItem[], theta: number) {
        this.rendered.push(items);
        this.thetas.push(theta);
    }
    clearSuggestions() { this.clears += 1; }
    showBanner(message: string) { this.banner = message; }
    hideBanner() { this.banner = null; }
    updateLatency(last: number, p75: number, over: boolean) {
        this.latencyUpdates.push({ last, p75, over });
    }
}

interface Pending {
    body: string;
    resolve: (resp: Response) => void;
    reject: (err: Error) => void;
}

function deferredFetch() {
    const pending: Pending[] = [];
    const fetchFn: FetchLike = (_url, init) =>
        new Promise<Response>((resolve, reject) => {
            pending.push({ body: String(init?.body ?? ""), resolve, reject });
        });
    const respond = (index: number, payload: CompleteResponse) => {
        pending[index].resolve(
            new Response(JSON.stringify(payload), {
                status: 200,
                headers: { "Content-Type": "application/json" },
            }),
        );
    };
    return { fetchFn, pending, respond };
}

async function flush() {
    for (let i = 0; i < 12; i += 1) {
        await Promise.resolve();
    }
}

describe("EditorController", () => {
    beforeEach(() => vi.useFakeTimers());
    afterEach(() => vi.useRealTimers());

    function setup() {
        const view = new FakeView();
        const { fetchFn, pending, respond } = deferredFetch();
        const client = new CompletionClient("http://svc", fetchFn);
        const controller = new EditorController(view, client, { debounceMs: 75, k: 5 });
        return { view, controller, pending, respond };
    }

    it("types a prefix, renders the list in response order, accepts and splices", async () => {
        const { view, controller, pending, respond } = setup();
        view.text = "void alpha() {} void main() { al";
        view.cursor = view.text.length;
        controller.onEdit();
        expect(pending.length).toBe(0); // debounced, nothing on the wire yet
        vi.advanceTimersByTime(75);
        expect(pending.length).toBe(1);

        const items = [item("alpha", 0.52), item("alpha()", 0.52), item("add", 0.1, false)];
        respond(0, response(items, 0.4));
        await flush();

        expect(view.rendered.length).toBe(1);
        expect(view.rendered[0].map((i) => i.text)).toEqual(["alpha", "alpha()", "add"]);
        expect(view.thetas[0]).toBeCloseTo(0.4);

        controller.accept(view.rendered[0][1]); // alpha()
        expect(view.text).toBe("void alpha() {} void main() { alpha()");
        expect(view.cursor).toBe(view.text.length);

        vi.advanceTimersByTime(75); // accept re-triggers completion
        expect(pending.length).toBe(2);
    });

    it("drops stale responses superseded by a newer edit", async () => {
        const { view, controller, pending, respond } = setup();
        view.text = "var co";
        view.cursor = view.text.length;
        controller.onEdit();
        vi.advanceTimersByTime(75);
        expect(pending.length).toBe(1);

        // user keeps typing before the first response lands
        view.text = "var cou";
        view.cursor = view.text.length;
        controller.onEdit();
        vi.advanceTimersByTime(75); // second request wants to fire: in-flight, marked dirty

        respond(0, response([item("STALE", 0.9)]));
        await flush();
        // stale response never rendered; the dirty flag re-fired instead
        expect(view.rendered.length).toBe(0);
        expect(pending.length).toBe(2);

        respond(1, response([item("count", 0.8)]));
        await flush();
        expect(view.rendered.length).toBe(1);
        expect(view.rendered[0][0].text).toBe("count");
    });

    it("keeps exactly one request in flight", async () => {
        const { view, controller, pending, respond } = setup();
        view.text = "a";
        view.cursor = 1;
        controller.onEdit();
        vi.advanceTimersByTime(75);
        for (let i = 0; i < 4; i += 1) {
            view.text += "a";
            view.cursor += 1;
            controller.onEdit();
            vi.advanceTimersByTime(75);
        }
        expect(pending.length).toBe(1); // everything else queued behind it
        respond(0, response([item("stale", 0.5)]));
        await flush();
        expect(pending.length).toBe(2);
        respond(1, response([item("aaaaa", 0.5)]));
        await flush();
        expect(view.rendered.length).toBe(1);
        expect(view.rendered[0][0].text).toBe("aaaaa");
    });

    it("suppresses requests away from identifier boundaries", () => {
        const { view, controller, pending } = setup();
        view.text = 'var s = "';
        view.cursor = view.text.length; // right after an opening quote
        controller.onEdit();
        vi.advanceTimersByTime(200);
        expect(pending.length).toBe(0);
        expect(view.clears).toBeGreaterThan(0);
    });

    it("shows a banner when the service is unreachable and recovers", async () => {
        const { view, controller, pending } = setup();
        view.text = "x";
        view.cursor = 1;
        controller.onEdit();
        vi.advanceTimersByTime(75);
        pending[0].reject(new Error("refused"));
        await flush();
        expect(view.banner).toMatch(/unreachable/);

        controller.onEdit();
        vi.advanceTimersByTime(75);
        pending[1].resolve(
            new Response(JSON.stringify(response([item("x", 0.2)])), { status: 200 }),
        );
        await flush();
        expect(view.banner).toBeNull();
    });

    it("tracks latency and flags the 100ms budget", async () => {
        const { view, controller, pending, respond } = setup();
        view.text = "x";
        view.cursor = 1;
        for (let i = 0; i < 3; i += 1) {
            controller.onEdit();
            vi.advanceTimersByTime(75);
            respond(i, response([item("x", 0.2)], 0.3, 150));
            await flush();
        }
        const last = view.latencyUpdates.at(-1)!;
        expect(last.last).toBe(150);
        expect(last.p75).toBe(150);
        expect(last.over).toBe(true);
    });
});

describe("spliceAccept", () => {
    it("completes the identifier fragment before the cursor", () => {
        const out = spliceAccept("var co", 6, "count");
        expect(out).toEqual({ text: "var count", cursor: 9 });
    });

    it("splices verbatim at a fresh boundary", () => {
        const out = spliceAccept("x = ", 4, '"s"');
        expect(out).toEqual({ text: 'x = "s"', cursor: 7 });
    });

    it("splices mid-text without touching the suffix", () => {
        const out = spliceAccept("f(); rest", 4, " g()");
        expect(out.text).toBe("f(); g() rest");
    });

    it("does not eat a non-prefix fragment", () => {
        const out = spliceAccept("var zz", 6, "count");
        expect(out.text).toBe("var zzcount");
    });
});

describe("atIdentifierBoundary", () => {
    it("covers starts, identifiers, dots, and fresh-token positions", () => {
        expect(atIdentifierBoundary("", 0)).toBe(true);
        expect(atIdentifierBoundary("foo", 3)).toBe(true);
        expect(atIdentifierBoundary("x.", 2)).toBe(true);
        expect(atIdentifierBoundary("var ", 4)).toBe(true);
        expect(atIdentifierBoundary("f(", 2)).toBe(true);
        expect(atIdentifierBoundary('s = "', 5)).toBe(false);
    });
});
