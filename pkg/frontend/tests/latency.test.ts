import { describe, expect, it } from "vitest";

import { LatencyTracker } from "../src/latency.js";

describe("LatencyTracker", () => {
    it("empty tracker has no percentile", () => {
        const t = new LatencyTracker();
        expect(t.p75).toBeNull();
        expect(t.overBudget).toBe(false);
    });

    it("computes nearest-rank p75", () => {
        const t = new LatencyTracker(100);
        [10, 20, 30, 40].forEach((ms) => t.record(ms));
        expect(t.p75).toBe(30);
        expect(t.overBudget).toBe(false);
    });

    it("flags the budget when p75 crosses it", () => {
        const t = new LatencyTracker(100);
        [120, 130, 140, 150].forEach((ms) => t.record(ms));
        expect(t.overBudget).toBe(true);
    });

    it("slides the window", () => {
        const t = new LatencyTracker(100, 4);
        [500, 500, 500, 500, 1, 1, 1, 1].forEach((ms) => t.record(ms));
        expect(t.p75).toBe(1);
    });
});
