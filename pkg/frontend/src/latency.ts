/** Sliding-window latency tracker for the p75 budget indicator. */

export class LatencyTracker {
    private samples: number[] = [];

    constructor(
        readonly budgetMs: number = 100,
        private readonly windowSize: number = 100,
    ) {}

    record(ms: number): void {
        this.samples.push(ms);
        if (this.samples.length > this.windowSize) {
            this.samples.shift();
        }
    }

    get count(): number {
        return this.samples.length;
    }

    get last(): number | null {
        return this.samples.length ? this.samples[this.samples.length - 1] : null;
    }

    /** Nearest-rank p75 over the sliding window. */
    get p75(): number | null {
        if (!this.samples.length) {
            return null;
        }
        const sorted = [...this.samples].sort((a, b) => a - b);
        const rank = Math.ceil(0.75 * sorted.length);
        return sorted[Math.max(0, rank - 1)];
    }

    get overBudget(): boolean {
        const p = this.p75;
        return p !== null && p >= this.budgetMs;
    }
}
