/** Types and HTTP client for the completion service. */

export interface Origin {
    scope: boolean;
    model: boolean;
    repetition: boolean;
}

export interface CompletionItem {
    text: string;
    score: number;
    origin: Origin;
    concatenated: boolean;
}

export interface CompleteResponse {
    items: CompletionItem[];
    theta: number;
    latency_ms: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
    constructor(readonly status: number, message: string) {
        super(message);
    }
}

/** Byte offset of a UTF-16 character index, as the service expects. */
export function byteOffset(text: string, charIndex: number): number {
    return new TextEncoder().encode(text.slice(0, charIndex)).length;
}

export class CompletionClient {
    constructor(
        private readonly baseUrl: string,
        private readonly fetchFn: FetchLike = (...args) => fetch(...args),
    ) {}

    async complete(source: string, cursorChars: number, k: number): Promise<CompleteResponse> {
        const body = JSON.stringify({
            source,
            cursor: byteOffset(source, cursorChars),
            k,
        });
        const resp = await this.fetchFn(`${this.baseUrl}/complete`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body,
        });
        if (!resp.ok) {
            throw new ServiceError(resp.status, `complete failed: ${resp.status}`);
        }
        return (await resp.json()) as CompleteResponse;
    }

    async health(): Promise<boolean> {
        try {
            const resp = await this.fetchFn(`${this.baseUrl}/health`);
            return resp.ok;
        } catch {
            return false;
        }
    }
}
