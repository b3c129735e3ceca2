/** Server-sent-events client over fetch streaming.
 *
 * A hand-rolled client instead of EventSource so the same code runs in
 * the browser and in node tests, and so reconnects can send the
 * Last-Event-ID header explicitly. The parser is incremental: feed it
 * arbitrary chunks, get completed events back.
 */

export interface SSEEvent {
  id: string | null;
  event: string;
  data: string;
}

export class SSEParser {
  private buffer = "";

  /** Consume one chunk; returns every event completed by it. */
  push(chunk: string): SSEEvent[] {
    this.buffer += chunk.replace(/\r\n/g, "\n").replace(/\r/g, "\n");
    const events: SSEEvent[] = [];
    let split: number;
    while ((split = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, split);
      this.buffer = this.buffer.slice(split + 2);
      const event = parseBlock(block);
      if (event !== null) events.push(event);
    }
    return events;
  }
}

function parseBlock(block: string): SSEEvent | null {
  let id: string | null = null;
  let event = "message";
  const data: string[] = [];
  let sawField = false;
  for (const line of block.split("\n")) {
    if (line === "" || line.startsWith(":")) continue;
    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    sawField = true;
    if (field === "id") id = value;
    else if (field === "event") event = value;
    else if (field === "data") data.push(value);
  }
  if (!sawField) return null;
  return { id, event, data: data.join("\n") };
}

export interface EventStreamOptions {
  onEvent: (event: SSEEvent) => void;
  onError?: (error: unknown) => void;
  /** Stream is over; no reconnect will follow. */
  onClose?: () => void;
  /** Event name that marks the end of the stream (no reconnect). */
  terminalEvent?: string;
  retryMs?: number;
  fetchImpl?: typeof fetch;
}

/**
 * Reads an SSE endpoint, tracking the last seen numeric event id and
 * resuming from it (Last-Event-ID) after any disconnect. Events with an
 * id at or below the last seen one are dropped, so a reconnect can
 * neither skip nor duplicate steps.
 */
export class EventStream {
  lastEventId: number | null = null;
  private stopped = false;
  private finished = false;
  private controller: AbortController | null = null;
  private readonly fetchImpl: typeof fetch;

  constructor(
    private readonly url: string,
    private readonly options: EventStreamOptions,
  ) {
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  /** Runs until the terminal event or stop(); resolves when done. */
  async start(): Promise<void> {
    const retry = this.options.retryMs ?? 1000;
    while (!this.stopped && !this.finished) {
      try {
        await this.readOnce();
      } catch (error) {
        if (!this.stopped) this.options.onError?.(error);
      }
      if (!this.stopped && !this.finished) {
        await delay(retry);
      }
    }
    this.options.onClose?.();
  }

  /** Abort the current connection as if the network dropped; start()
   * will reconnect and resume. */
  dropConnection(): void {
    this.controller?.abort();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async readOnce(): Promise<void> {
    this.controller = new AbortController();
    const headers: Record<string, string> = { accept: "text/event-stream" };
    if (this.lastEventId !== null) {
      headers["Last-Event-ID"] = String(this.lastEventId);
    }
    const resp = await this.fetchImpl(this.url, {
      headers,
      signal: this.controller.signal,
    });
    if (!resp.ok || resp.body === null) {
      throw new Error(`event stream failed: HTTP ${resp.status}`);
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SSEParser();
    const terminal = this.options.terminalEvent ?? "end";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) return;
        for (const event of parser.push(decoder.decode(value, { stream: true }))) {
          const id = event.id === null ? NaN : Number(event.id);
          if (Number.isFinite(id)) {
            if (this.lastEventId !== null && id <= this.lastEventId) continue;
            this.lastEventId = id;
          }
          this.options.onEvent(event);
          if (event.event === terminal) {
            this.finished = true;
            return;
          }
        }
      }
    } finally {
      reader.cancel().catch(() => undefined);
    }
  }
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
