import { describe, expect, it } from "vitest";

import { EventStream, SSEParser, type SSEEvent } from "../src/sse.js";
import { scriptedFetch } from "./helpers.js";

describe("SSEParser", () => {
  it("parses a complete event from one chunk", () => {
    const parser = new SSEParser();
    const events = parser.push('id: 3\nevent: step\ndata: {"step": 3}\n\n');
    expect(events).toEqual([{ id: "3", event: "step", data: '{"step": 3}' }]);
  });

  it("buffers events split across arbitrary chunk boundaries", () => {
    const parser = new SSEParser();
    const wire = 'id: 0\nevent: step\ndata: {"a": 1}\n\nid: 1\nevent: step\ndata: {"a": 2}\n\n';
    const events: SSEEvent[] = [];
    for (const ch of wire) events.push(...parser.push(ch));
    expect(events.map((e) => e.id)).toEqual(["0", "1"]);
    expect(events.map((e) => e.data)).toEqual(['{"a": 1}', '{"a": 2}']);
  });

  it("returns several events completed by a single chunk", () => {
    const parser = new SSEParser();
    const events = parser.push("data: x\n\ndata: y\n\ndata: z\n\n");
    expect(events.map((e) => e.data)).toEqual(["x", "y", "z"]);
    expect(events.every((e) => e.event === "message")).toBe(true);
  });

  it("drops comment-only blocks such as keepalives", () => {
    const parser = new SSEParser();
    expect(parser.push(": keepalive\n\n")).toEqual([]);
    expect(parser.push(":\n\ndata: real\n\n")).toEqual([
      { id: null, event: "message", data: "real" },
    ]);
  });

  it("joins multiple data lines with newlines", () => {
    const parser = new SSEParser();
    const events = parser.push("data: line one\ndata: line two\n\n");
    expect(events[0]!.data).toBe("line one\nline two");
  });

  it("normalizes CRLF line endings", () => {
    const parser = new SSEParser();
    const events = parser.push("id: 7\r\ndata: win\r\n\r\n");
    expect(events).toEqual([{ id: "7", event: "message", data: "win" }]);
  });

  it("handles field lines without a value space", () => {
    const parser = new SSEParser();
    const events = parser.push("id:9\ndata:compact\n\n");
    expect(events[0]).toEqual({ id: "9", event: "message", data: "compact" });
  });
});

function stepBlock(id: number): string {
  return `id: ${id}\nevent: step\ndata: {"step": ${id}}\n\n`;
}

function endBlock(id: number): string {
  return `id: ${id}\nevent: end\ndata: {"status": "terminated"}\n\n`;
}

describe("EventStream", () => {
  it("delivers events in order and finishes on the terminal event", async () => {
    const { fetchImpl } = scriptedFetch([
      { chunks: [stepBlock(0), stepBlock(1), stepBlock(2), endBlock(3)] },
    ]);
    const seen: SSEEvent[] = [];
    let closed = false;
    const stream = new EventStream("http://test/events", {
      onEvent: (e) => seen.push(e),
      onClose: () => {
        closed = true;
      },
      retryMs: 5,
      fetchImpl,
    });
    await stream.start();
    expect(seen.map((e) => e.id)).toEqual(["0", "1", "2", "3"]);
    expect(seen[3]!.event).toBe("end");
    expect(closed).toBe(true);
    expect(stream.lastEventId).toBe(3);
  });

  it("resumes after a server-side close with Last-Event-ID and no gaps", async () => {
    const { fetchImpl, headers } = scriptedFetch([
      { chunks: [stepBlock(0), stepBlock(1)] },
      { chunks: [stepBlock(2), endBlock(3)] },
    ]);
    const ids: string[] = [];
    const stream = new EventStream("http://test/events", {
      onEvent: (e) => ids.push(e.id!),
      retryMs: 5,
      fetchImpl,
    });
    await stream.start();
    expect(ids).toEqual(["0", "1", "2", "3"]);
    expect(headers.length).toBe(2);
    expect(headers[0]!["Last-Event-ID"]).toBeUndefined();
    expect(headers[1]!["Last-Event-ID"]).toBe("1");
  });

  it("drops replayed events at or below the last seen id", async () => {
    const { fetchImpl } = scriptedFetch([
      { chunks: [stepBlock(0), stepBlock(1)] },
      // a badly behaved server replays from the start
      { chunks: [stepBlock(0), stepBlock(1), stepBlock(2), endBlock(3)] },
    ]);
    const ids: string[] = [];
    const stream = new EventStream("http://test/events", {
      onEvent: (e) => ids.push(e.id!),
      retryMs: 5,
      fetchImpl,
    });
    await stream.start();
    expect(ids).toEqual(["0", "1", "2", "3"]);
  });

  it("reconnects after dropConnection() without losing events", async () => {
    const { fetchImpl, headers } = scriptedFetch([
      { chunks: [stepBlock(0)], hang: true },
      { chunks: [stepBlock(1), endBlock(2)] },
    ]);
    const ids: string[] = [];
    const errors: unknown[] = [];
    const stream = new EventStream("http://test/events", {
      onEvent: (e) => {
        ids.push(e.id!);
        if (e.id === "0") stream.dropConnection();
      },
      onError: (err) => errors.push(err),
      retryMs: 5,
      fetchImpl,
    });
    await stream.start();
    expect(ids).toEqual(["0", "1", "2"]);
    expect(headers[1]!["Last-Event-ID"]).toBe("0");
    expect(errors.length).toBe(1);
  });

  it("stop() ends the loop without the terminal event", async () => {
    const { fetchImpl } = scriptedFetch([{ chunks: [stepBlock(0)], hang: true }]);
    let closed = false;
    const stream = new EventStream("http://test/events", {
      onEvent: (e) => {
        if (e.id === "0") stream.stop();
      },
      onClose: () => {
        closed = true;
      },
      retryMs: 5,
      fetchImpl,
    });
    await stream.start();
    expect(closed).toBe(true);
  });

  it("reports HTTP failures through onError and retries", async () => {
    const { fetchImpl, headers } = scriptedFetch([
      { chunks: [], status: 503 },
      { chunks: [endBlock(0)] },
    ]);
    const errors: unknown[] = [];
    const stream = new EventStream("http://test/events", {
      onEvent: () => {},
      onError: (err) => errors.push(err),
      retryMs: 5,
      fetchImpl,
    });
    await stream.start();
    expect(headers.length).toBe(2);
    expect(errors.length).toBe(1);
    expect(String(errors[0])).toContain("503");
  });
});
