import { describe, expect, it, vi } from "vitest";

import { EventStreamClient, STREAM_EVENT_TYPES, type EventSourceLike } from "../src/sse.js";
import type { StreamEvent } from "../src/types.js";

class FakeSource implements EventSourceLike {
  listeners = new Map<string, Array<(event: MessageEvent<string>) => void>>();
  onerror: ((event: unknown) => void) | null = null;
  closed = false;

  constructor(public url: string) {}

  addEventListener(type: string, listener: (event: MessageEvent<string>) => void): void {
    const existing = this.listeners.get(type) ?? [];
    existing.push(listener);
    this.listeners.set(type, existing);
  }

  close(): void {
    this.closed = true;
  }

  emit(type: string, seq: number, data: unknown): void {
    for (const listener of this.listeners.get(type) ?? []) {
      listener({ lastEventId: String(seq), data: JSON.stringify(data) } as MessageEvent<string>);
    }
  }

  fail(): void {
    this.onerror?.(new Event("error"));
  }
}

function harness() {
  const sources: FakeSource[] = [];
  const received: StreamEvent[] = [];
  const client = new EventStreamClient(
    "http://api",
    "sess",
    (event) => received.push(event),
    (url) => {
      const source = new FakeSource(url);
      sources.push(source);
      return source;
    },
    5,
  );
  return { client, sources, received };
}

describe("EventStreamClient", () => {
  it("subscribes to every stream event type", () => {
    const { client, sources } = harness();
    client.start();
    expect([...sources[0].listeners.keys()].sort()).toEqual([...STREAM_EVENT_TYPES].sort());
  });

  it("parses frames and tracks the last seen seq", () => {
    const { client, sources, received } = harness();
    client.start();
    sources[0].emit("risk", 0, { r: 0.5, level: "Normal" });
    sources[0].emit("phase_transition", 1, { from: "Greeting", to: "Exploration" });
    expect(received).toHaveLength(2);
    expect(received[1]).toEqual({
      seq: 1,
      type: "phase_transition",
      data: { from: "Greeting", to: "Exploration" },
    });
    expect(client.streamUrl()).toBe("http://api/sessions/sess/events?last_seq=1");
  });

  it("reconnects with the last seen seq after an error", async () => {
    vi.useFakeTimers();
    try {
      const { client, sources, received } = harness();
      client.start();
      sources[0].emit("risk", 0, { level: "Normal" });
      sources[0].emit("risk", 1, { level: "Normal" });
      sources[0].fail();
      expect(sources[0].closed).toBe(true);
      await vi.advanceTimersByTimeAsync(10);
      expect(sources).toHaveLength(2);
      expect(sources[1].url).toBe("http://api/sessions/sess/events?last_seq=1");
      // Redelivered and fresh events both flow; the store dedups by seq.
      sources[1].emit("risk", 1, { level: "Normal" });
      sources[1].emit("risk", 2, { level: "Elevated" });
      expect(received.map((e) => e.seq)).toEqual([0, 1, 1, 2]);
    } finally {
      vi.useRealTimers();
    }
  });

  it("stop prevents reconnection", async () => {
    vi.useFakeTimers();
    try {
      const { client, sources } = harness();
      client.start();
      client.stop();
      expect(sources[0].closed).toBe(true);
      sources[0].fail();
      await vi.advanceTimersByTimeAsync(50);
      expect(sources).toHaveLength(1);
    } finally {
      vi.useRealTimers();
    }
  });

  it("ignores frames with unparseable ids or data", () => {
    const { client, sources, received } = harness();
    client.start();
    for (const listener of sources[0].listeners.get("risk") ?? []) {
      listener({ lastEventId: "nope", data: "{}" } as MessageEvent<string>);
      listener({ lastEventId: "4", data: "{broken json" } as MessageEvent<string>);
    }
    expect(received).toHaveLength(0);
  });
});
