import type { StreamEvent } from "./types.js";

// Thin wrapper over EventSource: named-event fanout, seq parsing, and
// reconnect that resumes from the last seen seq (the server redelivers
// anything newer; the store deduplicates).

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent<string>) => void): void;
  close(): void;
  onerror: ((event: unknown) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export const STREAM_EVENT_TYPES = ["risk", "phase_transition", "recommendation", "scale_result"] as const;

const defaultFactory: EventSourceFactory = (url) => new EventSource(url) as unknown as EventSourceLike;

export class EventStreamClient {
  private source: EventSourceLike | null = null;
  private lastSeq = -1;
  private stopped = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly onEvent: (event: StreamEvent) => void,
    private readonly factory: EventSourceFactory = defaultFactory,
    private readonly retryMs = 1000,
  ) {}

  streamUrl(): string {
    return `${this.baseUrl}/sessions/${this.sessionId}/events?last_seq=${this.lastSeq}`;
  }

  start(): void {
    this.stopped = false;
    this.open();
  }

  private open(): void {
    const source = this.factory(this.streamUrl());
    this.source = source;
    for (const type of STREAM_EVENT_TYPES) {
      source.addEventListener(type, (event) => this.handle(type, event));
    }
    source.onerror = () => {
      source.close();
      if (this.stopped) return;
      this.reconnectTimer = setTimeout(() => this.open(), this.retryMs);
    };
  }

  private handle(type: StreamEvent["type"], event: MessageEvent<string>): void {
    const seq = Number.parseInt(event.lastEventId, 10);
    if (!Number.isFinite(seq)) return;
    if (seq > this.lastSeq) {
      this.lastSeq = seq;
    }
    let data: Record<string, unknown>;
    try {
      data = JSON.parse(event.data) as Record<string, unknown>;
    } catch {
      return;
    }
    this.onEvent({ seq, type, data });
  }

  stop(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.source?.close();
    this.source = null;
  }
}
