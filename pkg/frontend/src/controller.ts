import { ApiClient, ApiError } from "./api.js";
import { EventStreamClient, type EventSourceFactory } from "./sse.js";
import { SessionStore } from "./store.js";

// Mediates user intent -> API -> store. While the override banner is up
// (or the session closed), every interactive path is a hard no-op: this
// is the single chokepoint the banner-dominance guarantee hangs on.

export class SessionController {
  readonly store = new SessionStore();
  private stream: EventStreamClient | null = null;
  private promptShownAt = Date.now();

  constructor(
    private readonly api: ApiClient,
    private readonly streamFactory?: EventSourceFactory,
  ) {}

  async begin(): Promise<void> {
    const created = await this.api.createSession();
    this.store.sessionCreated(created.session_id, created.greeting, created.phase);
    this.promptShownAt = Date.now();
    this.stream = new EventStreamClient(
      this.api.baseUrl,
      created.session_id,
      (event) => this.store.streamEvent(event),
      this.streamFactory,
    );
    this.stream.start();
  }

  private get sessionId(): string {
    const id = this.store.view.sessionId;
    if (id === null) throw new Error("session not started");
    return id;
  }

  async sendTurn(text: string): Promise<void> {
    if (!this.store.canInteract() || !text.trim()) return;
    const latency = Date.now() - this.promptShownAt;
    this.store.userSpoke(text);
    const response = await this.api.sendTurn(this.sessionId, text, latency);
    this.store.turnProcessed(response);
    this.promptShownAt = Date.now();
  }

  async acceptScale(scaleId: string): Promise<void> {
    if (!this.store.canInteract()) return;
    try {
      const reply = await this.api.accept(this.sessionId, scaleId);
      this.store.assessmentStarted(reply);
    } catch (error) {
      if (error instanceof ApiError) {
        this.store.noticeShown(error.message);
        return;
      }
      throw error;
    }
  }

  async answer(value: number): Promise<void> {
    if (!this.store.canInteract()) return;
    const form = this.store.view.form;
    if (form === null) return;
    try {
      const reply = await this.api.submitResponse(this.sessionId, form.item.item_id, value);
      this.store.answerAccepted(reply);
    } catch (error) {
      if (error instanceof ApiError) {
        this.store.answerRejected(error.message);
        return;
      }
      throw error;
    }
  }

  async closeSession(): Promise<void> {
    if (this.store.view.sessionId === null) return;
    await this.api.closeSession(this.sessionId);
    this.store.sessionClosed();
    this.stream?.stop();
  }

  dispose(): void {
    this.stream?.stop();
  }
}
