import { advanceForm, rejectForm, startForm, type FormModel } from "./form.js";
import type {
  AcceptReply,
  PhaseName,
  RecommendationPayload,
  ResponseReply,
  ResultPayload,
  RiskLevel,
  StreamEvent,
  TurnResponsePayload,
} from "./types.js";

export interface TranscriptEntry {
  speaker: "user" | "assistant";
  text: string;
}

export interface UiSessionView {
  sessionId: string | null;
  phase: PhaseName;
  riskLevel: RiskLevel;
  overrideActive: boolean;
  transcript: TranscriptEntry[];
  recommendation: RecommendationPayload | null;
  form: FormModel | null;
  result: ResultPayload | null;
  formError: string | null;
  notice: string | null;
}

export type Listener = (view: UiSessionView) => void;

function initialView(): UiSessionView {
  return {
    sessionId: null,
    phase: "Greeting",
    riskLevel: "Normal",
    overrideActive: false,
    transcript: [],
    recommendation: null,
    form: null,
    result: null,
    formError: null,
    notice: null,
  };
}

// Single ordered update queue: every mutation funnels through apply(),
// views are snapshots, and nothing in here decides anything the server
// did not already state.
export class SessionStore {
  private state: UiSessionView = initialView();
  private listeners: Listener[] = [];
  private seenSeq = -1;

  get view(): UiSessionView {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private apply(patch: Partial<UiSessionView>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  canInteract(): boolean {
    return !this.state.overrideActive && this.state.phase !== "Closed";
  }

  sessionCreated(sessionId: string, greeting: string, phase: PhaseName): void {
    this.apply({
      sessionId,
      phase,
      transcript: [{ speaker: "assistant", text: greeting }],
    });
  }

  userSpoke(text: string): void {
    this.apply({ transcript: [...this.state.transcript, { speaker: "user", text }] });
  }

  turnProcessed(payload: TurnResponsePayload): void {
    const patch: Partial<UiSessionView> = {
      phase: payload.phase,
      riskLevel: payload.risk_level,
      transcript: [...this.state.transcript, { speaker: "assistant", text: payload.reply_text }],
      recommendation: payload.recommendation,
    };
    if (payload.phase === "Intervention") {
      patch.overrideActive = true;
      patch.form = null;
      patch.recommendation = null;
    }
    this.apply(patch);
  }

  assessmentStarted(reply: AcceptReply): void {
    const start = startForm(reply.item);
    this.apply({
      phase: "Assessment",
      recommendation: null,
      form: start.form,
      formError: start.error,
      result: null,
    });
  }

  answerAccepted(reply: ResponseReply): void {
    if (this.state.form === null) return;
    const advance = advanceForm(this.state.form, reply);
    const patch: Partial<UiSessionView> = {
      form: advance.form,
      formError: advance.error,
    };
    if (advance.result !== null) {
      patch.result = advance.result;
      patch.phase = "Results";
    }
    this.apply(patch);
  }

  answerRejected(message: string): void {
    if (this.state.form === null) {
      this.apply({ formError: message });
      return;
    }
    this.apply({ form: rejectForm(this.state.form, message) });
  }

  resultLoaded(result: ResultPayload): void {
    this.apply({ result, phase: "Results" });
  }

  noticeShown(message: string | null): void {
    this.apply({ notice: message });
  }

  sessionClosed(): void {
    this.apply({ phase: "Closed" });
  }

  streamEvent(event: StreamEvent): boolean {
    if (event.seq <= this.seenSeq) {
      return false; // duplicate delivery, already rendered
    }
    this.seenSeq = event.seq;
    if (event.type === "risk") {
      const level = event.data.level as RiskLevel;
      const patch: Partial<UiSessionView> = { riskLevel: level };
      if (level === "Override") {
        patch.overrideActive = true;
        patch.form = null;
        patch.recommendation = null;
      }
      this.apply(patch);
    } else if (event.type === "phase_transition") {
      const to = event.data.to as PhaseName;
      const cause = event.data.event as string | undefined;
      const patch: Partial<UiSessionView> = { phase: to };
      if (to === "Intervention") {
        patch.overrideActive = true;
        patch.form = null;
        patch.recommendation = null;
      } else if (cause === "OverrideCleared") {
        patch.overrideActive = false;
      }
      this.apply(patch);
    } else if (event.type === "recommendation") {
      this.apply({ recommendation: event.data as unknown as RecommendationPayload });
    } else if (event.type === "scale_result") {
      this.apply({ result: event.data as unknown as ResultPayload });
    }
    return true;
  }

  get lastSeenSeq(): number {
    return this.seenSeq;
  }
}
