// Payload shapes mirrored from the engine API. The client renders these
// verbatim; it never derives or recomputes a decision.

export type PhaseName =
  | "Greeting"
  | "Exploration"
  | "Refinement"
  | "Recommendation"
  | "Assessment"
  | "Results"
  | "Intervention"
  | "Closed";

export type RiskLevel = "Normal" | "Elevated" | "Override";

export interface ScoredScale {
  scale_id: string;
  score: number;
  adaptability: number;
  priority: number;
}

export interface RecommendationPayload {
  mode: "single" | "joint-multi";
  scales: ScoredScale[];
  rationale: string[];
}

export interface ScaleOptionPayload {
  label: string;
  value: number;
}

export interface ScaleItemPayload {
  scale_id: string;
  title?: string;
  item_id: string;
  prompt: string;
  options: ScaleOptionPayload[];
  index: number;
  total: number;
  answered: number;
}

export interface TurnResponsePayload {
  reply_text: string;
  phase: PhaseName;
  recommendation: RecommendationPayload | null;
  scale_item: ScaleItemPayload | null;
  risk_level: RiskLevel;
  context_version: number;
}

export interface ResultPayload {
  scale_id: string;
  title?: string;
  total_score: number;
  subscale_scores: Record<string, number>;
  band_label: string;
  normalized_severity: number;
  completed_at: number;
  interpretation?: string;
}

export interface AcceptReply {
  scale_id: string;
  item: ScaleItemPayload | null;
}

export interface ResponseReply {
  done: boolean;
  item?: ScaleItemPayload | null;
  result?: ResultPayload;
}

export interface SessionCreated {
  session_id: string;
  phase: PhaseName;
  greeting: string;
}

export interface StreamEvent {
  seq: number;
  type: "risk" | "phase_transition" | "recommendation" | "scale_result";
  data: Record<string, unknown>;
}
