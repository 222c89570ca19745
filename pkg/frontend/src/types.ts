/** Wire types mirroring the prediction service's JSON API. */

export type DocType = "S" | "E" | "A";

export interface DocumentEntry {
  type: DocType;
  seq: number;
  text: string;
}

export interface ModelInfo {
  model_id: string;
  family: string;
  label_count: number;
  threshold: number;
  profile: string | null;
}

export interface AttentionEntry {
  token: string;
  weight: number;
}

export interface Suggestion {
  code: string;
  confidence: number;
  above_threshold: boolean;
  attention?: AttentionEntry[];
}

export interface PredictionTrace {
  token_count: number;
  truncated: boolean;
}

export interface PredictionRequest {
  model_id: string;
  documents?: DocumentEntry[];
  text?: string;
  top_n?: number;
  threshold?: number;
}

export interface PredictionResponse {
  model_id: string;
  threshold: number;
  suggestions: Suggestion[];
  trace: PredictionTrace;
}

/** Decisions the service accepts; locally a code may also be pending or skipped. */
export type Decision = "accepted" | "rejected" | "added";

export interface FeedbackDecision {
  code: string;
  decision: Decision;
}

export interface FeedbackRecord {
  fingerprint: string;
  model_id: string;
  suggested: string[];
  decisions: FeedbackDecision[];
  coder_id: string;
  timestamp: string;
}

export interface FeedbackAck {
  status: string;
  stored: boolean;
}
