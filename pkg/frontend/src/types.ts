// Wire types for the backend API. Field names mirror the server payloads.

export type Condition = "provenance" | "baseline";

export interface SessionView {
  session_id: string;
  condition: Condition;
  task_id: string;
  created_at: number;
  task: { title: string; description: string };
  editor: { version_count: number; current_version: number; text: string };
  turns: TurnSummary[];
}

export interface TurnSummary {
  index: number;
  question: string;
  status: TurnStatus;
}

export type TurnStatus = "pending" | "running" | "complete" | "failed" | "cancelled";

export interface SentencePayload {
  start: number;
  end: number;
  text: string;
  citations: string[];
}

export interface AnswerPayload {
  raw_text: string;
  clean_text: string;
  sentences: SentencePayload[];
  warnings: string[];
  unknown_citations: string[];
}

export type Span = [number, number];

export interface AnswerClaimPayload {
  claim_id: string;
  claim_text: string;
  claim_spans: Span[];
  evidence_spans: Span[];
  unmatched_texts: string[];
}

export interface EvidencePayload {
  core_text: string;
  context_text: string;
  similarity: number;
  location: { section: string; paragraph: number; sentence: number };
}

export interface ReportClaimPayload {
  claim_id: string;
  claim_text: string;
  citation_key: string;
  section_name: string;
  evidence: EvidencePayload[];
}

export interface MatchPayload {
  answer_claim_id: string;
  paper_claim_ids: string[];
}

export interface FlaggedEvidencePayload {
  answer_claim_id: string;
  text: string;
  spans: Span[];
  best_similarity: number | null;
  note: string;
}

export interface ReportPayload {
  turn_id: string;
  relevant_paper_claims: ReportClaimPayload[];
  included: string[];
  omitted: string[];
  matches: MatchPayload[];
  unsupported_answer_claims: string[];
  flagged_evidence: FlaggedEvidencePayload[];
  coverage: { included: number; relevant: number };
  degradations: string[];
}

export interface SourceSectionPayload {
  section: string;
  paragraphs: string[];
}

export interface SourceEntryPayload {
  citation_key: string;
  paper_title: string;
  sections: SourceSectionPayload[];
}

export interface SourceSentencePayload {
  sentence_index: number;
  citations: string[];
  sources: SourceEntryPayload[];
}

export interface ProvenanceResult {
  kind: "provenance";
  question: string;
  answer: AnswerPayload;
  answer_claims: AnswerClaimPayload[];
  report: ReportPayload;
  pregenerated?: boolean;
}

export interface BaselineResult {
  kind: "baseline";
  question: string;
  answer: AnswerPayload;
  source_view: SourceSentencePayload[];
  pregenerated?: boolean;
}

export type TurnResult = ProvenanceResult | BaselineResult;

export interface TurnView {
  index: number;
  question: string;
  status: TurnStatus;
  result?: TurnResult;
  error?: string;
}

export interface QuestionBankItem {
  question_id: string;
  text: string;
  task_id: string;
  category: { type?: string; subtype?: string };
  pregenerated: boolean;
}

export interface PaperSummary {
  paper_id: string;
  title: string;
  citation_key: string;
}

export interface PaperDetail extends PaperSummary {
  sections: { name: string; paragraphs: string[] }[];
}
