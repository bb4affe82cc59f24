import type { ApiClient } from "../src/api";
import type {
  BaselineResult,
  ProvenanceResult,
  ReportPayload,
  SessionView,
  TurnView,
} from "../src/types";

export function sessionFixture(condition: "provenance" | "baseline"): SessionView {
  return {
    session_id: "s-test",
    condition,
    task_id: "synthesis",
    created_at: 1000,
    task: { title: "Synthesis", description: "Edit the draft." },
    editor: { version_count: 1, current_version: 0, text: "Initial draft." },
    turns: [],
  };
}

// Answer text layout (clean_text offsets):
// "Paper claim zero holds. Paper claim one holds. Something new entirely."
//  0                     23|24                  46|47                    70
export const CLEAN_TEXT = "Paper claim zero holds. Paper claim one holds. Something new entirely.";

export function reportFixture(): ReportPayload {
  return {
    turn_id: "t0",
    relevant_paper_claims: [
      {
        claim_id: "pc0",
        claim_text: "Paper claim zero holds.",
        citation_key: "Ardan et al., 2020",
        section_name: "Findings",
        evidence: [
          {
            core_text: "Zero evidence sentence.",
            context_text: "Zero evidence sentence. And its neighbor.",
            similarity: 0.91,
            location: { section: "Findings", paragraph: 0, sentence: 0 },
          },
        ],
      },
      {
        claim_id: "pc1",
        claim_text: "Paper claim one holds.",
        citation_key: "Ardan et al., 2020",
        section_name: "Findings",
        evidence: [],
      },
      {
        claim_id: "pc2",
        claim_text: "An omitted claim.",
        citation_key: "Bell and Ng, 2021",
        section_name: "Operations",
        evidence: [],
      },
      {
        claim_id: "pc3",
        claim_text: "Another omitted claim.",
        citation_key: "Bell and Ng, 2021",
        section_name: "Operations",
        evidence: [],
      },
      {
        claim_id: "pc4",
        claim_text: "A third omitted claim.",
        citation_key: "Bell and Ng, 2021",
        section_name: "Operations",
        evidence: [],
      },
    ],
    included: ["pc0", "pc1"],
    omitted: ["pc2", "pc3", "pc4"],
    matches: [
      { answer_claim_id: "a0", paper_claim_ids: ["pc0"] },
      { answer_claim_id: "a1", paper_claim_ids: ["pc1"] },
    ],
    unsupported_answer_claims: ["a2"],
    flagged_evidence: [],
    coverage: { included: 2, relevant: 5 },
    degradations: [],
  };
}

export function threeOfFiveReport(): ReportPayload {
  const report = reportFixture();
  return {
    ...report,
    included: ["pc0", "pc1", "pc2"],
    omitted: ["pc3", "pc4"],
    matches: [
      { answer_claim_id: "a0", paper_claim_ids: ["pc0"] },
      { answer_claim_id: "a1", paper_claim_ids: ["pc1", "pc2"] },
    ],
    coverage: { included: 3, relevant: 5 },
  };
}

export function provenanceTurn(): TurnView {
  const result: ProvenanceResult = {
    kind: "provenance",
    question: "What holds?",
    answer: {
      raw_text: CLEAN_TEXT,
      clean_text: CLEAN_TEXT,
      sentences: [
        { start: 0, end: 23, text: "Paper claim zero holds.", citations: ["Ardan et al., 2020"] },
        { start: 24, end: 46, text: "Paper claim one holds.", citations: ["Ardan et al., 2020"] },
        { start: 47, end: 70, text: "Something new entirely.", citations: [] },
      ],
      warnings: [],
      unknown_citations: [],
    },
    answer_claims: [
      {
        claim_id: "a0",
        claim_text: "Paper claim zero holds.",
        claim_spans: [[0, 23]],
        evidence_spans: [],
        unmatched_texts: [],
      },
      {
        claim_id: "a1",
        claim_text: "Paper claim one holds.",
        claim_spans: [[24, 46]],
        evidence_spans: [],
        unmatched_texts: [],
      },
      {
        claim_id: "a2",
        claim_text: "Something new entirely.",
        claim_spans: [[47, 70]],
        evidence_spans: [],
        unmatched_texts: [],
      },
    ],
    report: reportFixture(),
  };
  return { index: 0, question: "What holds?", status: "complete", result };
}

export function baselineTurn(): TurnView {
  const result: BaselineResult = {
    kind: "baseline",
    question: "What holds?",
    answer: provenanceTurn().result!.answer,
    source_view: [
      {
        sentence_index: 0,
        citations: ["Ardan et al., 2020"],
        sources: [
          {
            citation_key: "Ardan et al., 2020",
            paper_title: "Alpha and Beta Under Load",
            sections: [
              {
                section: "Findings",
                paragraphs: ["Alpha cut costs by half. Beta ran slower under load."],
              },
            ],
          },
        ],
      },
      { sentence_index: 1, citations: ["Ardan et al., 2020"], sources: [] },
      { sentence_index: 2, citations: [], sources: [] },
    ],
  };
  return { index: 0, question: "What holds?", status: "complete", result };
}

export function fakeApi(overrides: Partial<ApiClient> = {}): ApiClient & { events: unknown[] } {
  const events: unknown[] = [];
  const base: ApiClient = {
    createSession: async (condition) => sessionFixture(condition),
    getSession: async () => sessionFixture("provenance"),
    ask: async () => ({ turn_index: 0, status: "complete" }),
    getTurn: async () => provenanceTurn(),
    cancelTurn: async () => ({ status: "cancelling" }),
    saveEditor: async () => ({ version_id: 1 }),
    postEvent: async (sessionId, kind, payload) => {
      events.push({ sessionId, kind, payload });
      return {};
    },
    questionBank: async () => ({ questions: [] }),
    listPapers: async () => ({ papers: [] }),
    getPaper: async () => ({
      paper_id: "alpha",
      title: "Alpha and Beta Under Load",
      citation_key: "Ardan et al., 2020",
      sections: [{ name: "Findings", paragraphs: ["Alpha cut costs by half."] }],
    }),
  };
  return Object.assign(base, overrides, { events });
}
