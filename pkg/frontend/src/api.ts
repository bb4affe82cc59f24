import type {
  Condition,
  PaperDetail,
  PaperSummary,
  QuestionBankItem,
  SessionView,
  TurnView,
} from "./types";

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let message = `${resp.status}`;
    try {
      const body = await resp.json();
      message = body?.error?.message ?? message;
    } catch {
      // non-JSON error body; keep the status code
    }
    throw new Error(message);
  }
  return (await resp.json()) as T;
}

// Event timestamps must be monotone per session; a local clock guard keeps
// bursts of clicks within the same millisecond in order.
let lastEventTs = 0;
function nextTimestamp(): number {
  lastEventTs = Math.max(Date.now(), lastEventTs + 1);
  return lastEventTs;
}

export const api = {
  createSession(condition: Condition, taskId: string): Promise<SessionView> {
    return request("/api/sessions", {
      method: "POST",
      body: JSON.stringify({ condition, task_id: taskId }),
    });
  },
  getSession(sessionId: string): Promise<SessionView> {
    return request(`/api/sessions/${sessionId}`);
  },
  ask(
    sessionId: string,
    body: { text?: string; question_id?: string },
  ): Promise<{ turn_index: number; status: string }> {
    return request(`/api/sessions/${sessionId}/ask`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  },
  getTurn(sessionId: string, index: number): Promise<TurnView> {
    return request(`/api/sessions/${sessionId}/turns/${index}`);
  },
  cancelTurn(sessionId: string, index: number): Promise<{ status: string }> {
    return request(`/api/sessions/${sessionId}/turns/${index}/cancel`, { method: "POST" });
  },
  saveEditor(sessionId: string, text: string): Promise<{ version_id: number }> {
    return request(`/api/sessions/${sessionId}/editor`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  },
  postEvent(sessionId: string, kind: string, payload: Record<string, unknown>): Promise<unknown> {
    return request("/api/events", {
      method: "POST",
      body: JSON.stringify({
        session_id: sessionId,
        timestamp: nextTimestamp(),
        kind,
        payload,
      }),
    });
  },
  questionBank(taskId: string): Promise<{ questions: QuestionBankItem[] }> {
    return request(`/api/question-bank?task=${encodeURIComponent(taskId)}`);
  },
  listPapers(): Promise<{ papers: PaperSummary[] }> {
    return request("/api/papers");
  },
  getPaper(paperId: string): Promise<PaperDetail> {
    return request(`/api/papers/${paperId}`);
  },
};

export type ApiClient = typeof api;
