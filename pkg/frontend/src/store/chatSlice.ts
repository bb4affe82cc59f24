import { createAsyncThunk, createSlice, type PayloadAction } from "@reduxjs/toolkit";
import type { ApiClient } from "../api";
import type { QuestionBankItem, TurnStatus, TurnView } from "../types";
import type { SessionState } from "./sessionSlice";

const POLL_INTERVAL_MS = 1000;
const TERMINAL: TurnStatus[] = ["complete", "failed", "cancelled"];

export interface ChatState {
  turns: TurnView[];
  inFlightIndex: number | null;
  askStartedAt: number | null;
  bank: QuestionBankItem[];
  error: string | null;
}

const initialState: ChatState = {
  turns: [],
  inFlightIndex: null,
  askStartedAt: null,
  bank: [],
  error: null,
};

type ThunkCfg = { extra: ApiClient; state: { session: SessionState; chat: ChatState } };

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export const loadQuestionBank = createAsyncThunk<QuestionBankItem[], string, { extra: ApiClient }>(
  "chat/loadBank",
  async (taskId, { extra }) => (await extra.questionBank(taskId)).questions,
);

export const askQuestion = createAsyncThunk<
  TurnView,
  { text?: string; questionId?: string },
  ThunkCfg
>("chat/ask", async ({ text, questionId }, { extra, getState, dispatch }) => {
  const session = getState().session.session;
  if (!session) throw new Error("no active session");
  const body = questionId ? { question_id: questionId } : { text };
  const started = await extra.ask(session.session_id, body);
  let turn = await extra.getTurn(session.session_id, started.turn_index);
  dispatch(turnUpdated(turn));
  while (!TERMINAL.includes(turn.status)) {
    await sleep(POLL_INTERVAL_MS);
    turn = await extra.getTurn(session.session_id, started.turn_index);
    dispatch(turnUpdated(turn));
  }
  return turn;
});

export const stopTurn = createAsyncThunk<void, void, ThunkCfg>(
  "chat/stop",
  async (_arg, { extra, getState }) => {
    const { session } = getState().session;
    const index = getState().chat.inFlightIndex;
    if (session && index !== null) {
      await extra.cancelTurn(session.session_id, index);
    }
  },
);

const chatSlice = createSlice({
  name: "chat",
  initialState,
  reducers: {
    turnUpdated(state, action: PayloadAction<TurnView>) {
      const turn = action.payload;
      const at = state.turns.findIndex((t) => t.index === turn.index);
      if (at >= 0) {
        state.turns[at] = turn;
      } else {
        state.turns.push(turn);
        state.turns.sort((a, b) => a.index - b.index);
      }
      if (TERMINAL.includes(turn.status) && state.inFlightIndex === turn.index) {
        state.inFlightIndex = null;
        state.askStartedAt = null;
      } else if (!TERMINAL.includes(turn.status)) {
        state.inFlightIndex = turn.index;
        state.askStartedAt = state.askStartedAt ?? Date.now();
      }
    },
  },
  extraReducers: (builder) => {
    builder
      .addCase(askQuestion.pending, (state) => {
        state.error = null;
        state.askStartedAt = Date.now();
      })
      .addCase(askQuestion.fulfilled, (state) => {
        state.inFlightIndex = null;
        state.askStartedAt = null;
      })
      .addCase(askQuestion.rejected, (state, action) => {
        state.inFlightIndex = null;
        state.askStartedAt = null;
        state.error = action.error.message ?? "question failed";
      })
      .addCase(loadQuestionBank.fulfilled, (state, action) => {
        state.bank = action.payload;
      });
  },
});

export const { turnUpdated } = chatSlice.actions;
export default chatSlice.reducer;
