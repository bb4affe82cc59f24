import { createAsyncThunk, createSlice, type PayloadAction } from "@reduxjs/toolkit";
import type { ApiClient } from "../api";
import type { Condition, SessionView } from "../types";

export interface SessionState {
  session: SessionView | null;
  editorText: string;
  lastSavedText: string;
  creating: boolean;
  error: string | null;
}

const initialState: SessionState = {
  session: null,
  editorText: "",
  lastSavedText: "",
  creating: false,
  error: null,
};

export const createSession = createAsyncThunk<
  SessionView,
  { condition: Condition; taskId: string },
  { extra: ApiClient }
>("session/create", ({ condition, taskId }, { extra }) => extra.createSession(condition, taskId));

export const saveEditor = createAsyncThunk<
  { version_id: number; text: string },
  string,
  { extra: ApiClient; state: { session: SessionState } }
>("session/saveEditor", async (text, { extra, getState }) => {
  const session = getState().session.session;
  if (!session) throw new Error("no active session");
  const { version_id } = await extra.saveEditor(session.session_id, text);
  return { version_id, text };
});

const sessionSlice = createSlice({
  name: "session",
  initialState,
  reducers: {
    editorChanged(state, action: PayloadAction<string>) {
      state.editorText = action.payload;
    },
  },
  extraReducers: (builder) => {
    builder
      .addCase(createSession.pending, (state) => {
        state.creating = true;
        state.error = null;
      })
      .addCase(createSession.fulfilled, (state, action) => {
        state.creating = false;
        state.session = action.payload;
        state.editorText = action.payload.editor.text;
        state.lastSavedText = action.payload.editor.text;
      })
      .addCase(createSession.rejected, (state, action) => {
        state.creating = false;
        state.error = action.error.message ?? "failed to create session";
      })
      .addCase(saveEditor.fulfilled, (state, action) => {
        state.lastSavedText = action.payload.text;
        if (state.session) {
          state.session.editor.text = action.payload.text;
          state.session.editor.current_version = action.payload.version_id;
          state.session.editor.version_count = action.payload.version_id + 1;
        }
      });
  },
});

export const { editorChanged } = sessionSlice.actions;
export default sessionSlice.reducer;
