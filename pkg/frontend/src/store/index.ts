import { configureStore, createAsyncThunk } from "@reduxjs/toolkit";
import type { ApiClient } from "../api";
import chatReducer from "./chatSlice";
import sessionReducer from "./sessionSlice";
import uiReducer from "./uiSlice";

export function makeStore(apiClient: ApiClient) {
  return configureStore({
    reducer: {
      session: sessionReducer,
      chat: chatReducer,
      ui: uiReducer,
    },
    middleware: (getDefaultMiddleware) =>
      getDefaultMiddleware({ thunk: { extraArgument: apiClient } }),
  });
}

export type AppStore = ReturnType<typeof makeStore>;
export type RootState = ReturnType<AppStore["getState"]>;
export type AppDispatch = AppStore["dispatch"];

// Every provenance interaction emits exactly one logged event; failures are
// swallowed so a logging hiccup never breaks the interaction itself.
export const logEvent = createAsyncThunk<
  void,
  { kind: string; payload: Record<string, unknown> },
  { extra: ApiClient; state: RootState }
>("events/log", async ({ kind, payload }, { extra, getState }) => {
  const session = getState().session.session;
  if (!session) return;
  try {
    await extra.postEvent(session.session_id, kind, payload);
  } catch {
    // deliberately ignored
  }
});
