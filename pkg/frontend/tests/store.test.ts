import { describe, expect, it, vi } from "vitest";
import { configFromLocation } from "../src/App";
import { makeStore } from "../src/store";
import { askQuestion, stopTurn, turnUpdated } from "../src/store/chatSlice";
import { saveEditor } from "../src/store/sessionSlice";
import {
  cardRemoved,
  cardsRestored,
  claimSelected,
  scrollSaved,
  sentenceSelected,
} from "../src/store/uiSlice";
import { fakeApi, provenanceTurn, sessionFixture } from "./fixtures";

describe("ui slice", () => {
  it("claim selection toggles focus mode", () => {
    const store = makeStore(fakeApi());
    store.dispatch(claimSelected({ claimId: "a0", turnIndex: 0 }));
    expect(store.getState().ui).toMatchObject({ selectedClaimId: "a0", focusMode: true });
    store.dispatch(claimSelected({ claimId: "a1", turnIndex: 0 }));
    expect(store.getState().ui.selectedClaimId).toBe("a1");
    store.dispatch(claimSelected({ claimId: "a1", turnIndex: 0 }));
    expect(store.getState().ui).toMatchObject({ selectedClaimId: null, focusMode: false });
  });

  it("sentence selection toggles per turn", () => {
    const store = makeStore(fakeApi());
    store.dispatch(sentenceSelected({ turnIndex: 0, sentenceIndex: 1 }));
    expect(store.getState().ui.selectedSentence).toEqual({ turnIndex: 0, sentenceIndex: 1 });
    store.dispatch(sentenceSelected({ turnIndex: 0, sentenceIndex: 1 }));
    expect(store.getState().ui.selectedSentence).toBeNull();
  });

  it("card removal is reversible and scroll positions are stored", () => {
    const store = makeStore(fakeApi());
    store.dispatch(cardRemoved("pc1"));
    expect(store.getState().ui.removedCards.pc1).toBe(true);
    store.dispatch(cardsRestored());
    expect(store.getState().ui.removedCards).toEqual({});
    store.dispatch(scrollSaved({ key: "chat", top: 120 }));
    expect(store.getState().ui.savedScroll.chat).toBe(120);
  });
});

describe("chat slice", () => {
  it("tracks in-flight turns and completion", () => {
    const store = makeStore(fakeApi());
    store.dispatch(turnUpdated({ index: 0, question: "q", status: "running" }));
    expect(store.getState().chat.inFlightIndex).toBe(0);
    store.dispatch(turnUpdated(provenanceTurn()));
    expect(store.getState().chat.inFlightIndex).toBeNull();
    expect(store.getState().chat.turns).toHaveLength(1);
  });

  it("askQuestion polls until the turn is terminal", async () => {
    vi.useFakeTimers();
    const statuses = ["running", "running", "complete"];
    let calls = 0;
    const api = fakeApi({
      ask: async () => ({ turn_index: 0, status: "running" }),
      getTurn: async () => {
        const status = statuses[Math.min(calls, statuses.length - 1)] as any;
        calls += 1;
        return status === "complete"
          ? provenanceTurn()
          : { index: 0, question: "q", status };
      },
    });
    const store = makeStore(api);
    store.dispatch({ type: "session/create/fulfilled", payload: sessionFixture("provenance") });
    const pending = store.dispatch(askQuestion({ text: "q" }));
    await vi.advanceTimersByTimeAsync(3500);
    await pending;
    vi.useRealTimers();
    expect(calls).toBe(3);
    expect(store.getState().chat.turns[0].status).toBe("complete");
    expect(store.getState().chat.inFlightIndex).toBeNull();
  });

  it("stopTurn cancels the in-flight turn", async () => {
    let cancelled: number | null = null;
    const api = fakeApi({
      cancelTurn: async (_sid, index) => {
        cancelled = index;
        return { status: "cancelling" };
      },
    });
    const store = makeStore(api);
    store.dispatch({ type: "session/create/fulfilled", payload: sessionFixture("provenance") });
    store.dispatch(turnUpdated({ index: 0, question: "q", status: "running" }));
    await store.dispatch(stopTurn());
    expect(cancelled).toBe(0);
  });
});

describe("session slice", () => {
  it("saveEditor records the new version", async () => {
    const api = fakeApi({ saveEditor: async () => ({ version_id: 3 }) });
    const store = makeStore(api);
    store.dispatch({ type: "session/create/fulfilled", payload: sessionFixture("provenance") });
    await store.dispatch(saveEditor("New text"));
    const state = store.getState().session;
    expect(state.lastSavedText).toBe("New text");
    expect(state.session?.editor.current_version).toBe(3);
  });
});

describe("app config", () => {
  it("parses condition, task, and tutorial flags from the URL", () => {
    expect(configFromLocation("?condition=baseline&task=review&tutorial=1")).toEqual({
      condition: "baseline",
      taskId: "review",
      tutorial: true,
    });
    expect(configFromLocation("")).toEqual({
      condition: "provenance",
      taskId: "synthesis",
      tutorial: false,
    });
  });
});
