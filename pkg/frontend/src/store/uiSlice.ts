import { createSlice, type PayloadAction } from "@reduxjs/toolkit";

export interface UiState {
  // answer-claim selection drives focus mode and the yellow card marker
  selectedClaimId: string | null;
  selectedTurnIndex: number | null;
  focusMode: boolean;
  // baseline condition: which sentence's sources are shown
  selectedSentence: { turnIndex: number; sentenceIndex: number } | null;
  expandedCards: Record<string, boolean>;
  removedCards: Record<string, boolean>;
  collapsedTurns: Record<number, boolean>;
  viewerPaperId: string | null;
  tutorialOpen: boolean;
  savedScroll: Record<string, number>;
}

const initialState: UiState = {
  selectedClaimId: null,
  selectedTurnIndex: null,
  focusMode: false,
  selectedSentence: null,
  expandedCards: {},
  removedCards: {},
  collapsedTurns: {},
  viewerPaperId: null,
  tutorialOpen: false,
  savedScroll: {},
};

const uiSlice = createSlice({
  name: "ui",
  initialState,
  reducers: {
    claimSelected(state, action: PayloadAction<{ claimId: string; turnIndex: number }>) {
      const { claimId, turnIndex } = action.payload;
      if (state.selectedClaimId === claimId && state.selectedTurnIndex === turnIndex) {
        // second click deselects and leaves focus mode
        state.selectedClaimId = null;
        state.selectedTurnIndex = null;
        state.focusMode = false;
      } else {
        state.selectedClaimId = claimId;
        state.selectedTurnIndex = turnIndex;
        state.focusMode = true;
      }
    },
    selectionCleared(state) {
      state.selectedClaimId = null;
      state.selectedTurnIndex = null;
      state.focusMode = false;
    },
    sentenceSelected(state, action: PayloadAction<{ turnIndex: number; sentenceIndex: number }>) {
      const next = action.payload;
      const current = state.selectedSentence;
      state.selectedSentence =
        current &&
        current.turnIndex === next.turnIndex &&
        current.sentenceIndex === next.sentenceIndex
          ? null
          : next;
    },
    cardExpandToggled(state, action: PayloadAction<string>) {
      state.expandedCards[action.payload] = !state.expandedCards[action.payload];
    },
    cardRemoved(state, action: PayloadAction<string>) {
      state.removedCards[action.payload] = true;
    },
    cardsRestored(state) {
      state.removedCards = {};
    },
    turnSectionToggled(state, action: PayloadAction<number>) {
      state.collapsedTurns[action.payload] = !state.collapsedTurns[action.payload];
    },
    viewerOpened(state, action: PayloadAction<string>) {
      state.viewerPaperId = action.payload;
    },
    viewerClosed(state) {
      state.viewerPaperId = null;
    },
    tutorialToggled(state, action: PayloadAction<boolean>) {
      state.tutorialOpen = action.payload;
    },
    scrollSaved(state, action: PayloadAction<{ key: string; top: number }>) {
      state.savedScroll[action.payload.key] = action.payload.top;
    },
  },
});

export const {
  claimSelected,
  selectionCleared,
  sentenceSelected,
  cardExpandToggled,
  cardRemoved,
  cardsRestored,
  turnSectionToggled,
  viewerOpened,
  viewerClosed,
  tutorialToggled,
  scrollSaved,
} = uiSlice.actions;
export default uiSlice.reducer;
