// Single source of truth for the provenance color language. The coverage
// bar must use the same tokens as the claim cards, so both import from here
// and tests compare the rendered styles against these exact values.
// Values are rgb() strings because that is what the DOM reports back.

export const colors = {
  included: "rgb(15, 118, 110)", // teal: claims present in the answer
  includedBg: "rgb(204, 251, 241)",
  omitted: "rgb(185, 28, 28)", // red: relevant claims the answer omits
  omittedBg: "rgb(254, 226, 226)",
  selectionMarker: "rgb(250, 204, 21)", // yellow bar on the matched card
  grayedText: "rgb(156, 163, 175)",
  flagged: "rgb(217, 119, 6)", // amber: evidence below the support threshold
  panelBorder: "rgb(229, 231, 235)",
  text: "rgb(17, 24, 39)",
  subtleText: "rgb(107, 114, 128)",
  accent: "rgb(37, 99, 235)",
  paper: "rgb(255, 255, 255)",
  background: "rgb(249, 250, 251)",
};

export type ClaimStatus = "included" | "omitted";

export function cardAccent(status: ClaimStatus): string {
  return status === "included" ? colors.included : colors.omitted;
}

export function cardBackground(status: ClaimStatus): string {
  return status === "included" ? colors.includedBg : colors.omittedBg;
}
