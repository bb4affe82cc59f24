// jsdom lacks scrollIntoView; components feature-detect it, but a stub keeps
// behavior uniform in tests.
if (typeof Element !== "undefined" && !Element.prototype.scrollIntoView) {
  Element.prototype.scrollIntoView = () => {};
}
