import { describe, expect, it } from "vitest";

import { formatInterval, formatPercent, formatScoreOrNull } from "../src/format.js";

describe("formatPercent", () => {
  it("renders one decimal place", () => {
    expect(formatPercent(0.9)).toBe("90.0%");
    expect(formatPercent(0.123)).toBe("12.3%");
    expect(formatPercent(0)).toBe("0.0%");
    expect(formatPercent(1)).toBe("100.0%");
  });

  it("rounds rather than truncates", () => {
    expect(formatPercent(0.8999999999999995)).toBe("90.0%");
    expect(formatPercent(0.1255)).toBe("12.6%");
  });
});

describe("formatScoreOrNull", () => {
  it("maps null to n/a", () => {
    expect(formatScoreOrNull(null)).toBe("n/a");
    expect(formatScoreOrNull(0.5)).toBe("50.0%");
  });
});

describe("formatInterval", () => {
  it("renders seconds with one decimal", () => {
    expect(formatInterval(4, 9)).toBe("4.0s – 9.0s");
  });
});
