import { describe, expect, it } from "vitest";

import { formatMinorUnits, formatTimestamp } from "../src/format.js";

describe("formatMinorUnits", () => {
  it("renders integer minor units exactly", () => {
    expect(formatMinorUnits({ amount: 28000, currency: "USD" })).toBe("280.00 USD");
    expect(formatMinorUnits({ amount: 18000, currency: "USD" })).toBe("180.00 USD");
    expect(formatMinorUnits({ amount: 1, currency: "USD" })).toBe("0.01 USD");
    expect(formatMinorUnits({ amount: 0, currency: "EUR" })).toBe("0.00 EUR");
  });

  it("renders negative amounts with a leading sign", () => {
    expect(formatMinorUnits({ amount: -11000, currency: "USD" })).toBe("-110.00 USD");
    expect(formatMinorUnits({ amount: -7, currency: "USD" })).toBe("-0.07 USD");
  });

  it("never rounds large values", () => {
    expect(formatMinorUnits({ amount: 123456789012345, currency: "USD" })).toBe(
      "1234567890123.45 USD",
    );
  });

  it("rejects non-integer amounts instead of guessing", () => {
    expect(() => formatMinorUnits({ amount: 10.5, currency: "USD" })).toThrow();
  });
});

describe("formatTimestamp", () => {
  it("formats epoch seconds and tolerates missing values", () => {
    expect(formatTimestamp(0)).toBe("1970-01-01T00:00:00.000Z");
    expect(formatTimestamp(null)).toBe("-");
    expect(formatTimestamp(undefined)).toBe("-");
  });
});
