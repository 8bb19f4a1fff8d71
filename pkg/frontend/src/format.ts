import type { MoneyValue } from "./types.js";

// Amounts arrive as integer minor units and must be displayed exactly.
// Integer arithmetic only: no floating point division, no rounding.
export function formatMinorUnits(value: MoneyValue): string {
  if (!Number.isInteger(value.amount)) {
    throw new Error(`non-integer amount from API: ${value.amount}`);
  }
  const sign = value.amount < 0 ? "-" : "";
  const abs = Math.abs(value.amount);
  const units = Math.trunc(abs / 100);
  const cents = abs % 100;
  return `${sign}${units}.${String(cents).padStart(2, "0")} ${value.currency}`;
}

export function formatTimestamp(seconds: number | null | undefined): string {
  if (seconds === null || seconds === undefined) {
    return "-";
  }
  return new Date(seconds * 1000).toISOString();
}
