/** Display formatting. Every value formatted here arrives verbatim from an
 * API response; the only arithmetic is exact integer rounding, so the
 * rendered text can never drift from the server's rational. */

/** Proportion lower/size as a percent with two decimals, rounded half up
 * in exact integer arithmetic: 232/1000 renders "23.20%". */
export function formatPercent(lower: number, size: number): string {
  if (!Number.isInteger(lower) || !Number.isInteger(size) || size <= 0 || lower < 0) {
    throw new RangeError(`not a bound rational: ${lower}/${size}`);
  }
  // size is a voxel count and lower <= size, so 10000 * lower stays well
  // inside the exact-integer range of a double
  const scaled = 10000 * lower;
  let q = Math.floor(scaled / size);
  const r = scaled - q * size;
  if (2 * r >= size) q += 1;
  const whole = Math.floor(q / 100);
  const frac = q - 100 * whole;
  return `${whole}.${String(frac).padStart(2, "0")}%`;
}

/** Statistics and thresholds: fixed two decimals, enough for a t-map. */
export function formatStat(value: number): string {
  return value.toFixed(2);
}

/** Calibration constants get more precision but stay compact. */
export function formatLambda(value: number): string {
  return value.toPrecision(6);
}

export function formatPeak(peak: { x: number; y: number; z: number }): string {
  return `(${peak.x}, ${peak.y}, ${peak.z})`;
}

/** Thresholds echo the request value exactly; trailing zeros are not
 * invented, so a drill at 9 labels as "9", not "9.00". */
export function formatThreshold(value: number): string {
  return String(value);
}
