// Dual timeline strips: bar building and click-to-narrow date ranges.

import type { TimeSeriesJson } from "./types";

export interface Bar {
  label: string;
  count: number;
  x: number;
  y: number;
  width: number;
  height: number;
}

export function seriesTotal(series: TimeSeriesJson): number {
  return series.series.reduce((acc, [, count]) => acc + count, 0);
}

export function barModel(series: TimeSeriesJson, width: number, height: number, pad = 2): Bar[] {
  const n = series.series.length;
  if (n === 0) return [];
  const max = Math.max(1, ...series.series.map(([, c]) => c));
  const slot = width / n;
  return series.series.map(([label, count], i) => {
    const h = (count / max) * (height - pad);
    return {
      label,
      count,
      x: i * slot + pad / 2,
      y: height - h,
      width: Math.max(1, slot - pad),
      height: h,
    };
  });
}

const MONTH_DAYS = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

function lastDay(year: number, month: number): number {
  if (month === 2 && (year % 4 === 0 && (year % 100 !== 0 || year % 400 === 0))) return 29;
  return MONTH_DAYS[month - 1];
}

/** Clicking a bucket narrows the viewed range to it: "2010" covers the whole
 * year, "2010-03" the calendar month. */
export function rangeForBucket(label: string): { from: string; to: string } {
  if (/^\d{4}$/.test(label)) {
    return { from: `${label}-01-01`, to: `${label}-12-31` };
  }
  const match = /^(\d{4})-(\d{2})$/.exec(label);
  if (!match) throw new Error(`not a timeline bucket: ${label}`);
  const year = Number(match[1]);
  const month = Number(match[2]);
  return {
    from: `${match[1]}-${match[2]}-01`,
    to: `${match[1]}-${match[2]}-${String(lastDay(year, month)).padStart(2, "0")}`,
  };
}
