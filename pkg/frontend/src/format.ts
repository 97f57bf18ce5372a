// Score formatting: percentages with exactly one decimal place.

export function formatPercent(score: number): string {
  return `${(score * 100).toFixed(1)}%`;
}

export function formatScoreOrNull(score: number | null): string {
  return score === null ? "n/a" : formatPercent(score);
}

export function formatInterval(start: number, end: number): string {
  return `${start.toFixed(1)}s – ${end.toFixed(1)}s`;
}
