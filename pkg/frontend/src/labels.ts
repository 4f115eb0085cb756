/**
 * Fixed display labels for the five-point ACR quality scale.
 *
 * The distortion taxonomy is fetched from the server, but the ACR wording
 * is part of the interface itself: five labelled categories mapping to the
 * integer scores 1..5 that the ratings endpoint accepts.
 */

/** Scores in the order they are rendered, worst first. */
export const ACR_SCORES: number[] = [1, 2, 3, 4, 5];

/** Category label for each ACR score. */
export const ACR_LABELS: Record<number, string> = {
  1: "Bad",
  2: "Poor",
  3: "Fair",
  4: "Good",
  5: "Excellent",
};

/** Label for a score, falling back to the number for out-of-scale values. */
export function acrLabel(score: number): string {
  return ACR_LABELS[score] ?? String(score);
}
