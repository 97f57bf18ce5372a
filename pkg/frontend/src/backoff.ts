// Exponential polling backoff, capped at 10 seconds.

export const INITIAL_DELAY_MS = 500;
export const MAX_DELAY_MS = 10_000;
export const BACKOFF_FACTOR = 1.7;

export class ExponentialBackoff {
  private delay = INITIAL_DELAY_MS;

  nextDelay(): number {
    const current = this.delay;
    this.delay = Math.min(MAX_DELAY_MS, Math.floor(this.delay * BACKOFF_FACTOR));
    return current;
  }

  reset(): void {
    this.delay = INITIAL_DELAY_MS;
  }
}
