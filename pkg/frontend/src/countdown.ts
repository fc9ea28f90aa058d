/**
 * Chunk dispatch countdown: how long until buffered input rides the next
 * tick. Phase is anchored to the most recent per-tick server frame, so the
 * bar tracks the server's cadence rather than a free-running local timer.
 */

export class TickCountdown {
  private anchorMs: number | null = null;

  constructor(public tickSeconds: number) {
    if (!(tickSeconds > 0)) {
      throw new Error("tickSeconds must be positive");
    }
  }

  /** Call whenever a per-tick frame (output_chunk/idle_notice) arrives. */
  markTick(nowMs: number): void {
    this.anchorMs = nowMs;
  }

  /** Milliseconds until the next expected tick boundary. */
  remainingMs(nowMs: number): number {
    const period = this.tickSeconds * 1000;
    if (this.anchorMs === null) {
      return period;
    }
    const elapsed = nowMs - this.anchorMs;
    if (elapsed < 0) {
      return period;
    }
    return period - (elapsed % period);
  }

  /** 0..1 progress toward the next tick, for rendering a bar. */
  fraction(nowMs: number): number {
    return 1 - this.remainingMs(nowMs) / (this.tickSeconds * 1000);
  }
}
