/**
 * Rolling transcript and assistant indicator.
 *
 * Entries append in server tick order for assistant chunks and in dispatch
 * order for the user's own slices; the indicator always mirrors the most
 * recent per-tick server frame (output_chunk -> speaking, idle_notice ->
 * idle). The state lives outside any socket, so reconnects keep it intact.
 */

import type { ServerFrame } from "./wire.js";

export type Indicator = "speaking" | "idle";

export interface TranscriptEntry {
  who: "user" | "assistant";
  text: string;
  tick: number | null;
  terminal: boolean;
}

export class Transcript {
  readonly entries: TranscriptEntry[] = [];
  indicator: Indicator = "idle";
  lastTick: number | null = null;

  /** Record a slice of the user's own input as it is dispatched. */
  addUserSlice(text: string): void {
    this.entries.push({ who: "user", text, tick: null, terminal: false });
  }

  /**
   * Fold one server frame in. Returns true when the transcript changed.
   * Ticks must arrive in order; a regression means frames were reordered
   * somewhere and is reported loudly rather than rendered wrong.
   */
  applyServerFrame(frame: ServerFrame): boolean {
    if (frame.type === "output_chunk" || frame.type === "idle_notice") {
      if (typeof frame.tick_index === "number") {
        if (this.lastTick !== null && frame.tick_index <= this.lastTick) {
          throw new Error(
            `tick went backwards: ${frame.tick_index} after ${this.lastTick}`,
          );
        }
        this.lastTick = frame.tick_index;
      }
    }
    if (frame.type === "output_chunk") {
      this.indicator = "speaking";
      this.entries.push({
        who: "assistant",
        text: frame.text ?? "",
        tick: frame.tick_index ?? null,
        terminal: frame.terminal === true,
      });
      return true;
    }
    if (frame.type === "idle_notice") {
      this.indicator = "idle";
      return false;
    }
    return false;
  }

  /** Assistant text of the current utterance, reassembled for display. */
  currentUtterance(): string {
    const parts: string[] = [];
    for (let i = this.entries.length - 1; i >= 0; i--) {
      const entry = this.entries[i]!;
      if (entry.who !== "assistant") break;
      // a terminal chunk below the newest entry closed an earlier utterance
      if (parts.length > 0 && entry.terminal) break;
      parts.unshift(entry.text);
    }
    return parts.join(" ");
  }
}
