/**
 * Recorded frame-log playback: the client demo runs without a camera by
 * feeding a captured landmark log through the normal send path.
 */

import type { FrameMessage } from "./protocol.js";
import type { SignStreamClient } from "./client.js";
import type { ScriptEntry } from "./mockserver.js";

/** Pull the inbound frame messages out of a recorded session script. */
export function framesFromScript(script: ScriptEntry[]): FrameMessage[] {
  return script
    .filter((entry) => entry.dir === "in" && entry.msg.type === "frame")
    .map((entry) => entry.msg as unknown as FrameMessage);
}

export class FrameLogPlayer {
  private index = 0;

  constructor(
    private readonly client: SignStreamClient,
    private readonly frames: FrameMessage[],
  ) {}

  get done(): boolean {
    return this.index >= this.frames.length;
  }

  get position(): number {
    return this.index;
  }

  /** Send the next recorded frame; returns false when the log is spent. */
  step(): boolean {
    if (this.done) return false;
    const frame = this.frames[this.index];
    this.index += 1;
    this.client.sendFrame(frame.t, frame.handedness, frame.landmarks);
    return true;
  }

  /** Drain the whole log (tests and fast-forward demo mode). */
  run(): number {
    let steps = 0;
    while (this.step()) steps += 1;
    return steps;
  }
}
