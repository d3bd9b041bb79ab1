/**
 * Pose playback: a wall-clock-driven cursor over the frames of a
 * pose_sequence plus 2-D skeleton rendering with bone connectivity for the
 * gateway's default 75-point layout (33 body points, 21 per hand).
 */

import type { PoseSequenceMessage } from "./protocol.js";

const BODY_POINTS = 33;
const HAND_POINTS = 21;
export const LEFT_HAND_OFFSET = BODY_POINTS;
export const RIGHT_HAND_OFFSET = BODY_POINTS + HAND_POINTS;
export const DEFAULT_LAYOUT_POINTS = BODY_POINTS + 2 * HAND_POINTS;

// Upper-body subset of the standard 33-point pose topology.
const BODY_BONES: Array<[number, number]> = [
  [11, 12], [11, 13], [13, 15], [12, 14], [14, 16],
  [11, 23], [12, 24], [23, 24],
  [0, 1], [1, 2], [2, 3], [3, 7], [0, 4], [4, 5], [5, 6], [6, 8], [9, 10],
];

// 21-point hand topology: thumb, four fingers, palm arc.
const HAND_BONES: Array<[number, number]> = [
  [0, 1], [1, 2], [2, 3], [3, 4],
  [0, 5], [5, 6], [6, 7], [7, 8],
  [5, 9], [9, 10], [10, 11], [11, 12],
  [9, 13], [13, 14], [14, 15], [15, 16],
  [13, 17], [17, 18], [18, 19], [19, 20], [0, 17],
];

export function bonesForLayout(points: number): Array<[number, number]> {
  const bones: Array<[number, number]> = [];
  if (points >= BODY_POINTS) bones.push(...BODY_BONES);
  if (points >= LEFT_HAND_OFFSET + HAND_POINTS) {
    bones.push(...HAND_BONES.map(([a, b]): [number, number] =>
      [a + LEFT_HAND_OFFSET, b + LEFT_HAND_OFFSET]));
  }
  if (points >= RIGHT_HAND_OFFSET + HAND_POINTS) {
    bones.push(...HAND_BONES.map(([a, b]): [number, number] =>
      [a + RIGHT_HAND_OFFSET, b + RIGHT_HAND_OFFSET]));
  }
  return bones;
}

/** Minimal drawing surface; a real CanvasRenderingContext2D satisfies it. */
export interface DrawContext {
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export class PoseAnimator {
  private frames: number[][][] = [];
  private fps = 30;
  private startedAt: number | null = null;
  private bones: Array<[number, number]> = [];

  /** Load a pose_sequence and start the clock at `now` (ms). */
  play(message: PoseSequenceMessage, now: number): void {
    this.frames = message.frames;
    this.fps = message.fps;
    this.bones = message.frames.length > 0 ? bonesForLayout(message.frames[0].length) : [];
    this.startedAt = message.frames.length > 0 ? now : null;
  }

  stop(): void {
    this.startedAt = null;
    this.frames = [];
  }

  get playing(): boolean {
    return this.startedAt !== null;
  }

  get frameCount(): number {
    return this.frames.length;
  }

  durationMs(): number {
    return (this.frames.length / this.fps) * 1000;
  }

  /**
   * Frame index for wall-clock time `now`: floor(elapsed * fps), clamped
   * into [0, frames). Returns null once playback is over.
   */
  cursorAt(now: number): number | null {
    if (this.startedAt === null || this.frames.length === 0) return null;
    const elapsed = now - this.startedAt;
    const index = Math.floor((elapsed / 1000) * this.fps);
    if (index < 0) return 0;
    if (index >= this.frames.length) return null;
    return index;
  }

  /** Advance to `now` and draw; false once the animation has finished. */
  render(ctx: DrawContext, width: number, height: number, now: number): boolean {
    const cursor = this.cursorAt(now);
    if (cursor === null) {
      this.startedAt = null;
      return false;
    }
    this.drawFrame(ctx, width, height, this.frames[cursor]);
    return true;
  }

  private drawFrame(ctx: DrawContext, width: number, height: number,
                    frame: number[][]): void {
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#4ade80";
    ctx.lineWidth = 2;
    for (const [a, b] of this.bones) {
      if (a >= frame.length || b >= frame.length) continue;
      if (frame[a][3] < 0.5 || frame[b][3] < 0.5) continue; // low visibility
      ctx.beginPath();
      ctx.moveTo(frame[a][0] * width, frame[a][1] * height);
      ctx.lineTo(frame[b][0] * width, frame[b][1] * height);
      ctx.stroke();
    }
    ctx.fillStyle = "#22d3ee";
    for (const point of frame) {
      if (point[3] < 0.5) continue;
      ctx.beginPath();
      ctx.arc(point[0] * width, point[1] * height, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
