/**
 * Webcam capture and in-browser landmark extraction. The extractor is an
 * interface: the real implementation adapts a hand-tracking library loaded
 * at runtime, tests and the no-camera demo substitute fakes or a recorded
 * frame log. The gateway never sees pixels, only 21-point landmarks.
 */

import type { Landmarks } from "./protocol.js";
import type { SignStreamClient } from "./client.js";
import type { DrawContext } from "./animator.js";

export interface HandEstimate {
  landmarks: Landmarks;
  handedness: "left" | "right";
}

export interface LandmarkExtractor {
  /** Estimate the dominant hand in the current video frame; null when no hand. */
  estimate(video: unknown): Promise<HandEstimate | null> | HandEstimate | null;
}

export interface CaptureCallbacks {
  onFrameSent?: (estimate: HandEstimate | null) => void;
  onExtractorFailure?: (error: unknown) => void;
}

const HAND_BONES: Array<[number, number]> = [
  [0, 1], [1, 2], [2, 3], [3, 4],
  [0, 5], [5, 6], [6, 7], [7, 8],
  [5, 9], [9, 10], [10, 11], [11, 12],
  [9, 13], [13, 14], [14, 15], [15, 16],
  [13, 17], [17, 18], [18, 19], [19, 20], [0, 17],
];

export class CaptureLoop {
  private running = true;
  private failures = 0;

  constructor(
    private readonly client: SignStreamClient,
    private readonly extractor: LandmarkExtractor,
    private readonly callbacks: CaptureCallbacks = {},
    private readonly now: () => number = () => Date.now(),
  ) {}

  get extractorFailures(): number {
    return this.failures;
  }

  stop(): void {
    this.running = false;
  }

  /**
   * Process one video frame: extract landmarks (null on no hand or
   * extractor failure) and stream the wire frame, rate-capped by the
   * client. Call this from the page's animation loop.
   */
  async processFrame(video: unknown): Promise<HandEstimate | null> {
    if (!this.running) return null;
    let estimate: HandEstimate | null = null;
    try {
      estimate = await this.extractor.estimate(video);
    } catch (error) {
      // Extractor trouble degrades to "no hand" frames; the stream lives on.
      this.failures += 1;
      this.callbacks.onExtractorFailure?.(error);
      estimate = null;
    }
    const sent = this.client.sendFrame(
      this.now(),
      estimate?.handedness ?? "right",
      estimate?.landmarks ?? null,
    );
    if (sent) this.callbacks.onFrameSent?.(estimate);
    return estimate;
  }
}

/** Draw the 21-point hand overlay on top of the mirrored video. */
export function drawLandmarkOverlay(
  ctx: DrawContext,
  width: number,
  height: number,
  landmarks: Landmarks,
): void {
  ctx.clearRect(0, 0, width, height);
  if (landmarks === null) return;
  ctx.strokeStyle = "#f472b6";
  ctx.lineWidth = 2;
  for (const [a, b] of HAND_BONES) {
    ctx.beginPath();
    ctx.moveTo(landmarks[a][0] * width, landmarks[a][1] * height);
    ctx.lineTo(landmarks[b][0] * width, landmarks[b][1] * height);
    ctx.stroke();
  }
  ctx.fillStyle = "#fbbf24";
  for (const point of landmarks) {
    ctx.beginPath();
    ctx.arc(point[0] * width, point[1] * height, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}
