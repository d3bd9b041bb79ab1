/**
 * Wire protocol v1: typed messages plus builders for everything the client
 * sends. The authoritative JSON schema lives in the gateway package
 * (src/signstream/data/wire_schema.json); the contract tests validate every
 * builder output against it.
 */

export const PROTOCOL_VERSION = 1;

export type SessionMode = "recognition" | "production" | "dual";
export type Landmarks = number[][] | null;

export interface HelloMessage {
  type: "hello";
  protocol_version: number;
  mode: SessionMode;
}

export interface FrameMessage {
  type: "frame";
  t: number;
  handedness: "left" | "right";
  landmarks: Landmarks;
}

export interface ProduceMessage {
  type: "produce";
  text: string;
}

export type ClientMessage = HelloMessage | FrameMessage | ProduceMessage;

export interface ConfigAckMessage {
  type: "config_ack";
  session: string;
  debounce_frames: number;
  absence_frames: number;
  threshold: number;
}

export interface LetterMessage {
  type: "letter";
  char: string;
  confidence: number;
}

export interface WordMessage {
  type: "word";
  raw: string;
  corrected: string;
}

export interface TranscriptMessage {
  type: "transcript";
  text: string;
}

export interface GlossProvenance {
  gloss: string;
  matched: string | null;
  similarity: number | null;
  source: "retrieved" | "fingerspelled";
}

export interface PoseSequenceMessage {
  type: "pose_sequence";
  fps: number;
  glosses: GlossProvenance[];
  frames: number[][][];
  empty_gloss?: boolean;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export type ServerMessage =
  | ConfigAckMessage
  | LetterMessage
  | WordMessage
  | TranscriptMessage
  | PoseSequenceMessage
  | ErrorMessage;

export function makeHello(mode: SessionMode): HelloMessage {
  return { type: "hello", protocol_version: PROTOCOL_VERSION, mode };
}

export function makeFrame(
  t: number,
  handedness: "left" | "right",
  landmarks: Landmarks,
): FrameMessage {
  if (landmarks !== null) {
    if (landmarks.length !== 21 || landmarks.some((p) => p.length !== 3)) {
      throw new Error("landmarks must be 21 points of [x, y, z]");
    }
  }
  return { type: "frame", t: Math.max(0, Math.round(t)), handedness, landmarks };
}

export function makeProduce(text: string): ProduceMessage {
  return { type: "produce", text };
}

const SERVER_TYPES = new Set([
  "config_ack",
  "letter",
  "word",
  "transcript",
  "pose_sequence",
  "error",
]);

/** Parse one inbound text frame; null for anything unrecognizable. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return data as ServerMessage;
}
