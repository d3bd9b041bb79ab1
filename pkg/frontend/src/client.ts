/**
 * Gateway client: one WebSocket, hello negotiation, typed event dispatch,
 * frame rate capping, and reconnection that preserves the local transcript.
 * The socket is injected so tests (and the mock server) drive it without a
 * network.
 */

import {
  ClientMessage,
  ConfigAckMessage,
  ErrorMessage,
  Landmarks,
  LetterMessage,
  PoseSequenceMessage,
  SessionMode,
  TranscriptMessage,
  WordMessage,
  makeFrame,
  makeHello,
  makeProduce,
  parseServerMessage,
} from "./protocol.js";
import { ClientSessionState } from "./state.js";

/** The sliver of the WebSocket API the client needs; mocks implement it. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: ((event: { wasClean: boolean }) => void) | null;
}

export type SocketFactory = () => SocketLike;

export interface ClientHandlers {
  onConfig?: (message: ConfigAckMessage) => void;
  onLetter?: (message: LetterMessage) => void;
  onWord?: (message: WordMessage) => void;
  onTranscript?: (message: TranscriptMessage) => void;
  onPoseSequence?: (message: PoseSequenceMessage) => void;
  onError?: (message: ErrorMessage) => void;
  onStatusChange?: (status: ClientSessionState["status"]) => void;
}

export interface ClientOptions {
  mode: SessionMode;
  frameRateCap?: number; // frames per second sent upstream
  reconnectDelayMs?: number;
  maxReconnects?: number;
  /** Injectable scheduler so tests control time. */
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

export class SignStreamClient {
  readonly state = new ClientSessionState();
  private socket: SocketLike | null = null;
  private readonly minFrameIntervalMs: number;
  private lastFrameSentAt = -Infinity;
  private reconnects = 0;
  private closedByUser = false;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;

  constructor(
    private readonly socketFactory: SocketFactory,
    private readonly options: ClientOptions,
    private readonly handlers: ClientHandlers = {},
  ) {
    this.minFrameIntervalMs = 1000 / (options.frameRateCap ?? 30);
    this.setTimeoutFn = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
  }

  connect(): void {
    this.closedByUser = false;
    this.setStatus(this.reconnects > 0 ? "reconnecting" : "connecting");
    const socket = this.socketFactory();
    this.socket = socket;
    socket.onopen = () => {
      this.setStatus("open");
      this.sendMessage(makeHello(this.options.mode));
    };
    socket.onmessage = (event) => this.dispatch(event.data);
    socket.onclose = (event) => {
      this.socket = null;
      if (this.closedByUser || event.wasClean) {
        this.setStatus("closed");
        return;
      }
      if (this.reconnects >= (this.options.maxReconnects ?? 5)) {
        this.setStatus("closed");
        return;
      }
      this.reconnects += 1;
      this.setStatus("reconnecting");
      this.setTimeoutFn(() => this.connect(), this.options.reconnectDelayMs ?? 500);
    };
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
    this.socket = null;
    this.setStatus("closed");
  }

  /**
   * Send one captured frame, rate-capped. Returns false when the frame was
   * dropped (over the cap or no connection).
   */
  sendFrame(t: number, handedness: "left" | "right", landmarks: Landmarks): boolean {
    if (this.socket === null || this.state.status !== "open") return false;
    if (t - this.lastFrameSentAt < this.minFrameIntervalMs) return false;
    this.lastFrameSentAt = t;
    this.sendMessage(makeFrame(t, handedness, landmarks));
    return true;
  }

  produce(text: string, now = Date.now()): void {
    this.state.pendingProduce = { text, sentAt: now };
    this.sendMessage(makeProduce(text));
  }

  private sendMessage(message: ClientMessage): void {
    this.socket?.send(JSON.stringify(message));
  }

  private setStatus(status: ClientSessionState["status"]): void {
    this.state.status = status;
    this.handlers.onStatusChange?.(status);
  }

  private dispatch(raw: string): void {
    const message = parseServerMessage(raw);
    if (message === null) return; // unknown traffic is ignored, never fatal
    switch (message.type) {
      case "config_ack":
        this.state.config = message;
        this.handlers.onConfig?.(message);
        break;
      case "letter":
        this.state.applyLetter(message);
        this.handlers.onLetter?.(message);
        break;
      case "word":
        this.state.applyWord(message);
        this.handlers.onWord?.(message);
        break;
      case "transcript":
        this.state.applyTranscript(message.text);
        this.handlers.onTranscript?.(message);
        break;
      case "pose_sequence":
        this.state.pendingProduce = null;
        this.state.lastGlosses = message.glosses;
        this.handlers.onPoseSequence?.(message);
        break;
      case "error":
        this.state.lastError = `${message.code}: ${message.detail}`;
        this.handlers.onError?.(message);
        break;
    }
  }
}
