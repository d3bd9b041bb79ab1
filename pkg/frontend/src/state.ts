/**
 * Client session state: connection status, negotiated config, the rolling
 * transcript (append-only within a session), the live letter badge, and
 * whatever pose animation is loaded. Pure data plus small mutators so the
 * UI layer stays a thin renderer.
 */

import type {
  ConfigAckMessage,
  GlossProvenance,
  LetterMessage,
  WordMessage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "reconnecting" | "closed";

export interface TranscriptWord {
  raw: string;
  corrected: string;
}

export interface PendingProduce {
  text: string;
  sentAt: number;
}

export class ClientSessionState {
  status: ConnectionStatus = "connecting";
  config: ConfigAckMessage | null = null;
  readonly words: TranscriptWord[] = [];
  transcriptText = "";
  lastLetter: LetterMessage | null = null;
  pendingProduce: PendingProduce | null = null;
  lastGlosses: GlossProvenance[] = [];
  lastError: string | null = null;

  applyLetter(message: LetterMessage): void {
    this.lastLetter = message;
  }

  applyWord(message: WordMessage): void {
    this.words.push({ raw: message.raw, corrected: message.corrected });
  }

  applyTranscript(text: string): void {
    this.transcriptText = text;
  }

  /**
   * The locally accumulated transcript: every finalized word, in order,
   * corrected form. Words are never removed, so this survives server
   * reconnects even though the server's own transcript restarts.
   */
  localTranscript(): string {
    return this.words.map((w) => w.corrected).join(" ");
  }

  badgeText(): string {
    if (this.lastLetter === null) return "";
    return `${this.lastLetter.char} ${Math.round(this.lastLetter.confidence * 100)}%`;
  }
}
