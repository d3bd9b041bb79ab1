/**
 * Record/replay mock of the gateway for tests and the no-camera demo.
 *
 * A script is a recorded session: alternating inbound (client -> server)
 * and outbound (server -> client) messages captured from the real gateway.
 * The mock asserts each message the client sends deep-equals the next
 * recorded inbound one, then plays back whatever the real server answered.
 * That makes every client test a contract test against actual gateway
 * behavior, not against a reimplementation.
 */

import type { SocketLike } from "./client.js";

export interface ScriptEntry {
  dir: "in" | "out";
  msg: Record<string, unknown>;
}

export function parseScript(jsonl: string): ScriptEntry[] {
  return jsonl
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as ScriptEntry);
}

function deepEqual(a: unknown, b: unknown): boolean {
  if (a === b) return true;
  if (typeof a !== typeof b || a === null || b === null) return false;
  if (Array.isArray(a) !== Array.isArray(b)) return false;
  if (typeof a !== "object") return false;
  const ka = Object.keys(a as object).sort();
  const kb = Object.keys(b as object).sort();
  if (ka.length !== kb.length || ka.some((k, i) => k !== kb[i])) return false;
  return ka.every((k) =>
    deepEqual((a as Record<string, unknown>)[k], (b as Record<string, unknown>)[k]),
  );
}

export class MockServerSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: string }) => void) | null = null;
  onclose: ((event: { wasClean: boolean }) => void) | null = null;

  readonly mismatches: string[] = [];
  private cursor = 0;
  private closed = false;

  constructor(private readonly script: ScriptEntry[]) {}

  /** Fire the open event; call after the client has attached handlers. */
  open(): void {
    this.onopen?.();
  }

  send(data: string): void {
    if (this.closed) return;
    const message = JSON.parse(data) as Record<string, unknown>;
    const expected = this.script[this.cursor];
    if (expected === undefined || expected.dir !== "in") {
      this.mismatches.push(`unexpected client message: ${data}`);
      return;
    }
    if (!deepEqual(message, expected.msg)) {
      this.mismatches.push(
        `client message diverged from recording at ${this.cursor}: ` +
        `${data} != ${JSON.stringify(expected.msg)}`,
      );
      return;
    }
    this.cursor += 1;
    while (this.cursor < this.script.length && this.script[this.cursor].dir === "out") {
      const reply = this.script[this.cursor];
      this.cursor += 1;
      this.onmessage?.({ data: JSON.stringify(reply.msg) });
    }
  }

  close(): void {
    this.closed = true;
    this.onclose?.({ wasClean: true });
  }

  /** True when the whole recorded exchange was consumed without drift. */
  get completed(): boolean {
    return this.mismatches.length === 0 && this.cursor === this.script.length;
  }

  get remaining(): number {
    return this.script.length - this.cursor;
  }
}

/** A socket that drops dead after N client messages; for reconnect tests. */
export class FlakySocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: string }) => void) | null = null;
  onclose: ((event: { wasClean: boolean }) => void) | null = null;
  readonly sent: string[] = [];

  constructor(private readonly dieAfter: number) {}

  open(): void {
    this.onopen?.();
  }

  send(data: string): void {
    this.sent.push(data);
    if (this.sent.length >= this.dieAfter) {
      this.onclose?.({ wasClean: false });
    }
  }

  close(): void {
    this.onclose?.({ wasClean: true });
  }
}
