/**
 * Thin wrapper over the browser's built-in speech recognition with a text
 * box as the universal fallback. Speech is an input convenience; nothing
 * downstream depends on it.
 */

export interface SpeechHooks {
  onTranscribed: (text: string) => void;
  onUnavailable?: () => void;
}

interface RecognitionLike {
  lang: string;
  interimResults: boolean;
  start(): void;
  stop(): void;
  onresult: ((event: { results: ArrayLike<ArrayLike<{ transcript: string }>> }) => void) | null;
  onerror: (() => void) | null;
}

type RecognitionCtor = new () => RecognitionLike;

export function speechRecognitionAvailable(globalObject: object = globalThis): boolean {
  const g = globalObject as Record<string, unknown>;
  return typeof g.SpeechRecognition === "function" ||
    typeof g.webkitSpeechRecognition === "function";
}

export function startSpeechCapture(
  hooks: SpeechHooks,
  globalObject: object = globalThis,
): { stop(): void } | null {
  const g = globalObject as Record<string, unknown>;
  const Ctor = (g.SpeechRecognition ?? g.webkitSpeechRecognition) as
    RecognitionCtor | undefined;
  if (Ctor === undefined) {
    hooks.onUnavailable?.();
    return null;
  }
  const recognition = new Ctor();
  recognition.lang = "en-US";
  recognition.interimResults = false;
  recognition.onresult = (event) => {
    const last = event.results[event.results.length - 1];
    if (last !== undefined && last[0] !== undefined) {
      hooks.onTranscribed(last[0].transcript);
    }
  };
  recognition.onerror = () => hooks.onUnavailable?.();
  recognition.start();
  return { stop: () => recognition.stop() };
}
