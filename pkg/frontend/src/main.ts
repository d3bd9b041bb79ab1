/**
 * Page wiring for the live demo: webcam with landmark overlay on the left
 * alongside the streaming transcript, pose playback on the right, text box
 * plus optional speech input for production. With ?replay=1 the client
 * runs camera-free against the bundled recorded session and mock server.
 */

import { PoseAnimator } from "./animator.js";
import { SignStreamClient, SocketLike } from "./client.js";
import { CaptureLoop, LandmarkExtractor, drawLandmarkOverlay } from "./capture.js";
import { MockServerSocket, parseScript } from "./mockserver.js";
import { FrameLogPlayer, framesFromScript } from "./replay.js";
import { speechRecognitionAvailable, startSpeechCapture } from "./speech.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(text: string): void {
  const box = el<HTMLDivElement>("toasts");
  const item = document.createElement("div");
  item.className = "toast";
  item.textContent = text;
  box.appendChild(item);
  setTimeout(() => item.remove(), 4000);
}

async function loadMediaPipeExtractor(): Promise<LandmarkExtractor> {
  // The hand-tracking model loads from a CDN at runtime; the gateway and
  // this client never exchange pixels. The indirection keeps the compiler
  // from trying to resolve the remote module.
  const bundleUrl =
    "https://cdn.jsdelivr.net/npm/@mediapipe/tasks-vision@0.10.14/vision_bundle.mjs";
  const vision = await import(/* @vite-ignore */ bundleUrl);
  const resolver = await vision.FilesetResolver.forVisionTasks(
    "https://cdn.jsdelivr.net/npm/@mediapipe/tasks-vision@0.10.14/wasm",
  );
  const landmarker = await vision.HandLandmarker.createFromOptions(resolver, {
    baseOptions: {
      modelAssetPath:
        "https://storage.googleapis.com/mediapipe-models/hand_landmarker/hand_landmarker/float16/1/hand_landmarker.task",
    },
    numHands: 1,
    runningMode: "VIDEO",
  });
  return {
    estimate(video: unknown) {
      const result = landmarker.detectForVideo(video as HTMLVideoElement, performance.now());
      const hand = result.landmarks?.[0];
      if (hand === undefined) return null;
      const label = result.handedness?.[0]?.[0]?.categoryName?.toLowerCase();
      return {
        landmarks: hand.map((p: { x: number; y: number; z: number }) => [p.x, p.y, p.z]),
        handedness: label === "left" ? "left" : "right",
      };
    },
  };
}

async function main(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const replayMode = params.get("replay") === "1";
  const serverUrl = params.get("server") ?? `ws://${window.location.hostname}:8765/ws`;
  const mode = (params.get("mode") ?? "dual") as "recognition" | "production" | "dual";

  const transcriptPane = el<HTMLDivElement>("transcript");
  const badge = el<HTMLSpanElement>("letter-badge");
  const statusLabel = el<HTMLSpanElement>("status");
  const chips = el<HTMLDivElement>("gloss-chips");
  const poseCanvas = el<HTMLCanvasElement>("pose-canvas");
  const overlayCanvas = el<HTMLCanvasElement>("overlay-canvas");
  const video = el<HTMLVideoElement>("camera");
  const produceNotice = el<HTMLDivElement>("produce-notice");

  const animator = new PoseAnimator();
  let mockSocket: MockServerSocket | null = null;
  let script = null as ReturnType<typeof parseScript> | null;

  if (replayMode) {
    const response = await fetch("./fixtures/session_hello.jsonl");
    script = parseScript(await response.text());
  }

  const client = new SignStreamClient(
    (): SocketLike => {
      if (script !== null) {
        mockSocket = new MockServerSocket(script);
        setTimeout(() => mockSocket!.open(), 0);
        return mockSocket;
      }
      return new WebSocket(serverUrl) as unknown as SocketLike;
    },
    { mode, frameRateCap: replayMode ? 10_000 : 30 },
    {
      onStatusChange: (status) => { statusLabel.textContent = status; },
      onConfig: (config) => {
        statusLabel.textContent = `session ${config.session}`;
      },
      onLetter: () => { badge.textContent = client.state.badgeText(); },
      onWord: (word) => {
        const span = document.createElement("span");
        span.className = "word";
        span.textContent = word.corrected;
        span.title = `raw: ${word.raw}`;
        transcriptPane.appendChild(span);
        transcriptPane.appendChild(document.createTextNode(" "));
      },
      onPoseSequence: (message) => {
        chips.replaceChildren();
        for (const gloss of message.glosses) {
          const chip = document.createElement("span");
          chip.className = `chip ${gloss.source}`;
          chip.textContent = gloss.source === "retrieved"
            ? `${gloss.gloss} ≈ ${gloss.matched} (${gloss.similarity?.toFixed(2)})`
            : `${gloss.gloss} (fingerspelled)`;
          chips.appendChild(chip);
        }
        if (message.empty_gloss === true || message.frames.length === 0) {
          produceNotice.textContent = "nothing to sign";
          return;
        }
        produceNotice.textContent = "";
        animator.play(message, performance.now());
      },
      onError: (error) => toast(`${error.code}: ${error.detail}`),
    },
  );
  client.connect();

  // Pose playback loop.
  const poseCtx = poseCanvas.getContext("2d")!;
  const renderPose = (): void => {
    if (animator.playing) {
      animator.render(poseCtx, poseCanvas.width, poseCanvas.height, performance.now());
    }
    requestAnimationFrame(renderPose);
  };
  requestAnimationFrame(renderPose);

  // Production inputs: text box always, speech when the browser has it.
  const textInput = el<HTMLInputElement>("produce-text");
  el<HTMLButtonElement>("produce-button").addEventListener("click", () => {
    if (textInput.value.trim()) client.produce(textInput.value.trim());
  });
  const speechButton = el<HTMLButtonElement>("speech-button");
  if (speechRecognitionAvailable()) {
    speechButton.addEventListener("click", () => {
      speechButton.disabled = true;
      startSpeechCapture({
        onTranscribed: (text) => {
          speechButton.disabled = false;
          textInput.value = text;
          client.produce(text);
        },
        onUnavailable: () => {
          speechButton.disabled = false;
          toast("speech recognition unavailable; type instead");
        },
      });
    });
  } else {
    speechButton.disabled = true;
    speechButton.title = "no browser speech recognition; use the text box";
  }

  if (replayMode && script !== null) {
    // Camera-free demo: drip the recorded frames at their own pace.
    const player = new FrameLogPlayer(client, framesFromScript(script));
    const tick = (): void => {
      if (client.state.status === "open" && player.step() && !player.done) {
        setTimeout(tick, 33);
      } else if (!player.done) {
        setTimeout(tick, 100);
      }
    };
    tick();
    el<HTMLDivElement>("banner").textContent =
      "replay mode: recorded session, no camera";
    return;
  }

  // Live camera path.
  try {
    const stream = await navigator.mediaDevices.getUserMedia({ video: true });
    video.srcObject = stream;
    await video.play();
  } catch {
    el<HTMLDivElement>("banner").textContent =
      "camera denied; add ?replay=1 for the recorded demo";
    return;
  }
  let extractor: LandmarkExtractor;
  try {
    extractor = await loadMediaPipeExtractor();
  } catch {
    el<HTMLDivElement>("banner").textContent =
      "hand tracker failed to load; streaming no-hand frames";
    extractor = { estimate: () => null };
  }
  const overlayCtx = overlayCanvas.getContext("2d")!;
  const capture = new CaptureLoop(client, extractor, {
    onFrameSent: (estimate) => drawLandmarkOverlay(
      overlayCtx, overlayCanvas.width, overlayCanvas.height,
      estimate?.landmarks ?? null),
    onExtractorFailure: () => {
      el<HTMLDivElement>("banner").textContent = "hand tracker hiccup; retrying";
    },
  });
  const captureTick = async (): Promise<void> => {
    await capture.processFrame(video);
    requestAnimationFrame(captureTick);
  };
  requestAnimationFrame(captureTick);
}

main().catch((error) => {
  console.error(error);
  document.body.textContent = `failed to start: ${error}`;
});
