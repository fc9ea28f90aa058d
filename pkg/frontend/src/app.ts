/**
 * Browser wiring: connects the client to the DOM.
 *
 * Typing is never blocked; Enter flushes immediately, otherwise buffered
 * text rides the next tick boundary. A countdown bar shows time until that
 * boundary. Optional microphone input uses the browser's built-in speech
 * recognition when present.
 */

import { DuplexClient, SocketLike } from "./client.js";
import { TickCountdown } from "./countdown.js";
import { ServerFrame } from "./wire.js";

function browserSocket(url: string): SocketLike {
  return new WebSocket(url) as unknown as SocketLike;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function startApp(): void {
  const urlInput = el<HTMLInputElement>("server-url");
  const connectButton = el<HTMLButtonElement>("connect");
  const stateLabel = el<HTMLElement>("state");
  const indicator = el<HTMLElement>("indicator");
  const transcriptView = el<HTMLElement>("transcript");
  const input = el<HTMLInputElement>("say");
  const bar = el<HTMLElement>("countdown-bar");
  const micToggle = el<HTMLButtonElement>("mic");

  let client: DuplexClient | null = null;
  let countdown = new TickCountdown(2.0);

  function render(): void {
    if (!client) return;
    stateLabel.textContent = client.state;
    indicator.textContent = client.transcript.indicator;
    indicator.className = `indicator ${client.transcript.indicator}`;
    const parts: string[] = [];
    for (const entry of client.transcript.entries) {
      const who = entry.who === "user" ? "you" : "assistant";
      parts.push(
        `<div class="entry ${entry.who}"><span class="who">${who}</span> ` +
          `${escapeHtml(entry.text)}</div>`,
      );
    }
    transcriptView.innerHTML = parts.join("");
    transcriptView.scrollTop = transcriptView.scrollHeight;
    if (client.lastError) {
      stateLabel.textContent += ` [${client.lastError}]`;
    }
  }

  function onFrame(frame: ServerFrame): void {
    if (frame.type === "output_chunk" || frame.type === "idle_notice") {
      countdown.markTick(Date.now());
      // tick boundary: dispatch whatever has been typed since the last one
      client?.flush();
    }
    render();
  }

  function connect(): void {
    client = new DuplexClient(urlInput.value, {
      socketFactory: browserSocket,
      onFrame,
      onStateChange: render,
    });
    client.connect();
    render();
  }

  connectButton.addEventListener("click", () => {
    if (client && client.state === "reconnecting") {
      client.connect();
    } else {
      connect();
    }
  });

  let lastKeyAt = 0;

  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      client?.queueInput(input.value);
      input.value = "";
      client?.flush();
      render();
    }
  });
  // dispatch buffered text once the user pauses, without ever locking input
  setInterval(() => {
    if (client && input.value.trim() && client.state === "open") {
      // passive dispatch only when the user paused typing for a beat
      if (Date.now() - lastKeyAt > 800) {
        client.queueInput(input.value);
        input.value = "";
        client.flush();
        render();
      }
    }
  }, 250);

  input.addEventListener("keyup", () => {
    lastKeyAt = Date.now();
  });

  function paintCountdown(): void {
    const fraction = countdown.fraction(Date.now());
    bar.style.width = `${Math.round(fraction * 100)}%`;
    requestAnimationFrame(paintCountdown);
  }
  requestAnimationFrame(paintCountdown);

  // optional speech input via the browser's recognizer, when available
  const SpeechCtor =
    (window as unknown as Record<string, unknown>).SpeechRecognition ??
    (window as unknown as Record<string, unknown>).webkitSpeechRecognition;
  if (!SpeechCtor) {
    micToggle.disabled = true;
    micToggle.title = "speech recognition not available in this browser";
  } else {
    let listening = false;
    type Recognizer = {
      continuous: boolean;
      interimResults: boolean;
      start(): void;
      stop(): void;
      onresult: ((event: unknown) => void) | null;
    };
    const recognizer = new (SpeechCtor as new () => Recognizer)();
    recognizer.continuous = true;
    recognizer.interimResults = false;
    recognizer.onresult = (event: unknown) => {
      const results = (event as { results: ArrayLike<ArrayLike<{ transcript: string }>> })
        .results;
      const last = results[results.length - 1];
      const alt = last && last[0];
      if (alt && client) {
        client.queueInput(alt.transcript);
        client.flush();
        render();
      }
    };
    micToggle.addEventListener("click", () => {
      listening = !listening;
      micToggle.textContent = listening ? "mic on" : "mic off";
      if (listening) recognizer.start();
      else recognizer.stop();
    });
  }
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  startApp();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", startApp);
}
