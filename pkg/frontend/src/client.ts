/**
 * DuplexClient: one socket per session, an input buffer that dispatches on
 * tick boundaries (or an explicit flush), and a transcript that survives
 * reconnects.
 *
 * The WebSocket implementation is injected so the whole client runs under
 * test without a browser or a server. Nothing here ever blocks or gates
 * user input: queueing while the assistant is speaking is the interruption
 * mechanism.
 */

import { Transcript } from "./transcript.js";
import {
  ClientFrame,
  ConfigOverrides,
  ServerFrame,
  closeFrame,
  inputFrame,
  openFrame,
  parseServerFrame,
} from "./wire.js";

export type ConnectionState =
  | "idle"
  | "connecting"
  | "open"
  | "reconnecting"
  | "closed";

export interface SocketLike {
  send(data: string): void;
  close(code?: number, reason?: string): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: ((event: { code: number }) => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  socketFactory: SocketFactory;
  token?: string;
  config?: ConfigOverrides;
  /** Local clock, injectable for tests; defaults to Date.now. */
  now?: () => number;
  onFrame?: (frame: ServerFrame) => void;
  onStateChange?: (state: ConnectionState) => void;
}

export class DuplexClient {
  readonly transcript = new Transcript();
  state: ConnectionState = "idle";
  sessionId: string | null = null;
  lastError: string | null = null;

  private socket: SocketLike | null = null;
  private buffer: string[] = [];
  private readonly now: () => number;
  private closeRequested = false;

  constructor(
    private readonly url: string,
    private readonly options: ClientOptions,
  ) {
    this.now = options.now ?? Date.now;
  }

  /** Open the socket and start (or re-attach to) a session. */
  connect(): void {
    this.closeRequested = false;
    this.setState(this.sessionId === null ? "connecting" : "reconnecting");
    const socket = this.options.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(
        JSON.stringify(
          openFrame({
            sessionId: this.sessionId ?? undefined,
            token: this.options.token,
            config: this.options.config,
          }),
        ),
      );
    };
    socket.onmessage = (event) => this.handleRaw(event.data);
    socket.onclose = () => this.handleDrop();
    socket.onerror = () => {
      // the close handler owns state; errors just surface a note
      this.lastError = "socket error";
    };
  }

  /**
   * Buffer text for the next dispatch. Never refuses input: sending while
   * the assistant is speaking is how the user interrupts.
   */
  queueInput(text: string): void {
    const trimmed = text.trim();
    if (trimmed) {
      this.buffer.push(trimmed);
    }
  }

  get pendingInput(): string {
    return this.buffer.join(" ");
  }

  /** Send everything buffered as one input_chunk; a no-op when empty. */
  flush(): boolean {
    if (!this.socket || this.state !== "open" || this.buffer.length === 0) {
      return false;
    }
    const text = this.buffer.join(" ");
    this.buffer = [];
    this.transcript.addUserSlice(text);
    this.sendFrame(inputFrame(this.sessionId ?? "", text));
    return true;
  }

  /** Ask the server to finish and persist the session, then drop the socket. */
  close(): void {
    this.closeRequested = true;
    if (this.socket && this.state === "open" && this.sessionId) {
      this.sendFrame(closeFrame(this.sessionId));
    } else if (this.socket) {
      this.socket.close();
    }
  }

  private sendFrame(frame: ClientFrame): void {
    this.socket?.send(JSON.stringify(frame));
  }

  private handleRaw(raw: string): void {
    let frame: ServerFrame;
    try {
      frame = parseServerFrame(raw);
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return;
    }
    if (frame.type === "open") {
      this.sessionId = frame.session_id ?? this.sessionId;
      this.setState("open");
    } else if (frame.type === "error") {
      this.lastError = frame.error ?? "unknown error";
    } else if (frame.type === "session_closed") {
      this.closeRequested = true;
      this.setState("closed");
      this.socket?.close();
    } else {
      this.transcript.applyServerFrame(frame);
    }
    this.options.onFrame?.(frame);
  }

  private handleDrop(): void {
    this.socket = null;
    if (this.closeRequested || this.state === "closed") {
      this.setState("closed");
      return;
    }
    // connection loss: keep the transcript, surface a reconnectable state
    this.setState("reconnecting");
  }

  private setState(state: ConnectionState): void {
    if (state !== this.state) {
      this.state = state;
      this.options.onStateChange?.(state);
    }
  }
}
