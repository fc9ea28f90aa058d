/**
 * Frame schema for the /duplex socket, mirroring the server's WireMessage
 * contract: JSON frames tagged with a direction and a type, where input
 * travels only client to server and output only server to client.
 */

export const CLIENT_TO_SERVER = "client_to_server";
export const SERVER_TO_CLIENT = "server_to_client";

export type ClientFrameType = "open" | "input_chunk" | "close";
export type ServerFrameType =
  | "open"
  | "output_chunk"
  | "idle_notice"
  | "session_closed"
  | "error";

export interface ConfigOverrides {
  tick_seconds?: number;
  max_tokens_per_chunk?: number;
  temperature?: number;
  top_p?: number;
  top_k?: number;
  max_context?: number;
  user_width_min?: number;
  user_width_max?: number;
  rng_seed?: number;
}

export interface ClientFrame {
  direction: typeof CLIENT_TO_SERVER;
  type: ClientFrameType;
  session_id?: string;
  text?: string;
  config?: ConfigOverrides;
  token?: string;
}

export interface ServerFrame {
  direction: typeof SERVER_TO_CLIENT;
  type: ServerFrameType;
  session_id?: string;
  tick_index?: number;
  text?: string;
  terminal?: boolean;
  timestamp?: number;
  error?: string;
}

const SERVER_TYPES: ReadonlySet<string> = new Set([
  "open",
  "output_chunk",
  "idle_notice",
  "session_closed",
  "error",
]);

export function openFrame(options?: {
  sessionId?: string;
  token?: string;
  config?: ConfigOverrides;
}): ClientFrame {
  const frame: ClientFrame = { direction: CLIENT_TO_SERVER, type: "open" };
  if (options?.sessionId) frame.session_id = options.sessionId;
  if (options?.token) frame.token = options.token;
  if (options?.config) frame.config = options.config;
  return frame;
}

export function inputFrame(sessionId: string, text: string): ClientFrame {
  return {
    direction: CLIENT_TO_SERVER,
    type: "input_chunk",
    session_id: sessionId,
    text,
  };
}

export function closeFrame(sessionId: string): ClientFrame {
  return { direction: CLIENT_TO_SERVER, type: "close", session_id: sessionId };
}

/** Parse one raw socket payload; throws on anything outside the contract. */
export function parseServerFrame(raw: string): ServerFrame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error(`frame is not JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof data !== "object" || data === null) {
    throw new Error("frame is not an object");
  }
  const frame = data as Record<string, unknown>;
  if (frame.direction !== SERVER_TO_CLIENT) {
    throw new Error(`unexpected direction ${String(frame.direction)}`);
  }
  if (typeof frame.type !== "string" || !SERVER_TYPES.has(frame.type)) {
    throw new Error(`unknown server frame type ${String(frame.type)}`);
  }
  return frame as unknown as ServerFrame;
}
