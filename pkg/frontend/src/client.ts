/**
 * Session client: connects a seat's WebSocket, enforces one action per
 * tick, verifies every frame's grid hash, and surfaces problems as banner
 * text instead of throwing across the event loop.
 */
import { frameHash } from "./hash.js";
import {
  actMessage,
  parseServerMessage,
  ProtocolError,
  resetMessage,
  type ActionName,
  type Frame,
  type FrameMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
}

export interface ClientEvents {
  onFrame?: (frame: Frame, message: FrameMessage) => void;
  onDone?: (score: number) => void;
  onBanner?: (text: string) => void;
  onHashMismatch?: (got: string, want: string) => void;
}

export class GameClient {
  private socket: SocketLike | null = null;
  private awaitingTick = false;
  private events: ClientEvents;
  lastFrame: Frame | null = null;
  framesSeen = 0;
  hashMismatches = 0;
  fogEnabled = true;

  constructor(events: ClientEvents = {}) {
    this.events = events;
  }

  /** Flip the fog-of-war overlay; returns the new overlay state. */
  toggleFog(): boolean {
    this.fogEnabled = !this.fogEnabled;
    return this.fogEnabled;
  }

  attach(socket: SocketLike): void {
    this.socket = socket;
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onclose = () => this.events.onBanner?.("connection closed");
    socket.onerror = () => this.events.onBanner?.("connection error");
  }

  /** One keypress becomes at most one act message per tick. */
  sendAction(action: ActionName): boolean {
    if (!this.socket || this.awaitingTick) {
      return false;
    }
    this.awaitingTick = true;
    this.socket.send(actMessage(action));
    return true;
  }

  sendReset(): void {
    this.socket?.send(resetMessage());
  }

  close(): void {
    this.socket?.close();
  }

  private handleMessage(raw: string): void {
    let message;
    try {
      message = parseServerMessage(raw);
    } catch (err) {
      this.events.onBanner?.(
        err instanceof ProtocolError ? err.message : "bad server message"
      );
      return;
    }
    if (message.type === "error") {
      // rejected input does not consume the tick
      this.awaitingTick = false;
      this.events.onBanner?.(message.reason);
      return;
    }
    if (message.type === "done") {
      this.events.onDone?.(message.score);
      return;
    }
    this.awaitingTick = false;
    this.framesSeen += 1;
    const frame = message.frame;
    const computed = frameHash(frame);
    if (computed !== frame.hash) {
      this.hashMismatches += 1;
      this.events.onHashMismatch?.(computed, frame.hash);
      this.events.onBanner?.("frame hash mismatch");
    }
    this.lastFrame = frame;
    try {
      this.events.onFrame?.(frame, message);
    } catch (err) {
      this.events.onBanner?.(
        err instanceof ProtocolError ? err.message : "render failed"
      );
    }
  }
}

export interface SessionInfo {
  id: string;
  seats: string[];
  status: string;
}

export async function createSession(
  baseUrl: string,
  body: { layout: string; seats?: string[]; config?: object; seed?: number },
  fetchImpl: typeof fetch = fetch
): Promise<SessionInfo> {
  const resp = await fetchImpl(`${baseUrl}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!resp.ok) {
    const detail = (await resp.json().catch(() => ({}))) as { error?: string };
    throw new Error(detail.error ?? `session creation failed (${resp.status})`);
  }
  const data = (await resp.json()) as SessionInfo;
  return data;
}

export function sessionSocketUrl(baseUrl: string, id: string, seat: number): string {
  const ws = baseUrl.replace(/^http/, "ws");
  return `${ws}/sessions/${id}/ws?seat=${seat}`;
}
