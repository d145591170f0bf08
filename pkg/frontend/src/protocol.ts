/** Wire types for the session server (frame schema version 1). */

export const SUPPORTED_FRAME_VERSION = 1;

export type ActionName = "up" | "down" | "left" | "right" | "stay" | "interact";

export interface ItemSummary {
  code: number;
  plated: boolean;
  cooked: boolean;
  counts: number[];
}

export interface FrameItem extends ItemSummary {
  x: number;
  y: number;
}

export interface FrameTimer {
  x: number;
  y: number;
  ticks: number;
}

export interface FrameAgent {
  x: number;
  y: number;
  dir: number;
  glyph: string;
  inv: ItemSummary | null;
}

export interface Frame {
  v: number;
  t: number;
  w: number;
  h: number;
  static: string[];
  items: FrameItem[];
  timers: FrameTimer[];
  agents: FrameAgent[];
  recipe: number[] | null;
  score: number;
  delivered: boolean;
  view_radius: number | null;
  masks: string[][];
  events: unknown[];
  hash: string;
}

export interface FrameMessage {
  type: "frame";
  session: string;
  status: string;
  frame: Frame;
  rewards: number[] | null;
  seats: string[];
}

export interface DoneMessage {
  type: "done";
  score: number;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage = FrameMessage | DoneMessage | ErrorMessage;

export class ProtocolError extends Error {}

export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError("server sent malformed JSON");
  }
  const msg = data as { type?: string };
  if (msg.type === "frame" || msg.type === "done" || msg.type === "error") {
    return data as ServerMessage;
  }
  throw new ProtocolError(`unknown message type ${String(msg.type)}`);
}

export function checkFrameVersion(frame: Frame): void {
  if (frame.v !== SUPPORTED_FRAME_VERSION) {
    throw new ProtocolError("unsupported schema");
  }
}

export function actMessage(action: ActionName): string {
  return JSON.stringify({ type: "act", action });
}

export function resetMessage(): string {
  return JSON.stringify({ type: "reset" });
}
