/** Keyboard bindings: arrows move, space interacts, s stays, f toggles fog. */
import type { ActionName } from "./protocol.js";

export type KeyCommand =
  | { kind: "act"; action: ActionName }
  | { kind: "toggle-fog" }
  | { kind: "reset" };

const BINDINGS: Record<string, KeyCommand> = {
  ArrowUp: { kind: "act", action: "up" },
  ArrowDown: { kind: "act", action: "down" },
  ArrowLeft: { kind: "act", action: "left" },
  ArrowRight: { kind: "act", action: "right" },
  Space: { kind: "act", action: "interact" },
  KeyS: { kind: "act", action: "stay" },
  KeyF: { kind: "toggle-fog" },
  KeyR: { kind: "reset" },
};

export function commandForKey(code: string): KeyCommand | null {
  return BINDINGS[code] ?? null;
}

export function isBoundKey(code: string): boolean {
  return code in BINDINGS;
}
