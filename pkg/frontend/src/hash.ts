/**
 * Independent re-implementation of the server's frame hash: 32-bit FNV-1a
 * over the canonical grid string. The server embeds its own digest in every
 * frame; the client recomputes it from what it is about to render, so any
 * divergence between the two renderers is caught immediately.
 */
import type { Frame } from "./protocol.js";

export function fnv1a32(data: string): number {
  let hash = 0x811c9dc5;
  const bytes = new TextEncoder().encode(data);
  for (const byte of bytes) {
    hash ^= byte;
    // 32-bit wrapping multiply by the FNV prime
    hash = Math.imul(hash >>> 0, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function canonicalGridString(frame: Frame): string {
  const items = new Map<string, number>();
  for (const it of frame.items) items.set(`${it.x},${it.y}`, it.code);
  const timers = new Map<string, number>();
  for (const tm of frame.timers) timers.set(`${tm.x},${tm.y}`, tm.ticks);

  const cells: string[] = [];
  const ticks: string[] = [];
  for (let y = 0; y < frame.h; y++) {
    for (let x = 0; x < frame.w; x++) {
      cells.push(String(items.get(`${x},${y}`) ?? 0));
      ticks.push(String(timers.get(`${x},${y}`) ?? 0));
    }
  }
  const agents = frame.agents
    .map((a) => `${a.x},${a.y},${a.dir},${a.inv ? a.inv.code : 0}`)
    .join(";");
  const recipe =
    frame.recipe && frame.recipe.length ? frame.recipe.join(",") : "-";
  return (
    `v${frame.v}|${frame.w}x${frame.h}|${frame.static.join("")}|` +
    `${cells.join(",")}|${ticks.join(",")}|${agents}|${recipe}|t=${frame.t}`
  );
}

export function frameHash(frame: Frame): string {
  return fnv1a32(canonicalGridString(frame)).toString(16).padStart(8, "0");
}
