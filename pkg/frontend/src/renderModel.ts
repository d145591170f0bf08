/**
 * Pure frame -> draw-model transform. The canvas layer executes this model
 * verbatim; keeping it data-only makes the renderer testable without a DOM
 * and guarantees no game logic creeps into the client.
 */
import { checkFrameVersion, type Frame } from "./protocol.js";

export interface TileModel {
  x: number;
  y: number;
  base: string; // palette key
  glyph: string;
  badge: string | null; // e.g. remaining reveal ticks on a button indicator
  itemColor: string | null;
  visible: boolean;
}

export interface AgentModel {
  x: number;
  y: number;
  dir: number;
  color: string;
  holding: string | null;
  visible: boolean;
}

export interface HudModel {
  t: number;
  score: number;
  recipe: number[] | null; // null when hidden by fog
  delivered: boolean;
  status: string;
}

export interface RenderModel {
  w: number;
  h: number;
  tiles: TileModel[];
  agents: AgentModel[];
  hud: HudModel;
  fogged: boolean;
}

export const PALETTE: Record<string, string> = {
  floor: "#ebebe1",
  wall: "#585860",
  delivery: "#3ca055",
  pot: "#28282e",
  indicator: "#966ec8",
  button: "#dc8c3c",
  plates: "#fafafc",
  ing0: "#e6be3c",
  ing1: "#6eb946",
  ing2: "#cd5a50",
  ing3: "#5f96d2",
  ingX: "#aa7850",
  agent0: "#d23c3c",
  agent1: "#4664dc",
  dish: "#f0dcb4",
  fog: "rgba(12, 12, 22, 0.78)",
};

const GLYPH_BASE: Record<string, string> = {
  " ": "floor",
  W: "wall",
  X: "delivery",
  P: "pot",
  R: "indicator",
  L: "button",
  B: "plates",
};

export function ingredientColor(index: number): string {
  return PALETTE[index < 4 ? `ing${index}` : "ingX"] ?? PALETTE.ingX;
}

function dominantIngredient(counts: number[]): number | null {
  let best: number | null = null;
  for (let i = 0; i < counts.length; i++) {
    if (counts[i] > 0 && (best === null || counts[i] > counts[best])) {
      best = i;
    }
  }
  return best;
}

export interface RenderOptions {
  seat: number;
  fog: boolean;
  status?: string;
}

export function buildRenderModel(frame: Frame, options: RenderOptions): RenderModel {
  checkFrameVersion(frame);
  const mask = frame.masks[options.seat] ?? null;
  const fogActive = options.fog && frame.view_radius !== null && mask !== null;

  const isVisible = (x: number, y: number): boolean =>
    !fogActive || mask![y].charAt(x) === "1";

  const items = new Map<string, Frame["items"][number]>();
  for (const it of frame.items) items.set(`${it.x},${it.y}`, it);
  const timers = new Map<string, number>();
  for (const tm of frame.timers) timers.set(`${tm.x},${tm.y}`, tm.ticks);

  const tiles: TileModel[] = [];
  let recipeVisible = !fogActive;
  for (let y = 0; y < frame.h; y++) {
    for (let x = 0; x < frame.w; x++) {
      const glyph = frame.static[y].charAt(x);
      const visible = isVisible(x, y);
      const ticks = timers.get(`${x},${y}`) ?? null;
      const item = items.get(`${x},${y}`) ?? null;
      let base: string;
      if (glyph >= "0" && glyph <= "9") {
        base = `ing${Math.min(Number(glyph), 4)}`;
        if (Number(glyph) >= 4) base = "ingX";
      } else {
        base = GLYPH_BASE[glyph] ?? "floor";
      }
      let badge: string | null = null;
      if (ticks !== null && (glyph === "P" || glyph === "L")) {
        badge = String(ticks);
      }
      // a revealed or plain indicator in view means the recipe is readable
      if (visible && (glyph === "R" || (glyph === "L" && (ticks ?? 0) > 0))) {
        recipeVisible = true;
      }
      let itemColor: string | null = null;
      if (item) {
        const main = dominantIngredient(item.counts);
        itemColor = item.plated
          ? PALETTE.dish
          : main !== null
            ? ingredientColor(main)
            : PALETTE.plates;
      }
      tiles.push({ x, y, base, glyph, badge, itemColor, visible });
    }
  }

  const agents: AgentModel[] = frame.agents.map((a, i) => {
    const main = a.inv ? dominantIngredient(a.inv.counts) : null;
    return {
      x: a.x,
      y: a.y,
      dir: a.dir,
      color: i % 2 === 0 ? PALETTE.agent0 : PALETTE.agent1,
      holding: a.inv
        ? a.inv.plated
          ? PALETTE.dish
          : main !== null
            ? ingredientColor(main)
            : PALETTE.plates
        : null,
      visible: isVisible(a.x, a.y),
    };
  });

  return {
    w: frame.w,
    h: frame.h,
    tiles,
    agents,
    hud: {
      t: frame.t,
      score: frame.score,
      recipe: recipeVisible ? frame.recipe : null,
      delivered: frame.delivered,
      status: options.status ?? "running",
    },
    fogged: fogActive,
  };
}
