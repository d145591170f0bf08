/** Thin canvas executor for a RenderModel; all decisions live upstream. */
import { PALETTE, type RenderModel } from "./renderModel.js";

export const TILE_PX = 40;

export function drawModel(
  ctx: CanvasRenderingContext2D,
  model: RenderModel
): void {
  ctx.canvas.width = model.w * TILE_PX;
  ctx.canvas.height = model.h * TILE_PX;
  ctx.font = "bold 12px monospace";
  ctx.textBaseline = "top";

  for (const tile of model.tiles) {
    const px = tile.x * TILE_PX;
    const py = tile.y * TILE_PX;
    ctx.fillStyle = PALETTE[tile.base] ?? PALETTE.floor;
    ctx.fillRect(px, py, TILE_PX, TILE_PX);
    ctx.strokeStyle = "rgba(0,0,0,0.15)";
    ctx.strokeRect(px + 0.5, py + 0.5, TILE_PX - 1, TILE_PX - 1);
    if (tile.itemColor) {
      ctx.fillStyle = tile.itemColor;
      ctx.fillRect(px + 10, py + 10, TILE_PX - 20, TILE_PX - 20);
    }
  }

  for (const agent of model.agents) {
    if (!agent.visible) continue;
    const px = agent.x * TILE_PX;
    const py = agent.y * TILE_PX;
    ctx.fillStyle = agent.color;
    ctx.fillRect(px + 6, py + 6, TILE_PX - 12, TILE_PX - 12);
    // direction notch
    ctx.fillStyle = "#111";
    const cx = px + TILE_PX / 2;
    const cy = py + TILE_PX / 2;
    const offsets = [
      [0, -1],
      [0, 1],
      [-1, 0],
      [1, 0],
    ][agent.dir] ?? [0, -1];
    ctx.fillRect(
      cx + offsets[0] * (TILE_PX / 2 - 8) - 3,
      cy + offsets[1] * (TILE_PX / 2 - 8) - 3,
      6,
      6
    );
    if (agent.holding) {
      ctx.fillStyle = agent.holding;
      ctx.fillRect(px + TILE_PX - 14, py + 4, 10, 10);
    }
  }

  // fog overlay after everything else so hidden tiles stay hidden
  for (const tile of model.tiles) {
    if (tile.visible) continue;
    ctx.fillStyle = PALETTE.fog;
    ctx.fillRect(tile.x * TILE_PX, tile.y * TILE_PX, TILE_PX, TILE_PX);
  }

  // badges on top of fog: timers are public knowledge only when visible
  for (const tile of model.tiles) {
    if (!tile.visible || tile.badge === null) continue;
    const px = tile.x * TILE_PX;
    const py = tile.y * TILE_PX;
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(px + 2, py + 2, 18, 14);
    ctx.fillStyle = "#000000";
    ctx.fillText(tile.badge, px + 4, py + 3);
  }
}
