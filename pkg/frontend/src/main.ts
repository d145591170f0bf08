/** Browser entry point: session setup form, canvas view, keyboard input. */
import { drawModel } from "./canvas.js";
import {
  GameClient,
  createSession,
  sessionSocketUrl,
  type SocketLike,
} from "./client.js";
import { commandForKey, isBoundKey } from "./keymap.js";
import { buildRenderModel } from "./renderModel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("board");
const banner = el<HTMLDivElement>("banner");
const hud = el<HTMLDivElement>("hud");
const form = el<HTMLFormElement>("setup");
const layoutSelect = el<HTMLSelectElement>("layout");
const partnerSelect = el<HTMLSelectElement>("partner");
const radiusInput = el<HTMLInputElement>("radius");

let seat = 0;
let status = "waiting";
const client = new GameClient({
  onFrame: (frame) => {
    banner.textContent = "";
    render(frame);
  },
  onDone: (score) => {
    banner.textContent = `episode over - score ${score} (R restarts)`;
  },
  onBanner: (text) => {
    banner.textContent = text;
  },
});

function render(frame = client.lastFrame) {
  if (!frame) return;
  try {
    const model = buildRenderModel(frame, { seat, fog: client.fogEnabled, status });
    const ctx = canvas.getContext("2d");
    if (ctx) drawModel(ctx, model);
    const recipe = model.hud.recipe
      ? model.hud.recipe
          .map((count, i) => (count ? `${count}x ingredient ${i}` : ""))
          .filter(Boolean)
          .join(" + ")
      : "hidden";
    hud.textContent =
      `t=${model.hud.t}  score=${model.hud.score}  recipe: ${recipe}` +
      (model.hud.delivered ? "  [delivered!]" : "") +
      (client.fogEnabled ? "  fog:on" : "  fog:off");
  } catch (err) {
    banner.textContent = err instanceof Error ? err.message : String(err);
  }
}

async function start(layout: string, partner: string, radius: string) {
  const base = window.location.origin;
  const config: Record<string, unknown> = {};
  if (radius !== "") config.view_radius = Number(radius);
  const session = await createSession(base, {
    layout,
    seats: ["human", partner],
    config,
    seed: Math.floor(Math.random() * 1_000_000),
  });
  seat = 0;
  const ws = new WebSocket(sessionSocketUrl(base, session.id, seat));
  const adapter: SocketLike = {
    send: (data: string) => ws.send(data),
    close: () => ws.close(),
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  ws.onmessage = (ev) => adapter.onmessage?.({ data: String(ev.data) });
  ws.onclose = () => adapter.onclose?.();
  ws.onerror = (err) => adapter.onerror?.(err);
  client.attach(adapter);
  status = "running";
}

async function populateLayouts() {
  const resp = await fetch(`${window.location.origin}/layouts`);
  const data = (await resp.json()) as { layouts: string[] };
  for (const name of data.layouts) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    layoutSelect.appendChild(option);
  }
}

form.addEventListener("submit", (event) => {
  event.preventDefault();
  start(layoutSelect.value, partnerSelect.value, radiusInput.value).catch(
    (err) => {
      banner.textContent = err instanceof Error ? err.message : String(err);
    }
  );
});

window.addEventListener("keydown", (event) => {
  if (!isBoundKey(event.code)) return;
  event.preventDefault();
  const command = commandForKey(event.code);
  if (!command) return;
  if (command.kind === "toggle-fog") {
    client.toggleFog();
    render();
  } else if (command.kind === "reset") {
    client.sendReset();
  } else {
    client.sendAction(command.action);
  }
});

populateLayouts().catch(() => {
  banner.textContent = "server unreachable - start it with: gridkitchen serve";
});
