/** Browser entry: a minimal panel UI over the session service.
 *
 * The heavy lifting (model validity, event detection, option ranking) all
 * happens server-side; this page renders the mesh wireframe on a canvas,
 * shows the constraint-state badge, and drives edits/options/parameters
 * through the typed client.
 */
import { SessionApi, httpTransport } from "./api.js";
import { OptionsDialog } from "./dialog.js";
import { buildBuffers } from "./mesh.js";
import { SessionStore } from "./store.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = ""): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  Object.entries(attrs).forEach(([k, v]) => node.setAttribute(k, v));
  if (text) node.textContent = text;
  return node;
}

function drawWireframe(canvas: HTMLCanvasElement, positions: Float32Array): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  // simple isometric projection
  const px: number[] = [];
  const py: number[] = [];
  for (let i = 0; i < positions.length; i += 3) {
    const [x, y, z] = [positions[i], positions[i + 1], positions[i + 2]];
    px.push(x - 0.5 * y);
    py.push(-(z + 0.25 * x + 0.25 * y));
  }
  const minX = Math.min(...px), maxX = Math.max(...px);
  const minY = Math.min(...py), maxY = Math.max(...py);
  const scale = 0.85 * Math.min(
    canvas.width / (maxX - minX || 1), canvas.height / (maxY - minY || 1));
  const ox = (canvas.width - (maxX + minX) * scale) / 2;
  const oy = (canvas.height - (maxY + minY) * scale) / 2;
  ctx.strokeStyle = "#2d6cdf";
  ctx.beginPath();
  for (let t = 0; t < px.length; t += 3) {
    for (let c = 0; c < 3; c++) {
      const a = t + c, b = t + ((c + 1) % 3);
      ctx.moveTo(px[a] * scale + ox, py[a] * scale + oy);
      ctx.lineTo(px[b] * scale + ox, py[b] * scale + oy);
    }
  }
  ctx.stroke();
}

export function boot(base = ""): void {
  const api = new SessionApi(httpTransport(base));
  const store = new SessionStore(api);
  const dialog = new OptionsDialog(store);

  const root = document.body;
  const canvas = el("canvas", { width: "640", height: "420" });
  const badge = el("span", { class: "badge" }, "no session");
  const fileInput = el("input", { type: "file" });
  const optionsBox = el("div", { class: "options" });
  const timelineBox = el("div", { class: "timeline" });
  root.append(fileInput, badge, canvas, optionsBox, timelineBox);

  store.onChange(() => {
    badge.textContent = `constraint state: ${store.badge}` +
      (store.conflict ? ` — conflict: ${store.conflict}` : "");
    if (store.mesh) drawWireframe(canvas, buildBuffers(store.mesh).positions);
    optionsBox.replaceChildren();
    if (dialog.isOpen()) {
      for (const row of dialog.rows()) {
        const btn = el("button", {}, `${row.id} — ${row.explanation}`);
        btn.addEventListener("click", () => void dialog.choose(row.id));
        optionsBox.append(btn);
      }
    }
    timelineBox.replaceChildren(
      ...store.timeline.map((e) =>
        el("div", {}, `t=${e.t.toFixed(6)} ${e.kind} volume=${e.volume}`)));
  });

  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    const doc = JSON.parse(await file.text());
    await store.load(doc);
    await store.fetchOptions();
  });
}

if (typeof document !== "undefined" && document.currentScript) {
  boot();
}
