import type { OverlayFrame } from "../types.js";

export interface ArPaneHandlers {
  onToggleLayer(layer: string, enabled: boolean): void;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const LAYERS = ["Defects", "Zones", "WallThickness"];

// AR display pane: draws the service-computed pixel primitives 1:1 into an
// SVG whose coordinate system IS the camera image. No reprojection happens
// here; coordinates pass through exactly as delivered.
export function renderArPane(
  frame: OverlayFrame | null,
  enabledLayers: string[],
  handlers: ArPaneHandlers,
  imageSize: { width: number; height: number } = { width: 1280, height: 720 },
): HTMLElement {
  const root = document.createElement("section");
  root.className = "ar-pane";

  const toolbar = document.createElement("div");
  toolbar.className = "layer-toolbar";
  for (const layer of LAYERS) {
    const button = document.createElement("button");
    const enabled = enabledLayers.includes(layer);
    button.className = enabled ? "layer-toggle on" : "layer-toggle off";
    button.dataset.layer = layer;
    button.textContent = layer;
    button.addEventListener("click", () => handlers.onToggleLayer(layer, !enabled));
    toolbar.appendChild(button);
  }
  root.appendChild(toolbar);

  if (!frame) {
    const placeholder = document.createElement("p");
    placeholder.className = "ar-placeholder";
    placeholder.textContent = "Waiting for the first pose estimate…";
    root.appendChild(placeholder);
    return root;
  }

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "ar-canvas");
  svg.setAttribute("viewBox", `0 0 ${imageSize.width} ${imageSize.height}`);
  svg.dataset.cameraId = frame.camera_id;

  // simulated live image background
  const background = document.createElementNS(SVG_NS, "rect");
  background.setAttribute("class", "camera-background");
  background.setAttribute("width", String(imageSize.width));
  background.setAttribute("height", String(imageSize.height));
  svg.appendChild(background);

  for (const poly of frame.polylines) {
    const el = document.createElementNS(SVG_NS, "polyline");
    el.setAttribute("class", `overlay-polyline layer-${poly.layer}` +
      (poly.highlighted ? " highlighted" : ""));
    el.setAttribute(
      "points",
      poly.points.map(([u, v]) => `${u},${v}`).join(" "),
    );
    el.dataset.layer = poly.layer;
    el.dataset.label = poly.label;
    svg.appendChild(el);
  }
  for (const point of frame.points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("class", `overlay-point layer-${point.layer}`);
    dot.setAttribute("cx", String(point.u));
    dot.setAttribute("cy", String(point.v));
    dot.setAttribute("r", "5");
    dot.dataset.layer = point.layer;
    svg.appendChild(dot);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(point.u + 8));
    label.setAttribute("y", String(point.v - 8));
    label.setAttribute("class", "overlay-label");
    label.textContent = point.label;
    svg.appendChild(label);
  }
  root.appendChild(svg);

  if (frame.stale) {
    const stale = document.createElement("div");
    stale.className = "stale-indicator";
    stale.textContent = "pose outdated — clear the work area to refresh";
    root.appendChild(stale);
  }
  return root;
}
