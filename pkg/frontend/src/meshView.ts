// Interactive wireframe view of the blade mesh with its annotations, rendered
// as SVG. Rotation and zoom are pure view transforms on the client; nothing
// here talks to the service.

export interface ParsedMesh {
  vertices: number[][];
  edges: [number, number][];
}

export function parsePly(text: string): ParsedMesh {
  const lines = text.split("\n");
  let i = 0;
  if (lines[i++].trim() !== "ply") throw new Error("not a ply file");
  let vertexCount = 0;
  let faceCount = 0;
  let current = "";
  const vertexProps: string[] = [];
  for (; i < lines.length; i++) {
    const parts = lines[i].trim().split(/\s+/);
    if (parts[0] === "end_header") {
      i++;
      break;
    }
    if (parts[0] === "element") {
      current = parts[1];
      if (parts[1] === "vertex") vertexCount = parseInt(parts[2], 10);
      if (parts[1] === "face") faceCount = parseInt(parts[2], 10);
    } else if (parts[0] === "property" && current === "vertex") {
      vertexProps.push(parts[parts.length - 1]);
    }
  }
  const xi = vertexProps.indexOf("x");
  const vertices: number[][] = [];
  for (let v = 0; v < vertexCount; v++, i++) {
    const nums = lines[i].trim().split(/\s+/).map(Number);
    vertices.push([nums[xi], nums[xi + 1], nums[xi + 2]]);
  }
  const edgeSet = new Set<string>();
  const edges: [number, number][] = [];
  for (let f = 0; f < faceCount; f++, i++) {
    const nums = lines[i].trim().split(/\s+/).map(Number);
    const [a, b, c] = [nums[1], nums[2], nums[3]];
    for (const [p, q] of [[a, b], [b, c], [c, a]] as [number, number][]) {
      const key = p < q ? `${p}-${q}` : `${q}-${p}`;
      if (!edgeSet.has(key)) {
        edgeSet.add(key);
        edges.push([p, q]);
      }
    }
  }
  return { vertices, edges };
}

const SVG_NS = "http://www.w3.org/2000/svg";

export class MeshView {
  readonly element: SVGSVGElement;
  private mesh: ParsedMesh | null = null;
  private markers: { points: number[][]; className: string; closed: boolean }[] = [];
  private spots: { location: number[]; label: string }[] = [];
  yaw = 0.6;
  pitch = -0.4;
  zoom = 1.0;
  private size: number;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(size = 420) {
    this.size = size;
    this.element = document.createElementNS(SVG_NS, "svg");
    this.element.setAttribute("viewBox", `0 0 ${size} ${size}`);
    this.element.setAttribute("class", "mesh-view");
    this.element.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
    });
    this.element.addEventListener("pointermove", (ev) => {
      if (!this.dragging) return;
      this.rotate((ev.clientX - this.lastX) * 0.01, (ev.clientY - this.lastY) * 0.01);
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
    });
    this.element.addEventListener("pointerup", () => (this.dragging = false));
    this.element.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.zoomBy(ev.deltaY < 0 ? 1.1 : 1 / 1.1);
    });
  }

  setMesh(mesh: ParsedMesh): void {
    this.mesh = mesh;
    this.redraw();
  }

  setAnnotations(
    markers: { points: number[][]; className: string; closed: boolean }[],
    spots: { location: number[]; label: string }[],
  ): void {
    this.markers = markers;
    this.spots = spots;
    this.redraw();
  }

  rotate(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    this.pitch = Math.max(-1.5, Math.min(1.5, this.pitch + dPitch));
    this.redraw();
  }

  zoomBy(factor: number): void {
    this.zoom = Math.max(0.2, Math.min(8, this.zoom * factor));
    this.redraw();
  }

  private project(p: number[], scale: number, center: number[]): [number, number] {
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    const x = p[0] - center[0];
    const y = p[1] - center[1];
    const z = p[2] - center[2];
    const x1 = cy * x + sy * y;
    const y1 = -sy * x + cy * y;
    const z1 = cp * z - sp * y1;
    const half = this.size / 2;
    return [half + scale * x1, half - scale * z1];
  }

  redraw(): void {
    while (this.element.firstChild) this.element.removeChild(this.element.firstChild);
    if (!this.mesh) return;
    const vs = this.mesh.vertices;
    const lo = [Infinity, Infinity, Infinity];
    const hi = [-Infinity, -Infinity, -Infinity];
    for (const v of vs) {
      for (let k = 0; k < 3; k++) {
        lo[k] = Math.min(lo[k], v[k]);
        hi[k] = Math.max(hi[k], v[k]);
      }
    }
    const center = [0, 1, 2].map((k) => (lo[k] + hi[k]) / 2);
    const extent = Math.max(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) || 1;
    const scale = (this.zoom * this.size * 0.8) / extent;

    const wire = document.createElementNS(SVG_NS, "g");
    wire.setAttribute("class", "wireframe");
    for (const [a, b] of this.mesh.edges) {
      const [x1, y1] = this.project(vs[a], scale, center);
      const [x2, y2] = this.project(vs[b], scale, center);
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", x1.toFixed(2));
      line.setAttribute("y1", y1.toFixed(2));
      line.setAttribute("x2", x2.toFixed(2));
      line.setAttribute("y2", y2.toFixed(2));
      wire.appendChild(line);
    }
    this.element.appendChild(wire);

    for (const marker of this.markers) {
      const poly = document.createElementNS(SVG_NS, marker.closed ? "polygon" : "polyline");
      poly.setAttribute("class", marker.className);
      poly.setAttribute(
        "points",
        marker.points
          .map((p) => this.project(p, scale, center).map((c) => c.toFixed(2)).join(","))
          .join(" "),
      );
      this.element.appendChild(poly);
    }
    for (const spot of this.spots) {
      const [x, y] = this.project(spot.location, scale, center);
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("class", "thickness-spot");
      dot.setAttribute("cx", x.toFixed(2));
      dot.setAttribute("cy", y.toFixed(2));
      dot.setAttribute("r", "4");
      this.element.appendChild(dot);
      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", (x + 6).toFixed(2));
      text.setAttribute("y", (y - 6).toFixed(2));
      text.textContent = spot.label;
      this.element.appendChild(text);
    }
  }
}
