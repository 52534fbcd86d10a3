import { MeshView, parsePly } from "../meshView.js";
import type { DefectDetail } from "../types.js";

export interface DetailHandlers {
  onOpenDocumentation(): void;
  onOpenGlossary(): void;
  onViewDwell(kind: "zone" | "wall_thickness"): void;
}

// Detail screen: interactive 3D model with the defect, its zone, and nearby
// wall-thickness spots, plus text instructions for the selected defect.
export function renderDetail(
  detail: DefectDetail,
  meshPly: string | null,
  handlers: DetailHandlers,
): HTMLElement {
  const root = document.createElement("section");
  root.className = "defect-detail";

  const text = document.createElement("div");
  text.className = "detail-text";
  const title = document.createElement("h2");
  title.textContent = `${detail.defect.id}: ${detail.defect.kind}`;
  text.appendChild(title);

  const facts = document.createElement("dl");
  const rows: [string, string][] = [
    ["Length", `${detail.defect.length_mm} mm`],
    ["Zone", `${detail.zone.name} (${detail.zone.id})`],
    ["Removal limit", `${detail.zone.max_removal_mm} mm`],
    ["Comment", detail.defect.comment || "—"],
  ];
  for (const [term, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = term;
    const dd = document.createElement("dd");
    if (term === "Comment") {
      renderCommentWithLinks(dd, value);
    } else {
      dd.textContent = value;
    }
    facts.appendChild(dt);
    facts.appendChild(dd);
  }
  text.appendChild(facts);

  const spots = document.createElement("ul");
  spots.className = "thickness-list";
  for (const m of detail.nearby_measurements) {
    const li = document.createElement("li");
    li.textContent = `${m.spot_id}: ${m.thickness_mm} mm`;
    spots.appendChild(li);
  }
  if (detail.nearby_measurements.length === 0) {
    const li = document.createElement("li");
    li.textContent = "no nearby wall-thickness measurements";
    spots.appendChild(li);
  }
  text.appendChild(spots);

  const glossaryBtn = document.createElement("button");
  glossaryBtn.className = "glossary-button";
  glossaryBtn.textContent = "Glossary";
  glossaryBtn.addEventListener("click", handlers.onOpenGlossary);
  text.appendChild(glossaryBtn);

  const docBtn = document.createElement("button");
  docBtn.className = "document-button";
  docBtn.textContent = "Document repair";
  docBtn.addEventListener("click", handlers.onOpenDocumentation);
  text.appendChild(docBtn);

  root.appendChild(text);

  if (meshPly) {
    const view = new MeshView();
    try {
      view.setMesh(parsePly(meshPly));
      view.setAnnotations(
        [
          { points: detail.defect.polyline_m, className: "defect-marker", closed: false },
          { points: detail.zone.boundary_m, className: "zone-marker", closed: true },
        ],
        detail.nearby_measurements.map((m) => ({
          location: m.location_m,
          label: `${m.spot_id} ${m.thickness_mm} mm`,
        })),
      );
      const viewer = document.createElement("div");
      viewer.className = "mesh-panel";
      viewer.appendChild(view.element);
      root.appendChild(viewer);
      (root as any).meshView = view; // exposed for tests and dwell tracking
    } catch {
      root.appendChild(fallbackNote());
    }
  } else {
    root.appendChild(fallbackNote());
  }
  return root;
}

function fallbackNote(): HTMLElement {
  const note = document.createElement("p");
  note.className = "mesh-fallback";
  note.textContent = "3D model unavailable; follow the text instructions.";
  return note;
}

// Comments may carry links to repair documents; make them openable in place.
function renderCommentWithLinks(container: HTMLElement, comment: string): void {
  const parts = comment.split(/(https?:\/\/\S+)/g);
  for (const part of parts) {
    if (/^https?:\/\//.test(part)) {
      const anchor = document.createElement("a");
      anchor.className = "linked-document";
      anchor.href = part;
      anchor.target = "_blank";
      anchor.rel = "noopener";
      anchor.textContent = part;
      container.appendChild(anchor);
    } else if (part) {
      container.appendChild(document.createTextNode(part));
    }
  }
}
