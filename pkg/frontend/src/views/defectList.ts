import type { Defect } from "../types.js";

export interface DefectListHandlers {
  onSelect(defectId: string): void;
}

// Overview screen: one row per open defect; a tap selects it.
export function renderDefectList(
  serial: string | null,
  defects: Defect[],
  handlers: DefectListHandlers,
): HTMLElement {
  const root = document.createElement("section");
  root.className = "defect-list";

  const heading = document.createElement("h2");
  heading.textContent = serial ? `Open defects – ${serial}` : "Open defects";
  root.appendChild(heading);

  if (defects.length === 0) {
    const done = document.createElement("p");
    done.className = "all-repaired";
    done.textContent = "All defects repaired.";
    root.appendChild(done);
    return root;
  }

  const table = document.createElement("table");
  const head = document.createElement("tr");
  for (const title of ["Defect", "Type", "Length", "Zone"]) {
    const th = document.createElement("th");
    th.textContent = title;
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const defect of defects) {
    const row = document.createElement("tr");
    row.className = "defect-row";
    row.dataset.defectId = defect.id;
    const cells = [
      defect.id,
      defect.kind,
      `${defect.length_mm} mm`,
      defect.zone_id,
    ];
    for (const text of cells) {
      const td = document.createElement("td");
      td.textContent = text;
      row.appendChild(td);
    }
    row.addEventListener("click", () => handlers.onSelect(defect.id));
    table.appendChild(row);
  }
  root.appendChild(table);
  return root;
}
