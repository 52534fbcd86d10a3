import type { DocumentationRecord } from "../types.js";
import type { DocDraft } from "../viewmodel.js";

export interface DocFormHandlers {
  onSubmit(record: DocumentationRecord): void;
  onDraftChange(draft: DocDraft): void;
}

// Documentation form; the draft survives reloads, submission builds the
// record with the client-measured duration.
export function renderDocForm(
  defectId: string,
  draft: DocDraft,
  handlers: DocFormHandlers,
  now: () => number = () => Date.now() / 1000,
): HTMLElement {
  const root = document.createElement("section");
  root.className = "doc-form";

  const heading = document.createElement("h2");
  heading.textContent = `Document repair of ${defectId}`;
  root.appendChild(heading);

  const form = document.createElement("form");

  const workerInput = document.createElement("input");
  workerInput.name = "worker_id";
  workerInput.placeholder = "worker id";
  workerInput.value = draft.workerId;
  const workerError = document.createElement("span");
  workerError.className = "field-error";

  const notesInput = document.createElement("textarea");
  notesInput.name = "notes";
  notesInput.value = draft.notes;

  const outcomeSelect = document.createElement("select");
  outcomeSelect.name = "outcome";
  for (const value of ["repaired", "deferred"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    option.selected = draft.outcome === value;
    outcomeSelect.appendChild(option);
  }

  const serverError = document.createElement("p");
  serverError.className = "server-error";

  const currentDraft = (): DocDraft => ({
    workerId: workerInput.value,
    notes: notesInput.value,
    outcome: outcomeSelect.value as DocDraft["outcome"],
    startedAt: draft.startedAt,
  });
  for (const el of [workerInput, notesInput, outcomeSelect]) {
    el.addEventListener("input", () => handlers.onDraftChange(currentDraft()));
    el.addEventListener("change", () => handlers.onDraftChange(currentDraft()));
  }

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Submit documentation";

  form.appendChild(workerInput);
  form.appendChild(workerError);
  form.appendChild(notesInput);
  form.appendChild(outcomeSelect);
  form.appendChild(serverError);
  form.appendChild(submit);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (!workerInput.value.trim()) {
      workerError.textContent = "worker id is required";
      return;
    }
    workerError.textContent = "";
    const finished = now();
    const started = draft.startedAt;
    handlers.onSubmit({
      defect_id: defectId,
      worker_id: workerInput.value.trim(),
      started_at_s: started,
      finished_at_s: finished,
      duration_s: finished - started,
      notes: notesInput.value,
      outcome: outcomeSelect.value as DocumentationRecord["outcome"],
    });
  });
  root.appendChild(form);
  return root;
}

export function showServerRejection(root: HTMLElement, reasons: string[]): void {
  const box = root.querySelector(".server-error");
  if (box) box.textContent = reasons.join("; ") || "submission rejected";
}
