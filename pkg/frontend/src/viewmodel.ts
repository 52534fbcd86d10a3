import type { OverlayFrame, SessionPayload } from "./types.js";

export interface DocDraft {
  workerId: string;
  notes: string;
  outcome: "repaired" | "deferred";
  startedAt: number;
}

const DRAFT_KEY = "bladecas.doc-draft";

export const GLOSSARY: { term: string; meaning: string }[] = [
  { term: "MRO", meaning: "maintenance, repair, and overhaul" },
  { term: "TCT", meaning: "task completion time, first to last action per blade" },
  { term: "Zone", meaning: "surface region with a material-removal limit" },
  { term: "Residual wall thickness", meaning: "remaining material at a measured spot" },
  { term: "AR", meaning: "augmented reality: overlays on the live camera image" },
  { term: "Serial", meaning: "per-blade identifier from the data-matrix code" },
];

// Mirror of the service state plus the one piece of client-owned data: the
// in-progress documentation draft, which survives reloads.
export class ViewModel {
  session: SessionPayload = {
    state: "Idle",
    serial: null,
    defect_id: null,
    stale: false,
    layers: [],
    open_defects: [],
    has_pose: false,
    last_error: null,
    detail: null,
  };
  overlay: OverlayFrame | null = null;
  meshPly: string | null = null;
  banner: string | null = null;
  glossaryOpen = false;

  applySession(payload: SessionPayload): void {
    this.session = payload;
    this.banner = null;
  }

  applyOverlay(frame: OverlayFrame | null): void {
    this.overlay = frame;
  }

  loadDraft(): DocDraft {
    try {
      const raw = localStorage.getItem(DRAFT_KEY);
      if (raw) return JSON.parse(raw) as DocDraft;
    } catch {
      // fall through to a fresh draft
    }
    return { workerId: "", notes: "", outcome: "repaired", startedAt: Date.now() / 1000 };
  }

  saveDraft(draft: DocDraft): void {
    localStorage.setItem(DRAFT_KEY, JSON.stringify(draft));
  }

  clearDraft(): void {
    localStorage.removeItem(DRAFT_KEY);
  }
}
