import { ServiceClient, ServiceError } from "./client.js";
import { EventStream, StreamTransport, eventSourceTransport } from "./events.js";
import type { DocumentationRecord } from "./types.js";
import { DocDraft, ViewModel } from "./viewmodel.js";
import { renderArPane } from "./views/arPane.js";
import { renderDefectList } from "./views/defectList.js";
import { renderDetail } from "./views/detail.js";
import { renderDocForm, showServerRejection } from "./views/docForm.js";
import { renderGlossary } from "./views/glossary.js";

// Single-page operator client: one event loop, renders are pure functions of
// the view model, and every user action issues exactly one service call.
export class App {
  readonly vm = new ViewModel();
  private docFormOpen = false;
  private meshSerial: string | null = null;
  private stream: EventStream | null = null;
  private panelOpenedAt: { [kind: string]: number } = {};

  constructor(
    private root: HTMLElement,
    private client: ServiceClient,
    private now: () => number = () => Date.now() / 1000,
    private transport: StreamTransport = eventSourceTransport,
  ) {}

  async bootstrap(eventsUrl = "/session/events"): Promise<void> {
    this.vm.applySession(await this.client.getSession());
    this.vm.applyOverlay(await this.client.getOverlay());
    await this.ensureMesh();
    this.stream = new EventStream(
      eventsUrl,
      (type, data) => void this.onPushEvent(type, data),
      this.transport,
    );
    this.stream.start();
    this.render();
  }

  stop(): void {
    this.stream?.stop();
  }

  async onPushEvent(type: string, data: string): Promise<void> {
    if (type === "state") {
      this.vm.applySession(JSON.parse(data));
      await this.ensureMesh();
    } else if (type === "overlay") {
      this.vm.applyOverlay(await this.client.getOverlay());
    } else if (type === "error") {
      this.vm.banner = JSON.parse(data).error ?? "service error";
    }
    this.render();
  }

  private async ensureMesh(): Promise<void> {
    const serial = this.vm.session.serial;
    if (!serial || serial === this.meshSerial) return;
    try {
      this.vm.meshPly = await this.client.getMesh(serial);
      this.meshSerial = serial;
    } catch {
      this.vm.meshPly = null; // text-only fallback
    }
  }

  // --- user actions (one endpoint call each) -------------------------------

  async scan(serial: string): Promise<void> {
    try {
      this.vm.applySession(await this.client.scan(serial));
      await this.ensureMesh();
    } catch (err) {
      this.vm.banner = err instanceof ServiceError ? err.message : String(err);
    }
    this.render();
  }

  async selectDefect(defectId: string): Promise<void> {
    try {
      this.vm.applySession(await this.client.selectDefect(defectId));
      this.docFormOpen = false;
      this.panelOpenedAt = { defect_info: this.now() };
    } catch (err) {
      this.vm.banner = err instanceof ServiceError ? err.message : String(err);
    }
    this.render();
  }

  async toggleLayer(layer: string, enabled: boolean): Promise<void> {
    try {
      const frame = await this.client.toggleLayer(layer, enabled);
      this.vm.applyOverlay(frame);
      const layers = new Set(this.vm.session.layers);
      if (enabled) layers.add(layer);
      else layers.delete(layer);
      this.vm.session = { ...this.vm.session, layers: [...layers].sort() };
    } catch (err) {
      this.vm.banner = err instanceof ServiceError ? err.message : String(err);
    }
    this.render();
  }

  openDocumentation(): void {
    // reading ends when the worker reaches for the form
    void this.flushViewDwell();
    this.docFormOpen = true;
    this.render();
  }

  async submitDocumentation(record: DocumentationRecord): Promise<void> {
    try {
      this.vm.applySession(await this.client.submitDocumentation(record));
      this.vm.clearDraft();
      this.docFormOpen = false;
    } catch (err) {
      if (err instanceof ServiceError) {
        const form = this.root.querySelector(".doc-form") as HTMLElement | null;
        if (form) {
          showServerRejection(form, err.reasons.length ? err.reasons : [err.message]);
          return; // keep the draft and the form as they are
        }
        this.vm.banner = err.message;
      } else {
        this.vm.banner = String(err);
      }
    }
    this.render();
  }

  noteDwell(kind: "zone" | "wall_thickness"): void {
    if (!(kind in this.panelOpenedAt)) this.panelOpenedAt[kind] = this.now();
  }

  private async flushViewDwell(): Promise<void> {
    const end = this.now();
    for (const [kind, start] of Object.entries(this.panelOpenedAt)) {
      try {
        await this.client.reportView(kind, start, end);
      } catch {
        // dwell reporting is best-effort instrumentation
      }
    }
    this.panelOpenedAt = {};
  }

  toggleGlossary(): void {
    this.vm.glossaryOpen = !this.vm.glossaryOpen;
    this.render();
  }

  // --- rendering ------------------------------------------------------------

  render(): void {
    const session = this.vm.session;
    this.root.replaceChildren();

    const header = document.createElement("header");
    const state = document.createElement("span");
    state.className = "session-state";
    state.textContent = session.serial
      ? `${session.state} – ${session.serial}`
      : session.state;
    header.appendChild(state);
    this.root.appendChild(header);

    if (this.vm.banner) {
      const banner = document.createElement("div");
      banner.className = "error-banner";
      banner.textContent = this.vm.banner;
      this.root.appendChild(banner);
    }

    const main = document.createElement("main");
    const left = document.createElement("div");
    left.className = "instruction-pane";

    if (session.state === "Idle") {
      left.appendChild(this.renderScanScreen());
    } else if (session.state === "ObjectIdentified") {
      left.appendChild(
        renderDefectList(session.serial, session.open_defects, {
          onSelect: (id) => void this.selectDefect(id),
        }),
      );
    } else if (session.detail) {
      if (this.docFormOpen || session.state === "Documenting") {
        const draft = this.vm.loadDraft();
        left.appendChild(
          renderDocForm(session.detail.defect.id, draft, {
            onSubmit: (record) => void this.submitDocumentation(record),
            onDraftChange: (d: DocDraft) => this.vm.saveDraft(d),
          }, this.now),
        );
      } else {
        left.appendChild(
          renderDetail(session.detail, this.vm.meshPly, {
            onOpenDocumentation: () => this.openDocumentation(),
            onOpenGlossary: () => this.toggleGlossary(),
            onViewDwell: (kind) => this.noteDwell(kind),
          }),
        );
      }
    }
    main.appendChild(left);

    main.appendChild(
      renderArPane(this.vm.overlay, session.layers, {
        onToggleLayer: (layer, enabled) => void this.toggleLayer(layer, enabled),
      }),
    );
    this.root.appendChild(main);

    if (this.vm.glossaryOpen) {
      this.root.appendChild(renderGlossary(() => this.toggleGlossary()));
    }
  }

  private renderScanScreen(): HTMLElement {
    const screen = document.createElement("section");
    screen.className = "scan-screen";
    const prompt = document.createElement("p");
    prompt.textContent = "Scan a turbine blade to begin.";
    screen.appendChild(prompt);

    const input = document.createElement("input");
    input.className = "scan-input";
    input.placeholder = "serial number";
    const button = document.createElement("button");
    button.className = "scan-button";
    button.textContent = "Scan";
    button.addEventListener("click", () => {
      if (input.value.trim()) void this.scan(input.value.trim());
    });
    screen.appendChild(input);
    screen.appendChild(button);
    return screen;
  }
}
