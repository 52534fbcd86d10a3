import type {
  DocumentationRecord,
  OverlayFrame,
  SessionPayload,
} from "./types.js";

// Every user action goes through exactly one of these calls.
export interface ServiceClient {
  getSession(): Promise<SessionPayload>;
  scan(serial: string): Promise<SessionPayload>;
  selectDefect(defectId: string): Promise<SessionPayload>;
  toggleLayer(layer: string, enabled: boolean): Promise<OverlayFrame | null>;
  reportView(kind: string, start: number, end: number): Promise<void>;
  submitDocumentation(record: DocumentationRecord): Promise<SessionPayload>;
  getOverlay(): Promise<OverlayFrame | null>;
  getMesh(serial: string): Promise<string>;
}

export class ServiceError extends Error {
  status: number;
  reasons: string[];

  constructor(status: number, message: string, reasons: string[] = []) {
    super(message);
    this.status = status;
    this.reasons = reasons;
  }
}

async function asJson(response: Response): Promise<any> {
  const body = await response.text();
  const parsed = body ? JSON.parse(body) : {};
  if (!response.ok) {
    throw new ServiceError(
      response.status,
      parsed.error ?? response.statusText,
      parsed.reasons ?? [],
    );
  }
  return parsed;
}

export class HttpClient implements ServiceClient {
  constructor(private base: string = "") {}

  private async post(path: string, body?: unknown): Promise<any> {
    return asJson(
      await fetch(this.base + path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: body === undefined ? "{}" : JSON.stringify(body),
      }),
    );
  }

  async getSession(): Promise<SessionPayload> {
    return asJson(await fetch(this.base + "/session"));
  }

  async scan(serial: string): Promise<SessionPayload> {
    return this.post("/session/scan", { serial });
  }

  async selectDefect(defectId: string): Promise<SessionPayload> {
    return this.post(`/session/defect/${encodeURIComponent(defectId)}/select`);
  }

  async toggleLayer(layer: string, enabled: boolean): Promise<OverlayFrame | null> {
    const body = await this.post("/session/layers", { layer, enabled });
    return body.overlay ?? null;
  }

  async reportView(kind: string, start: number, end: number): Promise<void> {
    await this.post("/session/view", { kind, start, end });
  }

  async submitDocumentation(record: DocumentationRecord): Promise<SessionPayload> {
    return this.post("/session/document", { record });
  }

  async getOverlay(): Promise<OverlayFrame | null> {
    const body = await asJson(await fetch(this.base + "/session/overlay"));
    return body.overlay ?? null;
  }

  async getMesh(serial: string): Promise<string> {
    const response = await fetch(
      this.base + `/assets/${encodeURIComponent(serial)}/mesh`,
    );
    if (!response.ok) {
      throw new ServiceError(response.status, "mesh unavailable");
    }
    return response.text();
  }
}
