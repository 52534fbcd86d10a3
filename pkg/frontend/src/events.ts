// Reconnecting consumer of the /session/events push stream. The transport is
// injectable so tests can drive connects and failures deterministically.

export interface StreamHandle {
  close(): void;
}

export type StreamTransport = (
  url: string,
  onEvent: (type: string, data: string) => void,
  onError: () => void,
) => StreamHandle;

const INITIAL_BACKOFF_MS = 500;
export const MAX_BACKOFF_MS = 5000;

export function eventSourceTransport(
  url: string,
  onEvent: (type: string, data: string) => void,
  onError: () => void,
): StreamHandle {
  const source = new EventSource(url);
  for (const type of ["state", "overlay", "error"]) {
    source.addEventListener(type, (ev) =>
      onEvent(type, (ev as MessageEvent).data),
    );
  }
  source.onerror = () => {
    source.close();
    onError();
  };
  return { close: () => source.close() };
}

export class EventStream {
  private handle: StreamHandle | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private backoffMs = INITIAL_BACKOFF_MS;
  private stopped = false;
  lastBackoffMs = 0;

  constructor(
    private url: string,
    private onEvent: (type: string, data: string) => void,
    private transport: StreamTransport = eventSourceTransport,
  ) {}

  start(): void {
    this.stopped = false;
    this.connect();
  }

  private connect(): void {
    if (this.stopped) return;
    this.handle = this.transport(
      this.url,
      (type, data) => {
        this.backoffMs = INITIAL_BACKOFF_MS; // healthy again
        this.onEvent(type, data);
      },
      () => this.scheduleReconnect(),
    );
  }

  private scheduleReconnect(): void {
    if (this.stopped) return;
    this.lastBackoffMs = this.backoffMs;
    this.timer = setTimeout(() => this.connect(), this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, MAX_BACKOFF_MS);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.handle?.close();
    this.handle = null;
  }
}
