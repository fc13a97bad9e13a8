/** Bridge connection: WebSocket wrapper with staleness tracking and
 * auto-reconnect. Never blocks rendering; the latest frames are stored for
 * the render loop to pick up at display refresh. */

import {
  ClientFrame,
  ErrorFrame,
  MappedFrame,
  SimFrame,
  SnapshotFrame,
  decodeFrame,
  encodeFrame,
} from "./protocol";

export type ConnState = "connecting" | "open" | "closed";

export class BridgeClient {
  state: ConnState = "closed";
  snapshot: SnapshotFrame | null = null;
  lastMapped: MappedFrame | null = null;
  lastSim: SimFrame | null = null;
  lastError: ErrorFrame | null = null;
  /** ticks elapsed since the last mapped frame arrived (for staleness) */
  ticksSinceMapped = 0;
  private ws: WebSocket | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly url: string,
    readonly scenario: string,
    readonly backend: string,
    private onchange: () => void = () => {},
  ) {}

  connect(): void {
    this.state = "connecting";
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.state = "open";
      this.send({ type: "bind", scenario: this.scenario, backend: this.backend });
      this.onchange();
    };
    ws.onmessage = (ev) => this.handleMessage(String(ev.data));
    ws.onclose = () => {
      this.state = "closed";
      this.onchange();
      this.scheduleReconnect();
    };
    ws.onerror = () => {
      ws.close();
    };
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null) return;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (this.state === "closed") this.connect();
    }, 1000);
  }

  private handleMessage(text: string): void {
    const frame = decodeFrame(text);
    switch (frame.type) {
      case "snapshot":
        this.snapshot = frame;
        break;
      case "mapped":
        this.lastMapped = frame;
        this.ticksSinceMapped = 0;
        break;
      case "sim":
        this.lastSim = frame;
        break;
      case "error":
        this.lastError = frame;
        break;
    }
    this.onchange();
  }

  send(frame: ClientFrame): boolean {
    if (this.ws !== null && this.state === "open") {
      this.ws.send(encodeFrame(frame));
      return true;
    }
    return false;
  }

  setLive(live: boolean): void {
    this.send({ type: "mode", live });
  }

  /** Called once per render tick; mapped pose is stale after 3 silent ticks. */
  tick(): void {
    this.ticksSinceMapped += 1;
  }

  get stale(): boolean {
    return this.lastMapped !== null && this.ticksSinceMapped > 3;
  }
}
