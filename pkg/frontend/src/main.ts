/** Sandbox wiring: two panes, pointer input on the left, mapped output on
 * the right, throttled pose streaming, optional live simulation. */

import { BridgeClient } from "./client";
import { CursorState } from "./cursor";
import { PoseFrame } from "./protocol";
import { drawGauge, drawPane, GridPoint, parseGridCsv } from "./render";
import { TickThrottle } from "./throttle";
import { TrailBuffer } from "./trail";
import { Viewport } from "./viewport";

const TICK_HZ = 60;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const localCanvas = el<HTMLCanvasElement>("local-pane");
const remoteCanvas = el<HTMLCanvasElement>("remote-pane");
const gaugeCanvas = el<HTMLCanvasElement>("gauge");
const statusLine = el<HTMLDivElement>("status");

const params = new URLSearchParams(window.location.search);
const scenario = params.get("scenario") ?? "toy2d";
const backend = params.get("backend") ?? "iter";
const wsUrl = `ws://${window.location.host}/`;

const cursor = new CursorState();
const localTrail = new TrailBuffer(2000);
const remoteTrail = new TrailBuffer(2000);
let live = false;
let showGrid = false;
let grid: GridPoint[] | null = null;

const client = new BridgeClient(wsUrl, scenario, backend);
const throttle = new TickThrottle<PoseFrame>(TICK_HZ, (frame) => {
  client.send(frame);
});

client.connect();

fetch(`/${scenario}.grid.csv`)
  .then((r) => (r.ok ? r.text() : Promise.reject(new Error("no grid export"))))
  .then((text) => {
    grid = parseGridCsv(text);
  })
  .catch(() => {
    grid = null; // overlay simply unavailable
  });

function viewports(): { local: Viewport; remote: Viewport } | null {
  const snap = client.snapshot;
  if (!snap) return null;
  const local = new Viewport(
    { lo: [snap.bounds.local[0][0], snap.bounds.local[0][1]], hi: [snap.bounds.local[1][0], snap.bounds.local[1][1]] },
    localCanvas.width,
    localCanvas.height,
  );
  const remote = new Viewport(
    { lo: [snap.bounds.remote[0][0], snap.bounds.remote[0][1]], hi: [snap.bounds.remote[1][0], snap.bounds.remote[1][1]] },
    remoteCanvas.width,
    remoteCanvas.height,
  );
  return { local, remote };
}

localCanvas.addEventListener("pointermove", (ev) => {
  const views = viewports();
  if (!views) return;
  const rect = localCanvas.getBoundingClientRect();
  if (cursor.moveTo(views.local, ev.clientX - rect.left, ev.clientY - rect.top)) {
    throttle.offer(cursor.frame(performance.now() / 1000), performance.now());
  }
});

localCanvas.addEventListener(
  "wheel",
  (ev) => {
    ev.preventDefault();
    cursor.spin(ev.deltaY);
    if (cursor.inside) {
      throttle.offer(cursor.frame(performance.now() / 1000), performance.now());
    }
  },
  { passive: false },
);

window.addEventListener("keydown", (ev) => {
  if (ev.key === "l" || ev.key === "L") {
    live = !live;
    client.setLive(live);
  }
  if (ev.key === "g" || ev.key === "G") {
    showGrid = !showGrid;
  }
});

function render(): void {
  const views = viewports();
  const connected = client.state === "open";
  client.tick();
  throttle.poll(performance.now());
  if (views && client.snapshot) {
    if (cursor.inside) localTrail.push(cursor.x, cursor.y);
    const mapped = client.lastMapped;
    if (mapped) remoteTrail.push(mapped.pose.position[0], mapped.pose.position[1]);
    const lctx = localCanvas.getContext("2d")!;
    const rctx = remoteCanvas.getContext("2d")!;
    drawPane(lctx, views.local, client.snapshot.objects_local, {
      title: `local workspace (${scenario})`,
      connected,
      trail: localTrail,
      marker: cursor.inside ? cursor.pose() : null,
      grid: showGrid && grid ? grid : null,
      gridSide: "source",
    });
    drawPane(rctx, views.remote, client.snapshot.objects_remote, {
      title: `remote workspace (${backend})`,
      connected,
      trail: remoteTrail,
      marker: mapped ? mapped.pose : null,
      markerStale: client.stale,
      grid: showGrid && grid ? grid : null,
      gridSide: "image",
    });
    const gctx = gaugeCanvas.getContext("2d")!;
    drawGauge(gctx, gaugeCanvas.width, gaugeCanvas.height, live && client.lastSim ? client.lastSim.force_proxy : null);
    const detJ = mapped ? ` detJ=${mapped.detJ.toFixed(3)}` : "";
    const err = client.lastError ? ` | ${client.lastError.code}: ${client.lastError.msg}` : "";
    statusLine.textContent = `${connected ? "connected" : "reconnecting..."}${detJ}${err}`;
  } else {
    statusLine.textContent = connected ? "waiting for snapshot..." : "connecting...";
  }
  requestAnimationFrame(render);
}

requestAnimationFrame(render);
