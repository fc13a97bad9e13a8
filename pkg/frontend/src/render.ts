/** Canvas drawing for the two workspace panes, trails, grid overlay, and
 * the force gauge. Pure functions of (context, viewport, state) so the
 * geometry is unit-testable without a DOM. */

import { SnapshotFrame, WireObject, WirePose } from "./protocol";
import { TrailBuffer } from "./trail";
import { Viewport } from "./viewport";

export const OBJECT_COLORS = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0"];

/** Planar heading angle of a quaternion's rotated x-axis (for arrows). */
export function headingAngle(q: [number, number, number, number]): number {
  const [w, x, y, z] = q;
  // first column of the rotation matrix: R00 = 1-2(y^2+z^2), R10 = 2(xy+wz)
  return Math.atan2(2 * (x * y + w * z), 1 - 2 * (y * y + z * z));
}

export function arrowSegment(
  view: Viewport,
  pose: WirePose,
  lengthM: number,
): [number, number, number, number] {
  const [px, py] = view.toPixel(pose.position[0], pose.position[1]);
  const a = headingAngle(pose.quaternion);
  const len = view.metersToPixels(lengthM);
  return [px, py, px + len * Math.cos(a), py - len * Math.sin(a)];
}

export interface GridPoint {
  sx: number;
  sy: number;
  ix: number;
  iy: number;
}

export function drawPane(
  ctx: CanvasRenderingContext2D,
  view: Viewport,
  objects: WireObject[],
  opts: {
    title: string;
    connected: boolean;
    trail?: TrailBuffer;
    marker?: WirePose | null;
    markerStale?: boolean;
    grid?: GridPoint[] | null;
    gridSide?: "source" | "image";
  },
): void {
  ctx.save();
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = opts.connected ? "#fafafa" : "#d8d8d8";
  ctx.fillRect(0, 0, view.width, view.height);

  if (opts.grid) {
    ctx.strokeStyle = "#c4d3e0";
    ctx.lineWidth = 1;
    for (const p of opts.grid) {
      const [gx, gy] = opts.gridSide === "image" ? [p.ix, p.iy] : [p.sx, p.sy];
      const [px, py] = view.toPixel(gx, gy);
      ctx.strokeRect(px - 1, py - 1, 2, 2);
    }
  }

  if (opts.trail && opts.trail.length > 1) {
    ctx.strokeStyle = opts.connected ? "#999" : "#bbb";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let i = 0; i < opts.trail.length; i++) {
      const [x, y] = opts.trail.at(i);
      const [px, py] = view.toPixel(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();
  }

  const side = view.metersToPixels(0.045);
  objects.forEach((obj, i) => {
    const [px, py] = view.toPixel(obj.position[0], obj.position[1]);
    ctx.fillStyle = OBJECT_COLORS[i % OBJECT_COLORS.length];
    ctx.fillRect(px - side / 2, py - side / 2, side, side);
    const [, , ax, ay] = arrowSegment(view, obj, 0.06);
    ctx.strokeStyle = ctx.fillStyle;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(ax, ay);
    ctx.stroke();
    ctx.fillStyle = "#333";
    ctx.font = "11px sans-serif";
    ctx.fillText(String(obj.id), px + side / 2 + 3, py - side / 2);
  });

  if (opts.marker) {
    const [px, py] = view.toPixel(opts.marker.position[0], opts.marker.position[1]);
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, 2 * Math.PI);
    ctx.fillStyle = opts.markerStale ? "rgba(40,40,40,0.3)" : "#222";
    ctx.fill();
    const [, , ax, ay] = arrowSegment(view, opts.marker, 0.07);
    ctx.strokeStyle = opts.markerStale ? "rgba(40,40,40,0.3)" : "#222";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(ax, ay);
    ctx.stroke();
    if (opts.markerStale) {
      ctx.fillStyle = "#a33";
      ctx.font = "12px sans-serif";
      ctx.fillText("stale", px + 10, py + 4);
    }
  }

  ctx.fillStyle = "#444";
  ctx.font = "13px sans-serif";
  ctx.fillText(opts.title + (opts.connected ? "" : " (disconnected)"), 8, 16);
  ctx.restore();
}

export function drawGauge(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  force: number | null,
  maxForce = 20,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#eee";
  ctx.fillRect(0, 0, width, height);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  if (force === null) {
    ctx.fillText("force proxy: live mode off (press L)", 8, height / 2 + 4);
    return;
  }
  const frac = Math.min(force / maxForce, 1.0);
  ctx.fillStyle = frac < 0.5 ? "#3cb44b" : frac < 0.8 ? "#f58231" : "#e6194b";
  ctx.fillRect(110, 4, (width - 120) * frac, height - 8);
  ctx.fillStyle = "#444";
  ctx.fillText(`force proxy: ${force.toFixed(2)} N`, 8, height / 2 + 4);
}

export function parseGridCsv(text: string): GridPoint[] {
  const lines = text.trim().split("\n");
  const header = lines[0].split(",");
  const sx = header.indexOf("sx");
  const sy = header.indexOf("sy");
  const ix = header.indexOf("ix");
  const iy = header.indexOf("iy");
  if (sx < 0 || ix < 0) return [];
  return lines.slice(1).map((line) => {
    const v = line.split(",").map(Number);
    return { sx: v[sx], sy: v[sy], ix: v[ix], iy: v[iy] };
  });
}
