/** World <-> pixel transform for one pane, preserving aspect ratio. */

export interface Bounds {
  lo: [number, number];
  hi: [number, number];
}

export class Viewport {
  readonly scale: number; // pixels per meter (same on both axes)
  readonly cx: number;
  readonly cy: number;
  readonly width: number;
  readonly height: number;

  constructor(bounds: Bounds, width: number, height: number, margin = 20) {
    this.width = width;
    this.height = height;
    const spanX = Math.max(bounds.hi[0] - bounds.lo[0], 1e-9);
    const spanY = Math.max(bounds.hi[1] - bounds.lo[1], 1e-9);
    this.scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
    this.cx = 0.5 * (bounds.lo[0] + bounds.hi[0]);
    this.cy = 0.5 * (bounds.lo[1] + bounds.hi[1]);
  }

  /** World (x, y) to canvas pixel; canvas y grows downward. */
  toPixel(x: number, y: number): [number, number] {
    return [
      this.width / 2 + (x - this.cx) * this.scale,
      this.height / 2 - (y - this.cy) * this.scale,
    ];
  }

  /** Canvas pixel back to world (x, y); exact inverse of toPixel. */
  toWorld(px: number, py: number): [number, number] {
    return [
      this.cx + (px - this.width / 2) / this.scale,
      this.cy - (py - this.height / 2) / this.scale,
    ];
  }

  metersToPixels(d: number): number {
    return d * this.scale;
  }
}
