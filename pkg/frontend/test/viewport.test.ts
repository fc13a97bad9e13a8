import { describe, expect, it } from "vitest";
import { Viewport } from "../src/viewport";

const bounds = { lo: [0.0, 0.1] as [number, number], hi: [1.0, 0.9] as [number, number] };

describe("Viewport", () => {
  it("maps the workspace center to the canvas center", () => {
    const v = new Viewport(bounds, 400, 400);
    const [px, py] = v.toPixel(0.5, 0.5);
    expect(px).toBeCloseTo(200);
    expect(py).toBeCloseTo(200);
  });

  it("inverts exactly: pane center pixel -> workspace center", () => {
    const v = new Viewport(bounds, 460, 460);
    const [wx, wy] = v.toWorld(230, 230);
    expect(wx).toBeCloseTo(0.5, 12);
    expect(wy).toBeCloseTo(0.5, 12);
  });

  it("round-trips arbitrary points", () => {
    const v = new Viewport(bounds, 460, 320);
    for (const [x, y] of [[0.12, 0.4], [0.9, 0.88], [0.5, 0.1]]) {
      const [px, py] = v.toPixel(x, y);
      const [wx, wy] = v.toWorld(px, py);
      expect(wx).toBeCloseTo(x, 12);
      expect(wy).toBeCloseTo(y, 12);
    }
  });

  it("preserves aspect: one scale for both axes", () => {
    const v = new Viewport(bounds, 800, 300);
    const [x0] = v.toPixel(0.0, 0.5);
    const [x1] = v.toPixel(1.0, 0.5);
    const [, y0] = v.toPixel(0.5, 0.1);
    const [, y1] = v.toPixel(0.5, 0.9);
    const sx = (x1 - x0) / 1.0;
    const sy = (y0 - y1) / 0.8; // canvas y is flipped
    expect(sx).toBeCloseTo(sy, 9);
  });

  it("flips the y axis (canvas y grows downward)", () => {
    const v = new Viewport(bounds, 400, 400);
    const [, lowY] = v.toPixel(0.5, 0.1);
    const [, highY] = v.toPixel(0.5, 0.9);
    expect(highY).toBeLessThan(lowY);
  });
});
