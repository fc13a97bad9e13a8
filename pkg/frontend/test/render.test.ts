import { describe, expect, it } from "vitest";
import { quatAboutZ } from "../src/cursor";
import { arrowSegment, headingAngle, parseGridCsv } from "../src/render";
import { Viewport } from "../src/viewport";

describe("render geometry", () => {
  it("headingAngle recovers planar rotation angles", () => {
    for (const a of [0, 0.4, Math.PI / 2, -1.2]) {
      expect(headingAngle(quatAboutZ(a))).toBeCloseTo(a, 10);
    }
  });

  it("arrowSegment points along +x for the identity quaternion", () => {
    const view = new Viewport({ lo: [0, 0], hi: [1, 1] }, 400, 400);
    const [x0, y0, x1, y1] = arrowSegment(
      view,
      { position: [0.5, 0.5, 0], quaternion: [1, 0, 0, 0] },
      0.1,
    );
    expect(x1).toBeGreaterThan(x0);
    expect(y1).toBeCloseTo(y0, 9);
  });

  it("arrowSegment flips y for upward-pointing rotations", () => {
    const view = new Viewport({ lo: [0, 0], hi: [1, 1] }, 400, 400);
    const [, y0, , y1] = arrowSegment(
      view,
      { position: [0.5, 0.5, 0], quaternion: quatAboutZ(Math.PI / 2) },
      0.1,
    );
    expect(y1).toBeLessThan(y0); // +y world is up, canvas y grows down
  });

  it("parseGridCsv reads the grid export columns", () => {
    const csv = "sx,sy,sz,ix,iy,iz,rx,ry,rz,detJ\n0,0,0,0.1,0.2,0,0,0,0,1\n1,1,0,1.05,1,0,0,0,0,0.9\n";
    const grid = parseGridCsv(csv);
    expect(grid.length).toBe(2);
    expect(grid[0]).toEqual({ sx: 0, sy: 0, ix: 0.1, iy: 0.2 });
  });

  it("parseGridCsv tolerates unknown headers", () => {
    expect(parseGridCsv("a,b\n1,2\n")).toEqual([]);
  });
});
