import { describe, expect, it } from "vitest";
import { CursorState, WHEEL_RADIANS_PER_NOTCH, quatAboutZ } from "../src/cursor";
import { Viewport } from "../src/viewport";

const bounds = { lo: [0.0, 0.0] as [number, number], hi: [1.0, 1.0] as [number, number] };

describe("CursorState", () => {
  it("pane center pixel maps to the workspace center", () => {
    const view = new Viewport(bounds, 460, 460);
    const c = new CursorState();
    expect(c.moveTo(view, 230, 230)).toBe(true);
    expect(c.x).toBeCloseTo(0.5, 12);
    expect(c.y).toBeCloseTo(0.5, 12);
  });

  it("ignores events outside the pane", () => {
    const view = new Viewport(bounds, 460, 460);
    const c = new CursorState();
    expect(c.moveTo(view, -5, 100)).toBe(false);
    expect(c.moveTo(view, 100, 470)).toBe(false);
    expect(c.inside).toBe(false);
  });

  it("wheel deltas accumulating to 90 degrees give the z quarter-turn quaternion", () => {
    const c = new CursorState();
    const notches = Math.PI / 2 / WHEEL_RADIANS_PER_NOTCH;
    for (let i = 0; i < notches; i++) c.spin(-100); // scroll up = positive rotation
    const [w, x, y, z] = c.pose().quaternion;
    expect(w).toBeCloseTo(Math.SQRT2 / 2, 10);
    expect(x).toBeCloseTo(0, 12);
    expect(y).toBeCloseTo(0, 12);
    expect(z).toBeCloseTo(Math.SQRT2 / 2, 10);
  });

  it("stamps strictly increasing sequence numbers", () => {
    const c = new CursorState();
    const a = c.frame(0.0);
    const b = c.frame(0.016);
    expect(b.seq).toBe(a.seq + 1);
    expect(a.type).toBe("pose");
  });

  it("quatAboutZ is unit norm", () => {
    const [w, x, y, z] = quatAboutZ(1.234);
    expect(w * w + x * x + y * y + z * z).toBeCloseTo(1, 12);
  });
});
