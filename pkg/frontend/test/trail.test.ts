import { describe, expect, it } from "vitest";
import { TrailBuffer } from "../src/trail";

describe("TrailBuffer", () => {
  it("stores points in order", () => {
    const t = new TrailBuffer(10);
    t.push(1, 2);
    t.push(3, 4);
    expect(t.length).toBe(2);
    expect(t.at(0)).toEqual([1, 2]);
    expect(t.at(1)).toEqual([3, 4]);
  });

  it("is bounded: overwrites the oldest beyond capacity", () => {
    const t = new TrailBuffer(3);
    for (let i = 0; i < 7; i++) t.push(i, i);
    expect(t.length).toBe(3);
    expect(t.at(0)).toEqual([4, 4]);
    expect(t.at(2)).toEqual([6, 6]);
  });

  it("skips exact duplicates (no motion, no new points)", () => {
    const t = new TrailBuffer(10);
    t.push(1, 1);
    t.push(1, 1);
    t.push(1, 1);
    expect(t.length).toBe(1);
  });

  it("default capacity is 2000", () => {
    expect(new TrailBuffer().capacity).toBe(2000);
  });

  it("clear resets", () => {
    const t = new TrailBuffer(5);
    t.push(1, 1);
    t.clear();
    expect(t.length).toBe(0);
  });
});
