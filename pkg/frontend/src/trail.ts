/** Bounded ring buffer of 2D points for end-effector trails. */

export class TrailBuffer {
  private xs: Float64Array;
  private ys: Float64Array;
  private head = 0;
  private count = 0;

  constructor(readonly capacity = 2000) {
    this.xs = new Float64Array(capacity);
    this.ys = new Float64Array(capacity);
  }

  get length(): number {
    return this.count;
  }

  /** Append a point; drops the oldest when full, skips exact repeats. */
  push(x: number, y: number): void {
    if (this.count > 0) {
      const lastIdx = (this.head + this.count - 1) % this.capacity;
      if (this.xs[lastIdx] === x && this.ys[lastIdx] === y) return;
    }
    if (this.count < this.capacity) {
      const idx = (this.head + this.count) % this.capacity;
      this.xs[idx] = x;
      this.ys[idx] = y;
      this.count += 1;
    } else {
      this.xs[this.head] = x;
      this.ys[this.head] = y;
      this.head = (this.head + 1) % this.capacity;
    }
  }

  at(i: number): [number, number] {
    const idx = (this.head + i) % this.capacity;
    return [this.xs[idx], this.ys[idx]];
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }
}
