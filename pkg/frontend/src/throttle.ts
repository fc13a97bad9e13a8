/** Freshest-wins send throttle: at most one frame per tick period.
 *
 * Pointer events arrive at display rate (or faster); only the most recent
 * pose may go out each tick, everything older is silently replaced.
 */

export class TickThrottle<T> {
  private pending: T | null = null;
  private lastSend = -Infinity;
  readonly periodMs: number;

  constructor(tickHz: number, private send: (item: T) => void) {
    this.periodMs = 1000 / tickHz;
  }

  /** Offer an item; returns true if it was sent immediately. */
  offer(item: T, nowMs: number): boolean {
    if (nowMs - this.lastSend >= this.periodMs) {
      this.lastSend = nowMs;
      this.pending = null;
      this.send(item);
      return true;
    }
    this.pending = item; // replaces anything waiting: freshest wins
    return false;
  }

  /** Flush the pending item if the tick period has elapsed. */
  poll(nowMs: number): void {
    if (this.pending !== null && nowMs - this.lastSend >= this.periodMs) {
      const item = this.pending;
      this.pending = null;
      this.lastSend = nowMs;
      this.send(item);
    }
  }

  get hasPending(): boolean {
    return this.pending !== null;
  }
}
