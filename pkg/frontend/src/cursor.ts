/** Pointer-driven operator pose: planar position plus wheel-controlled
 * rotation about z, emitted as position + unit quaternion. */

import { WirePose } from "./protocol";
import { Viewport } from "./viewport";

export const WHEEL_RADIANS_PER_NOTCH = Math.PI / 36; // 5 degrees

export function quatAboutZ(angle: number): [number, number, number, number] {
  return [Math.cos(angle / 2), 0, 0, Math.sin(angle / 2)];
}

export class CursorState {
  x = 0;
  y = 0;
  z = 0;
  angle = 0; // accumulated planar rotation, radians
  seq = 0;
  inside = false;

  /** Update from a pointer position in pane pixels; false if outside. */
  moveTo(view: Viewport, px: number, py: number): boolean {
    if (px < 0 || py < 0 || px > view.width || py > view.height) {
      this.inside = false;
      return false;
    }
    [this.x, this.y] = view.toWorld(px, py);
    this.inside = true;
    return true;
  }

  /** Accumulate wheel rotation (deltaY in notches of 100, browser-style). */
  spin(deltaY: number): void {
    this.angle += (-deltaY / 100) * WHEEL_RADIANS_PER_NOTCH;
  }

  pose(): WirePose {
    return {
      position: [this.x, this.y, this.z],
      quaternion: quatAboutZ(this.angle),
    };
  }

  /** Sequence-stamped pose frame for the wire. */
  frame(tSeconds: number): { type: "pose"; seq: number; t: number; pose: WirePose } {
    return { type: "pose", seq: this.seq++, t: tSeconds, pose: this.pose() };
  }
}
