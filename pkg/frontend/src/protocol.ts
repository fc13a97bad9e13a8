/** Wire frames exchanged with the bridge service.
 *
 * Positions are [x, y, z] meters, quaternions [w, x, y, z] unit-norm.
 * JSON numbers survive the round trip bit-for-bit (both ends parse the
 * shortest representation back to the same IEEE-754 double), which is what
 * lets the replay test compare mapped poses exactly.
 */

export interface WirePose {
  position: [number, number, number];
  quaternion: [number, number, number, number];
}

export interface WireObject extends WirePose {
  id: number;
}

export interface BindFrame {
  type: "bind";
  scenario: string;
  backend: string;
}

export interface PoseFrame {
  type: "pose";
  seq: number;
  t: number;
  pose: WirePose;
}

export interface ModeFrame {
  type: "mode";
  live: boolean;
}

export interface SnapshotFrame {
  type: "snapshot";
  objects_local: WireObject[];
  objects_remote: WireObject[];
  bounds: { local: [number[], number[]]; remote: [number[], number[]] };
}

export interface MappedFrame {
  type: "mapped";
  seq: number;
  pose: WirePose;
  detJ: number;
}

export interface SimFrame {
  type: "sim";
  t: number;
  local: WirePose;
  remote: WirePose;
  force_proxy: number;
}

export interface ErrorFrame {
  type: "error";
  code: string;
  msg: string;
}

export type ServerFrame = SnapshotFrame | MappedFrame | SimFrame | ErrorFrame;
export type ClientFrame = BindFrame | PoseFrame | ModeFrame;

export function encodeFrame(frame: ClientFrame): string {
  return JSON.stringify(frame);
}

export function decodeFrame(text: string): ServerFrame {
  const obj = JSON.parse(text);
  if (
    obj !== null &&
    typeof obj === "object" &&
    ["snapshot", "mapped", "sim", "error"].includes(obj.type)
  ) {
    return obj as ServerFrame;
  }
  throw new Error(`unknown server frame: ${text.slice(0, 80)}`);
}
