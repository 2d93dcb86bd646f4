/**
 * Session state: current programs, compiled scene, playhead, and a lossless
 * history of every accepted change.  Programs mutate only through validated
 * editor parses or server responses; history restore returns exact snapshots.
 */

import { DiffEntry, ProgramJson, SceneJson } from "./types.js";

export interface HistoryEntry {
  instruction: string;
  diff: DiffEntry[];
  programObj: ProgramJson;
  programCam: ProgramJson;
  scene: SceneJson;
}

export interface ViewSettings {
  mode: "orbit" | "camera";
  overlay: boolean;
  azimuthDeg: number;
  elevationDeg: number;
  distance: number;
  playbackSeconds: number;
}

function deepClone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

export class SessionState {
  programObj: ProgramJson | null = null;
  programCam: ProgramJson | null = null;
  scene: SceneJson | null = null;
  playhead = 0;
  history: HistoryEntry[] = [];
  view: ViewSettings = {
    mode: "orbit",
    overlay: false,
    azimuthDeg: 35,
    elevationDeg: 25,
    distance: 14,
    playbackSeconds: 3,
  };

  frameCount(): number {
    return this.scene ? this.scene.camera.frames.length : 21;
  }

  /** Record an accepted change; snapshots are deep copies, never references. */
  commit(
    instruction: string,
    diff: DiffEntry[],
    programObj: ProgramJson,
    programCam: ProgramJson,
    scene: SceneJson,
  ): HistoryEntry {
    this.programObj = deepClone(programObj);
    this.programCam = deepClone(programCam);
    this.scene = deepClone(scene);
    const entry: HistoryEntry = {
      instruction,
      diff: deepClone(diff),
      programObj: deepClone(programObj),
      programCam: deepClone(programCam),
      scene: deepClone(scene),
    };
    this.history.push(entry);
    return entry;
  }

  /** Restore a prior snapshot; the restored scene equals the stored one. */
  restore(index: number): HistoryEntry {
    const entry = this.history[index];
    if (!entry) throw new Error(`no history entry ${index}`);
    this.programObj = deepClone(entry.programObj);
    this.programCam = deepClone(entry.programCam);
    this.scene = deepClone(entry.scene);
    if (this.playhead >= this.frameCount()) this.playhead = 0;
    return entry;
  }

  setPlayhead(frame: number): void {
    const last = this.frameCount() - 1;
    this.playhead = Math.min(Math.max(0, Math.round(frame)), last);
  }

  /** Session export document (the only persistence the app offers). */
  exportJson(): string {
    return JSON.stringify(
      {
        version: "1.0",
        program_obj: this.programObj,
        program_cam: this.programCam,
        scene: this.scene,
        history: this.history,
        view: this.view,
      },
      null,
      2,
    );
  }

  static importJson(text: string): SessionState {
    const data = JSON.parse(text) as {
      program_obj: ProgramJson | null;
      program_cam: ProgramJson | null;
      scene: SceneJson | null;
      history?: HistoryEntry[];
      view?: ViewSettings;
    };
    const state = new SessionState();
    state.programObj = data.program_obj;
    state.programCam = data.program_cam;
    state.scene = data.scene;
    state.history = data.history ?? [];
    if (data.view) state.view = data.view;
    return state;
  }
}
