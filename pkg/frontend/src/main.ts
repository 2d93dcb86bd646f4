/**
 * App assembly: prompt panel, DSL editors with schema-driven validation and
 * autocomplete, viewport with scrubber, refine panel with history sidebar.
 */

import { ApiClient } from "./api.js";
import { DslGrammar, serializeProgram } from "./dsl.js";
import { SessionState } from "./state.js";
import { ApiError, DEFAULT_INTRINSICS, ProgramJson } from "./types.js";
import { Viewport } from "./viewport.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

class App {
  private readonly api = new ApiClient("");
  private readonly state = new SessionState();
  private grammar: DslGrammar | null = null;
  private viewport!: Viewport;
  private playTimer: number | null = null;
  private inflight = false;
  private queued: (() => void) | null = null;

  // panel elements
  private banner!: HTMLElement;
  private promptBox!: HTMLTextAreaElement;
  private planButton!: HTMLButtonElement;
  private objEditor!: HTMLTextAreaElement;
  private camEditor!: HTMLTextAreaElement;
  private objErrors!: HTMLElement;
  private camErrors!: HTMLElement;
  private suggestions!: HTMLElement;
  private captionLine!: HTMLElement;
  private applyButton!: HTMLButtonElement;
  private refineBox!: HTMLInputElement;
  private refineButton!: HTMLButtonElement;
  private refineStatus!: HTMLElement;
  private historyList!: HTMLElement;
  private scrubber!: HTMLInputElement;
  private frameLabel!: HTMLElement;

  async start(root: HTMLElement): Promise<void> {
    this.buildLayout(root);
    try {
      const schema = await this.api.schema();
      this.grammar = new DslGrammar(schema);
      this.setOnline(true);
    } catch {
      this.setOnline(false);
    }
  }

  private setOnline(online: boolean): void {
    this.banner.style.display = online ? "none" : "block";
    for (const b of [this.planButton, this.applyButton, this.refineButton]) {
      b.disabled = !online;
    }
  }

  private buildLayout(root: HTMLElement): void {
    this.banner = el("div", { class: "banner" },
      "service offline - start it with: cinemotion serve");
    root.appendChild(this.banner);

    const main = el("div", { class: "columns" });
    root.appendChild(main);

    // left: prompt + editors + refine + history
    const left = el("div", { class: "panel" });
    main.appendChild(left);

    left.appendChild(el("h2", {}, "prompt"));
    this.promptBox = el("textarea", {
      rows: "3",
      placeholder: "the car drives forward while the camera orbits it",
    });
    left.appendChild(this.promptBox);
    this.planButton = el("button", {}, "plan");
    this.planButton.onclick = () => this.serialized(() => this.runPlan());
    left.appendChild(this.planButton);
    this.promptBox.oninput = () => {
      this.planButton.disabled = !this.promptBox.value.trim() || !this.grammar;
    };
    this.captionLine = el("div", { class: "caption" });
    left.appendChild(this.captionLine);

    left.appendChild(el("h2", {}, "programs"));
    this.objEditor = el("textarea", { rows: "2", spellcheck: "false" });
    this.camEditor = el("textarea", { rows: "2", spellcheck: "false" });
    this.objErrors = el("div", { class: "errors" });
    this.camErrors = el("div", { class: "errors" });
    this.suggestions = el("div", { class: "suggestions" });
    left.appendChild(el("label", {}, "object"));
    left.appendChild(this.objEditor);
    left.appendChild(this.objErrors);
    left.appendChild(el("label", {}, "camera"));
    left.appendChild(this.camEditor);
    left.appendChild(this.camErrors);
    left.appendChild(this.suggestions);
    this.applyButton = el("button", {}, "compile");
    this.applyButton.onclick = () => this.serialized(() => this.applyEditors());
    left.appendChild(this.applyButton);
    for (const [editor, role] of [
      [this.objEditor, "object"],
      [this.camEditor, "camera"],
    ] as const) {
      editor.oninput = () => this.onEditorInput(editor, role);
    }

    left.appendChild(el("h2", {}, "refine"));
    this.refineBox = el("input", {
      type: "text",
      placeholder: "make it counterclockwise",
    });
    left.appendChild(this.refineBox);
    this.refineButton = el("button", {}, "apply");
    this.refineButton.onclick = () => this.serialized(() => this.runRefine());
    left.appendChild(this.refineButton);
    this.refineStatus = el("div", { class: "status" });
    left.appendChild(this.refineStatus);

    left.appendChild(el("h2", {}, "history"));
    this.historyList = el("div", { class: "history" });
    left.appendChild(this.historyList);

    // right: viewport + controls
    const right = el("div", { class: "panel wide" });
    main.appendChild(right);
    const canvas = el("canvas", { width: "800", height: "450" });
    right.appendChild(canvas);
    this.viewport = new Viewport(canvas, this.state, DEFAULT_INTRINSICS);

    const controls = el("div", { class: "controls" });
    right.appendChild(controls);
    this.scrubber = el("input", { type: "range", min: "0", max: "20", value: "0" });
    this.scrubber.oninput = () => {
      this.state.setPlayhead(Number(this.scrubber.value));
      this.frameLabel.textContent = `frame ${this.state.playhead}`;
      this.viewport.draw();
    };
    controls.appendChild(this.scrubber);
    this.frameLabel = el("span", { class: "frame-label" }, "frame 0");
    controls.appendChild(this.frameLabel);

    const playButton = el("button", {}, "play");
    playButton.onclick = () => this.togglePlay(playButton);
    controls.appendChild(playButton);

    const modeButton = el("button", {}, "camera view");
    modeButton.onclick = () => {
      this.state.view.mode = this.state.view.mode === "orbit" ? "camera" : "orbit";
      modeButton.textContent = this.state.view.mode === "orbit" ? "camera view" : "orbit view";
      this.viewport.draw();
    };
    controls.appendChild(modeButton);

    const overlayButton = el("button", {}, "overlay");
    overlayButton.onclick = () => this.serialized(() => this.toggleOverlay(overlayButton));
    controls.appendChild(overlayButton);

    const exportButton = el("button", {}, "export session");
    exportButton.onclick = () => this.downloadSession();
    controls.appendChild(exportButton);

    canvas.addEventListener("pointermove", (ev) => {
      if (ev.buttons !== 1 || this.state.view.mode !== "orbit") return;
      this.state.view.azimuthDeg += ev.movementX * 0.5;
      this.state.view.elevationDeg = Math.min(
        85, Math.max(-85, this.state.view.elevationDeg + ev.movementY * 0.4));
      this.viewport.draw();
    });
    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.state.view.distance = Math.min(
        60, Math.max(2, this.state.view.distance * (ev.deltaY > 0 ? 1.1 : 0.9)));
      this.viewport.draw();
    });

    this.viewport.draw();
  }

  /** Plan/refine calls run one at a time; the latest queued action wins. */
  private serialized(action: () => Promise<void>): void {
    if (this.inflight) {
      this.queued = () => this.serialized(action);
      return;
    }
    this.inflight = true;
    action()
      .catch((err) => this.showError(err))
      .finally(() => {
        this.inflight = false;
        const next = this.queued;
        this.queued = null;
        if (next) next();
      });
  }

  private showError(err: unknown): void {
    const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.refineStatus.textContent = message;
    if (err instanceof ApiError && err.status === 0) this.setOnline(false);
  }

  private onEditorInput(editor: HTMLTextAreaElement, role: "object" | "camera"): void {
    if (!this.grammar) return;
    const target = role === "object" ? this.objErrors : this.camErrors;
    const result = this.grammar.validate(editor.value, role);
    target.textContent = result.ok
      ? ""
      : result.errors.map((e) => `tag ${e.tagIndex + 1}: ${e.message}`).join("; ");
    editor.classList.toggle("invalid", !result.ok);
    const options = this.grammar.complete(editor.value, role);
    this.suggestions.textContent = options.length ? options.slice(0, 12).join("  ") : "";
    this.applyButton.disabled =
      !this.grammar.validate(this.objEditor.value, "object").ok ||
      !this.grammar.validate(this.camEditor.value, "camera").ok;
  }

  private async runPlan(): Promise<void> {
    const plan = await this.api.plan(this.promptBox.value);
    this.objEditor.value = plan.dsl_obj;
    this.camEditor.value = plan.dsl_cam;
    this.captionLine.textContent =
      `object: ${plan.decomposition.object || "(static)"} | camera: ${plan.decomposition.camera}`;
    await this.compileAndCommit("plan: " + this.promptBox.value, [],
      plan.program_obj, plan.program_cam);
  }

  private async applyEditors(): Promise<void> {
    if (!this.grammar) return;
    const obj = this.grammar.validate(this.objEditor.value, "object");
    const cam = this.grammar.validate(this.camEditor.value, "camera");
    if (!obj.ok || !cam.ok || !obj.program || !cam.program) return;
    await this.compileAndCommit("edit programs", [], obj.program, cam.program);
  }

  private async runRefine(): Promise<void> {
    if (!this.state.programObj || !this.state.programCam) return;
    const result = await this.api.refine(
      this.state.programObj, this.state.programCam, this.refineBox.value);
    if (result.noop) {
      this.refineStatus.textContent = "no change applied (instruction not understood)";
      return;
    }
    this.refineStatus.textContent = result.diff
      .map((d) => `${d.key}: ${d.old} -> ${d.new}`)
      .join(", ");
    this.objEditor.value = result.dsl_obj;
    this.camEditor.value = result.dsl_cam;
    await this.compileAndCommit(this.refineBox.value, result.diff,
      result.program_obj, result.program_cam);
  }

  private async compileAndCommit(
    instruction: string,
    diff: { tag: number; key: string; old: string | null; new: string | null }[],
    programObj: ProgramJson,
    programCam: ProgramJson,
  ): Promise<void> {
    const scene = await this.api.compile(programObj, programCam);
    this.state.commit(instruction, diff, programObj, programCam, scene);
    this.viewport.serverFrames = null;
    this.scrubber.max = String(this.state.frameCount() - 1);
    this.renderHistory();
    this.viewport.draw();
  }

  private renderHistory(): void {
    this.historyList.textContent = "";
    this.state.history.forEach((entry, i) => {
      const row = el("button", { class: "history-row" },
        `${i}. ${entry.instruction}` +
        (entry.diff.length ? ` [${entry.diff.map((d) => d.key).join(",")}]` : ""));
      row.onclick = () => {
        this.state.restore(i);
        if (this.grammar) {
          this.objEditor.value = this.state.programObj
            ? serializeProgram(this.state.programObj, this.grammar) : "";
          this.camEditor.value = this.state.programCam
            ? serializeProgram(this.state.programCam, this.grammar) : "";
        }
        this.viewport.serverFrames = null;
        this.viewport.draw();
      };
      this.historyList.appendChild(row);
    });
  }

  private async toggleOverlay(button: HTMLButtonElement): Promise<void> {
    if (!this.state.scene) return;
    this.state.view.overlay = !this.state.view.overlay;
    button.classList.toggle("active", this.state.view.overlay);
    if (this.state.view.overlay && !this.viewport.serverFrames) {
      try {
        const rendered = await this.api.renderPolylines(this.state.scene);
        this.viewport.serverFrames = rendered.frames.map((f) => f.polylines);
      } catch (err) {
        // degrade to the locally projected view
        this.state.view.overlay = false;
        this.showError(err);
      }
    }
    this.viewport.draw();
  }

  private togglePlay(button: HTMLButtonElement): void {
    if (this.playTimer !== null) {
      window.clearInterval(this.playTimer);
      this.playTimer = null;
      button.textContent = "play";
      return;
    }
    const frames = this.state.frameCount();
    const interval = (this.state.view.playbackSeconds * 1000) / frames;
    button.textContent = "pause";
    this.playTimer = window.setInterval(() => {
      this.state.setPlayhead((this.state.playhead + 1) % frames);
      this.scrubber.value = String(this.state.playhead);
      this.frameLabel.textContent = `frame ${this.state.playhead}`;
      this.viewport.draw();
    }, interval);
  }

  private downloadSession(): void {
    const blob = new Blob([this.state.exportJson()], { type: "application/json" });
    const link = el("a", {
      href: URL.createObjectURL(blob),
      download: "cinemotion-session.json",
    });
    link.click();
    URL.revokeObjectURL(link.href);
  }
}

const root = document.getElementById("app");
if (root) {
  void new App().start(root);
}
