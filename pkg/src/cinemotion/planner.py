"""Natural language to motion programs, via rules or a remote LLM backend.

The object program is produced first; the camera program is then generated
with the object program in context.  Every output is re-validated against the
grammar before it leaves this module, whatever the backend replied.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources

from . import dsl
from .errors import BackendUnavailable, DslError, PlanRejected, PlanTimeout

CAMERA_WORDS = ("camera", "shot", "view", "drone", "lens", "frame", "viewpoint")

_CLAUSE_SPLIT = re.compile(r"(?:\s*;\s*|\s*,\s*|\s+while\s+|\s+and\s+|\s+as\s+|\s*\.\s*)")
_THE_NOUN = re.compile(r"\bthe\s+(\w+)")


def _load_fewshot() -> dict:
    with resources.files("cinemotion.data").joinpath("planner_fewshot.json").open("rb") as fh:
        return json.load(fh)


FEWSHOT = _load_fewshot()


@dataclass(frozen=True)
class Decomposition:
    obj_text: str
    cam_text: str

    def to_json_dict(self) -> dict:
        return {"object": self.obj_text, "camera": self.cam_text}


@dataclass(frozen=True)
class PlanRequest:
    text: str
    decomposed: Decomposition | None = None
    backend: str = "rules"


@dataclass(frozen=True)
class RemoteBackendConfig:
    endpoint: str = "http://localhost:8001/v1/chat/completions"
    model: str = "planner"
    auth_env: str = "CINEMOTION_PLANNER_TOKEN"
    timeout: float = 20.0
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise DslError("timeout must be positive")


def _clause_role(clause: str) -> str:
    lowered = clause.lower()
    if any(w in lowered for w in CAMERA_WORDS):
        return dsl.ROLE_CAMERA
    m = _THE_NOUN.search(lowered)
    if m and m.group(1) not in CAMERA_WORDS:
        return dsl.ROLE_OBJECT
    return dsl.ROLE_CAMERA  # clauses naming no subject default to the camera


def decompose(text: str) -> Decomposition:
    """Split a prompt into object-centric and camera-centric halves.

    Clause assignment is keyword-based and non-destructive: every clause lands
    in exactly one half.
    """
    clauses = [c.strip() for c in _CLAUSE_SPLIT.split(text) if c and c.strip()]
    obj_parts = [c for c in clauses if _clause_role(c) == dsl.ROLE_OBJECT]
    cam_parts = [c for c in clauses if _clause_role(c) == dsl.ROLE_CAMERA]
    return Decomposition(", ".join(obj_parts), ", ".join(cam_parts))


# --- rules backend -------------------------------------------------------------------

_STATIC_WORDS = ("static", "still", "stationary", "fixed", "parked", "in place",
                 "holds position", "does not move", "doesn't move")

_INTENSITY_NEAR = ("slightly", "a little", "gently", "slowly", "a bit")
_INTENSITY_FAR = ("far", "a lot", "quickly", "fast", "sharply", "rapidly")


def _intensity_prefix(clause: str) -> str:
    if any(w in clause for w in _INTENSITY_NEAR):
        return "near_"
    if any(w in clause for w in _INTENSITY_FAR):
        return "far_"
    return ""


def _angle_for(clause: str) -> str:
    if any(w in clause for w in _INTENSITY_NEAR):
        return "15"
    if any(w in clause for w in _INTENSITY_FAR):
        return "90"
    m = re.search(r"(\d+)\s*degree", clause)
    if m and int(m.group(1)) in dsl.ANGLE_VALUES:
        return m.group(1)
    return "30"


def _orbit_tag(clause: str) -> dsl.MotionTag:
    mods: dict[str, str] = {}
    if "counterclockwise" in clause or "anticlockwise" in clause or "counter-clockwise" in clause:
        mods["dir"] = "ccw"
    elif "clockwise" in clause:
        mods["dir"] = "cw"
    if "full circle" in clause or "360" in clause or "all the way around" in clause:
        mods["deg"] = "360"
    elif "half" in clause or "180" in clause:
        mods["deg"] = "180"
    elif "quarter" in clause:
        mods["deg"] = "90"
    if "overhead" in clause or "over the top" in clause:
        mods["plane_axis"] = "x"
    if "spiral" in clause:
        mods["spiral"] = "in_0.3" if ("in" in clause.split() or "inward" in clause) else "out_0.3"
    if "above" in clause or "aerial" in clause or "high angle" in clause:
        mods["ver"] = "aerial"
    elif "low angle" in clause:
        mods["ver"] = "low-angle"
    return dsl.MotionTag(dsl.ORBIT_TRACK, mods)


def _tail_tag(clause: str) -> dsl.MotionTag:
    mods: dict[str, str] = {}
    if "loose" in clause or "lazy" in clause or "delayed" in clause:
        mods["follow_style"] = "lazy"
    elif "soft" in clause or "slight delay" in clause:
        mods["follow_style"] = "soft"
    if "ahead" in clause or "lead" in clause or "front" in clause:
        mods["lead"] = "lead"
    if "closing in" in clause or "closes in" in clause:
        mods["dolly"] = "in_0.3"
    elif "pulling back" in clause or "pulls back" in clause:
        mods["dolly"] = "out_0.3"
    if "without looking" in clause or "without turning" in clause:
        mods["dont_look"] = "dont_look"
    if "above" in clause or "aerial" in clause:
        mods["ver"] = "aerial"
    elif "low angle" in clause:
        mods["ver"] = "low-angle"
    return dsl.MotionTag(dsl.TAIL_TRACK, mods)


def _rotation_tag(clause: str) -> dsl.MotionTag:
    mods: dict[str, str] = {}
    has_pan = "pan" in clause
    has_tilt = "tilt" in clause
    if has_pan and not has_tilt:
        mods["rot_axis"] = "pan"
    elif has_tilt and not has_pan:
        mods["rot_axis"] = "tilt"
    if "trucking right" in clause or "trucks right" in clause:
        mods["world_move_1"] = "truck_right_1.0"
    elif "trucking left" in clause or "trucks left" in clause:
        mods["world_move_1"] = "truck_left_1.0"
    elif "rising" in clause or "rises" in clause:
        mods["world_move_1"] = "pedestal_up_0.5"
    elif "descending" in clause:
        mods["world_move_1"] = "pedestal_down_0.5"
    elif "push" in clause and "in" in clause:
        mods["push"] = "in_0.3"
    elif "pull" in clause:
        mods["push"] = "out_0.3"
    return dsl.MotionTag(dsl.ROTATION_TRACK, mods)


_TRACKING_CONTEXT = ("keep", "framed", "centered", "centred", "on the subject",
                     "on the object", "watching")


def _freeform_tag(clause: str, role: str) -> dsl.MotionTag:
    mods: dict[str, str] = {}
    prefix = _intensity_prefix(clause)
    if "left" in clause and "pan" not in clause and "turn" not in clause:
        mods["t_x"] = f"{prefix}left"
    elif "right" in clause and "pan" not in clause and "turn" not in clause:
        mods["t_x"] = f"{prefix}right"
    if re.search(r"\b(up|rises?|ascends?|higher)\b", clause):
        mods["t_y"] = f"{prefix}up"
    elif re.search(r"\b(down|descends?|lower)\b", clause):
        mods["t_y"] = f"{prefix}down"
    if re.search(r"\b(forward|forwards|advances?|closer|zooms? in|zoom in|in)\b", clause) \
            and "turn" not in clause:
        mods["t_z"] = f"{prefix}in"
    elif re.search(r"\b(backward|backwards|back|away|retreats?|zooms? out|zoom out|out)\b", clause):
        mods["t_z"] = f"{prefix}out"
    if "pan" in clause or ("turn" in clause and role == dsl.ROLE_OBJECT):
        angle = _angle_for(clause)
        if "left" in clause:
            mods["yaw"] = angle
        elif "right" in clause:
            mods["yaw"] = f"-{angle}"
    if "tilt" in clause:
        angle = _angle_for(clause)
        if re.search(r"\bup\b", clause):
            mods["pitch"] = angle
            mods.pop("t_y", None)
        elif re.search(r"\bdown\b", clause):
            mods["pitch"] = f"-{angle}"
            mods.pop("t_y", None)
    if role == dsl.ROLE_CAMERA and "roll" in clause:
        angle = _angle_for(clause)
        mods["roll"] = angle if "clockwise" in clause and "counter" not in clause else f"-{angle}"
    if "tilt" in clause and "t_y" in mods:
        mods.pop("t_y")
    return dsl.MotionTag(dsl.FREE_FORM, mods)


def _rules_camera_tag(clause: str) -> dsl.MotionTag:
    lowered = clause.lower()
    if any(w in lowered for w in _STATIC_WORDS):
        return dsl.MotionTag(dsl.FREE_FORM, {})
    if "orbit" in lowered or "circle" in lowered or "revolve" in lowered:
        return _orbit_tag(lowered)
    if "follow" in lowered or "chase" in lowered or "trail" in lowered or "tail" in lowered:
        return _tail_tag(lowered)
    if ("pan" in lowered or "tilt" in lowered) and \
            any(w in lowered for w in _TRACKING_CONTEXT):
        return _rotation_tag(lowered)
    return _freeform_tag(lowered, dsl.ROLE_CAMERA)


def _rules_object_tag(clause: str) -> dsl.MotionTag:
    lowered = clause.lower()
    if any(w in lowered for w in _STATIC_WORDS):
        return dsl.MotionTag(dsl.FREE_FORM, {})
    tag = _freeform_tag(lowered, dsl.ROLE_OBJECT)
    if not tag.modifiers and re.search(r"\b(drives?|runs?|walks?|moves?|goes)\b", lowered):
        tag = dsl.MotionTag(dsl.FREE_FORM, {"t_z": "in"})
    return tag


def _rules_program(text: str, role: str) -> dsl.MotionProgram:
    clauses = [c.strip() for c in _CLAUSE_SPLIT.split(text) if c and c.strip()]
    if not clauses:
        return dsl.MotionProgram(role, (dsl.MotionTag(dsl.FREE_FORM, {}),))
    builder = _rules_camera_tag if role == dsl.ROLE_CAMERA else _rules_object_tag
    tags = tuple(builder(c) for c in clauses[:dsl.MAX_TAGS])
    return dsl.validate_program(dsl.MotionProgram(role, tags))


# --- remote backend --------------------------------------------------------------------

def _default_transport(url: str, body: dict, headers: dict, timeout: float) -> dict:
    import httpx

    try:
        response = httpx.post(url, json=body, headers=headers, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise PlanTimeout(f"planner endpoint timed out after {timeout}s") from exc
    except httpx.HTTPError as exc:
        raise BackendUnavailable(f"planner endpoint unreachable: {exc}") from exc
    if response.status_code != 200:
        raise BackendUnavailable(
            f"planner endpoint returned {response.status_code}",
            status=response.status_code)
    return response.json()


_FENCE_RE = re.compile(r"```[a-z]*\n?|```")
_LABEL_RE = re.compile(r"^(object|camera|dsl|program)\s*:\s*", re.IGNORECASE)


def extract_program_text(reply: str) -> str:
    """Pull the DSL line out of a chat reply: strip fences and labels."""
    cleaned = _FENCE_RE.sub("", reply)
    for line in cleaned.splitlines():
        line = _LABEL_RE.sub("", line.strip())
        if line:
            return line
    return ""


class RemoteBackend:
    """Chat-completions client that emits schema-validated programs.

    The transport is injectable so tests can exercise the validation gate
    without a network.
    """

    def __init__(self, config: RemoteBackendConfig | None = None, transport=None):
        self.config = config or RemoteBackendConfig()
        self.transport = transport or _default_transport

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str, system: str | None = None) -> str:
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": ([{"role": "system", "content": system}] if system else [])
            + [{"role": "user", "content": prompt}],
        }
        data = self.transport(self.config.endpoint, body, self._headers(),
                              self.config.timeout)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed planner reply: {exc}") from exc

    def _system_prompt(self, role: str) -> str:
        examples = "\n".join(
            f"text: {ex['text']}\nprogram: {ex['program']}"
            for ex in FEWSHOT["examples"] if ex["role"] == role)
        return (
            "You translate motion descriptions into a one-line motion program. "
            f"Emit a single line for the {role} role, nothing else.\n"
            f"Grammar schema:\n{dsl.schema_json()}\n\nExamples:\n{examples}"
        )

    def propose(self, text: str, role: str, context: str | None = None) -> dsl.MotionProgram:
        """One validated program; retries once with the parse error appended."""
        prompt = text if context is None else f"{context}\n{text}"
        system = self._system_prompt(role)
        reply = self.complete(prompt, system)
        try:
            return dsl.parse_program(extract_program_text(reply), role)
        except DslError as first_error:
            retry_prompt = (f"{prompt}\n\nYour previous reply was rejected: "
                            f"{first_error.message}. Reply with one valid program line.")
            reply = self.complete(retry_prompt, system)
            try:
                return dsl.parse_program(extract_program_text(reply), role)
            except DslError as second_error:
                raise PlanRejected(
                    f"remote planner produced invalid programs twice: "
                    f"{second_error.message}", role=role) from second_error


# --- public entry points ------------------------------------------------------------------

@dataclass
class PlannerGateway:
    """Facade over the rules and remote backends."""

    remote: RemoteBackend | None = None
    default_backend: str = "rules"

    def plan(self, request: PlanRequest) -> tuple[dsl.MotionProgram, dsl.MotionProgram]:
        if not request.text or not request.text.strip():
            raise DslError("empty prompt")
        parts = request.decomposed or decompose(request.text)
        backend = request.backend or self.default_backend
        if backend == "rules":
            program_obj = _rules_program(parts.obj_text, dsl.ROLE_OBJECT)
            program_cam = _rules_program(parts.cam_text, dsl.ROLE_CAMERA)
            return program_obj, program_cam
        if backend == "remote":
            if self.remote is None:
                raise BackendUnavailable("no remote backend configured")
            program_obj = self.remote.propose(parts.obj_text or "the object stays in place",
                                              dsl.ROLE_OBJECT)
            context = ("object program: "
                       f"{dsl.serialize_program(program_obj)}\nobject text: {parts.obj_text}")
            program_cam = self.remote.propose(parts.cam_text or request.text,
                                              dsl.ROLE_CAMERA, context)
            return program_obj, program_cam
        raise DslError(f"unknown backend {backend!r}", backend=backend)

    def refine(self, program_obj: dsl.MotionProgram, program_cam: dsl.MotionProgram,
               instruction: str) -> "RefineResult":
        result = _rules_refine(program_obj, program_cam, instruction)
        if result is not None:
            return result
        if self.remote is not None:
            try:
                context = ("current object program: "
                           f"{dsl.serialize_program(program_obj)}\n"
                           "current camera program: "
                           f"{dsl.serialize_program(program_cam)}\n"
                           "Apply this edit and reply with the updated camera program only.")
                new_cam = self.remote.propose(instruction, dsl.ROLE_CAMERA, context)
                return RefineResult(program_obj, new_cam,
                                    _program_diff(program_cam, new_cam), noop=False)
            except (PlanRejected, BackendUnavailable, PlanTimeout):
                pass
        return RefineResult(program_obj, program_cam, [], noop=True)


@dataclass
class RefineResult:
    program_obj: dsl.MotionProgram
    program_cam: dsl.MotionProgram
    diff: list[dict] = field(default_factory=list)
    noop: bool = False

    def to_json_dict(self) -> dict:
        return {
            "program_obj": dsl.program_to_json_dict(self.program_obj),
            "program_cam": dsl.program_to_json_dict(self.program_cam),
            "diff": self.diff,
            "noop": self.noop,
        }


def _program_diff(old: dsl.MotionProgram, new: dsl.MotionProgram) -> list[dict]:
    diff = []
    for i, (a, b) in enumerate(zip(old.tags, new.tags)):
        keys = set(a.modifiers) | set(b.modifiers)
        for key in sorted(keys):
            va = a.resolved(key) if key in dsl.MODIFIERS[a.primitive] else None
            vb = b.resolved(key) if key in dsl.MODIFIERS[b.primitive] else None
            if va != vb:
                diff.append({"tag": i, "key": key, "old": va, "new": vb})
        if a.primitive != b.primitive:
            diff.append({"tag": i, "key": "primitive", "old": a.primitive,
                         "new": b.primitive})
    return diff


# Ordered level scales used by one-notch stepping.
_TZ_SCALE = ("far_in", "in", "near_in", "no", "near_out", "out", "far_out")
_TY_SCALE = ("far_down", "down", "near_down", "no", "near_up", "up", "far_up")
_PUSH_SCALE = ("in_0.5", "in_0.3", "in_0.1", "no", "out_0.1", "out_0.3", "out_0.5")
_DEG_SCALE = ("30", "45", "60", "90", "180", "270", "360")
_VER_SCALE = ("low-angle", "none", "aerial")


def _step(scale: tuple[str, ...], value: str, delta: int) -> str:
    idx = scale.index(value)
    return scale[max(0, min(len(scale) - 1, idx + delta))]


def _edit_tags(program: dsl.MotionProgram, editor) -> tuple[dsl.MotionProgram, bool]:
    changed = False
    new_tags = []
    for tag in program.tags:
        mods = dict(tag.modifiers)
        if editor(tag.primitive, mods, tag):
            changed = True
        new_tags.append(dsl.MotionTag(tag.primitive, mods))
    return dsl.MotionProgram(program.role, tuple(new_tags)), changed


def _set_key(mods: dict, tag: dsl.MotionTag, key: str, value: str) -> bool:
    if tag.resolved(key) == value:
        return False
    default = dsl.MODIFIERS[tag.primitive][key].default
    if value == default:
        mods.pop(key, None)
    else:
        mods[key] = value
    return True


def _rules_refine(program_obj: dsl.MotionProgram, program_cam: dsl.MotionProgram,
                  instruction: str) -> RefineResult | None:
    text = instruction.lower()
    near = any(w in text for w in _INTENSITY_NEAR)
    far = any(w in text for w in _INTENSITY_FAR)

    def zoom_editor(direction: int):
        # direction: -1 toward "in", +1 toward "out"
        def edit(primitive, mods, tag):
            if primitive == dsl.FREE_FORM:
                if near or far:
                    token = f"{'near_' if near else 'far_'}{'in' if direction < 0 else 'out'}"
                    return _set_key(mods, tag, "t_z", token)
                return _set_key(mods, tag, "t_z",
                                _step(_TZ_SCALE, tag.resolved("t_z"), direction))
            key = {"orbit_track": "spiral", "tail_track": "dolly",
                   "rotation_track": "push"}[primitive]
            current = tag.resolved(key)
            if near or far:
                token = f"{'in' if direction < 0 else 'out'}_{'0.1' if near else '0.5'}"
                return _set_key(mods, tag, key, token)
            return _set_key(mods, tag, key, _step(_PUSH_SCALE, current, direction))
        return edit

    def vertical_editor(direction: int):
        def edit(primitive, mods, tag):
            if primitive == dsl.FREE_FORM:
                if near or far:
                    token = f"{'near_' if near else 'far_'}{'up' if direction > 0 else 'down'}"
                    return _set_key(mods, tag, "t_y", token)
                return _set_key(mods, tag, "t_y",
                                _step(_TY_SCALE, tag.resolved("t_y"), direction))
            return _set_key(mods, tag, "ver",
                            _step(_VER_SCALE, tag.resolved("ver"), direction))
        return edit

    editor = None
    if "counterclockwise" in text or "anticlockwise" in text or "counter-clockwise" in text:
        def editor(primitive, mods, tag):
            if primitive == dsl.ORBIT_TRACK:
                return _set_key(mods, tag, "dir", "ccw")
            return False
    elif "clockwise" in text:
        def editor(primitive, mods, tag):
            if primitive == dsl.ORBIT_TRACK:
                return _set_key(mods, tag, "dir", "cw")
            return False
    elif any(w in text for w in ("zoom out", "further", "farther", "pull back", "move back", "back away")):
        editor = zoom_editor(+1)
    elif any(w in text for w in ("zoom in", "closer", "push in", "move in")):
        editor = zoom_editor(-1)
    elif "lower" in text:
        editor = vertical_editor(-1)
    elif "higher" in text or "raise" in text:
        editor = vertical_editor(+1)
    elif "slower" in text or "faster" in text:
        delta = -1 if "slower" in text else +1

        def editor(primitive, mods, tag):
            changed = False
            if primitive == dsl.FREE_FORM:
                for key, scale in (("t_z", _TZ_SCALE), ("t_y", _TY_SCALE),
                                   ("t_x", ("far_left", "left", "near_left", "no",
                                            "near_right", "right", "far_right"))):
                    value = tag.resolved(key)
                    if value == "no":
                        continue
                    idx = scale.index(value)
                    toward = 1 if idx > 3 else -1  # step away from/toward "no"
                    new_idx = idx + toward * delta
                    new_idx = max(0, min(len(scale) - 1, new_idx))
                    if new_idx == 3:  # never silence an active axis
                        new_idx = idx
                    if scale[new_idx] != value:
                        mods[key] = scale[new_idx]
                        changed = True
            elif primitive == dsl.ORBIT_TRACK:
                changed = _set_key(mods, tag, "deg",
                                   _step(_DEG_SCALE, tag.resolved("deg"), delta))
            return changed
    if editor is None:
        return None
    new_cam, cam_changed = _edit_tags(program_cam, editor)
    if not cam_changed:
        return RefineResult(program_obj, program_cam, [], noop=True)
    dsl.validate_program(new_cam)
    return RefineResult(program_obj, new_cam, _program_diff(program_cam, new_cam),
                        noop=False)
