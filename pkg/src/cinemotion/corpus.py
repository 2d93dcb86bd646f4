"""Procedural corpus generation: program sampling, captions, paraphrasing.

Every record is driven by a counter-derived RNG stream keyed on
(global seed, record index), so generation is order-independent, resumable,
and byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator

import numpy as np

from . import dsl
from .compiler import CompileConfig, SceneMotion, compile_scene, translation_vector
from .errors import BackendUnavailable
from .kinematics import mix_seed

_U64 = 0xFFFFFFFFFFFFFFFF

SUB_CORPORA = ("freeform_cam", "freeform_cam_para", "bbox", "bbox_para")


def _load_templates() -> dict:
    with resources.files("cinemotion.data").joinpath("caption_templates.json").open("rb") as fh:
        return json.load(fh)


TEMPLATES = _load_templates()


# --- sampling configuration -----------------------------------------------------

def _camera_angle_weights() -> dict[str, float]:
    # Dense over the whole range, with zero (no rotation) dominating.
    w = {str(v): 1.0 for v in dsl.ANGLE_VALUES}
    w["0"] = 54.0  # half the mass on "no rotation"
    return w

# Object angles keep a margin from the 15/60-degree level edges so the
# sampled magnitudes stay unambiguous under the tagger's thresholds.
_OBJECT_SMALL = (25, 30, 35, 40, 45)
_OBJECT_LARGE = (70, 80, 90, 100, 120, 150, 180)


def _object_angle_weights(zero_mass: float) -> dict[str, float]:
    spread = 1.0 - zero_mass
    w = {"0": zero_mass}
    small_each = spread * 0.6 / (2 * len(_OBJECT_SMALL))
    large_each = spread * 0.4 / (2 * len(_OBJECT_LARGE))
    for v in _OBJECT_SMALL:
        w[str(v)] = small_each
        w[str(-v)] = small_each
    for v in _OBJECT_LARGE:
        w[str(v)] = large_each
        w[str(-v)] = large_each
    return w


def _axis_weights(axis: str, no_mass: float, near: float, plain: float, far: float) -> dict[str, float]:
    words = {"t_x": ("left", "right"), "t_y": ("down", "up"), "t_z": ("in", "out")}[axis]
    w = {"no": no_mass}
    for word in words:
        w[f"near_{word}"] = near
        w[word] = plain
        w[f"far_{word}"] = far
    return w


def default_value_weights() -> dict[str, dict[str, float]]:
    """Per-key token weights; single-axis and forward/backward motion dominate."""
    return {
        "camera.t_x": _axis_weights("t_x", 0.70, 0.04, 0.07, 0.04),
        "camera.t_y": _axis_weights("t_y", 0.76, 0.04, 0.04, 0.04),
        "camera.t_z": _axis_weights("t_z", 0.40, 0.09, 0.14, 0.07),
        "camera.yaw": _camera_angle_weights(),
        "camera.pitch": {**_camera_angle_weights(), "0": 108.0},
        "camera.roll": {**_camera_angle_weights(), "0": 243.0},
        "object.t_x": _axis_weights("t_x", 0.70, 0.04, 0.07, 0.04),
        "object.t_y": _axis_weights("t_y", 0.84, 0.02, 0.04, 0.02),
        "object.t_z": _axis_weights("t_z", 0.40, 0.09, 0.14, 0.07),
        "object.yaw": _object_angle_weights(0.50),
        "object.pitch": _object_angle_weights(0.76),
        "orbit_track.deg": {"30": 0.06, "45": 0.08, "60": 0.10, "90": 0.30,
                            "180": 0.22, "270": 0.06, "360": 0.18},
        "orbit_track.dir": {"cw": 0.5, "ccw": 0.5},
        "orbit_track.plane_axis": {"x": 0.1, "y": 0.8, "z": 0.1},
        "orbit_track.spiral": {"no": 0.76, "in_0.1": 0.04, "in_0.3": 0.04, "in_0.5": 0.04,
                               "out_0.1": 0.04, "out_0.3": 0.04, "out_0.5": 0.04},
        "tail_track.follow_style": {"hard": 0.6, "soft": 0.25, "lazy": 0.15},
        "tail_track.follow_axis": {"full": 0.85, "x": 0.05, "y": 0.05, "z": 0.05},
        "tail_track.amp": {"no": 0.8, "all_0.5": 0.03, "all_0.8": 0.03, "all_1.2": 0.03,
                           "all_1.5": 0.03, "x_0.5": 0.01, "x_1.5": 0.01, "y_0.5": 0.01,
                           "y_1.5": 0.01, "z_0.5": 0.02, "z_1.5": 0.02},
        "tail_track.dolly": {"no": 0.76, "in_0.1": 0.04, "in_0.3": 0.04, "in_0.5": 0.04,
                             "out_0.1": 0.04, "out_0.3": 0.04, "out_0.5": 0.04},
        "tail_track.mirror_axis": {"no": 0.9, "x": 0.05, "y": 0.05},
        "tail_track.dont_look": {"none": 0.9, "dont_look": 0.1},
        "tail_track.lead": {"none": 0.85, "lead": 0.15},
        "rotation_track.rot_axis": {"full": 0.6, "pan": 0.25, "tilt": 0.15},
        "rotation_track.push": {"no": 0.7, "in_0.1": 0.05, "in_0.3": 0.05, "in_0.5": 0.05,
                                "out_0.1": 0.05, "out_0.3": 0.05, "out_0.5": 0.05},
        "rotation_track.local_offset": {"no": 0.8, "x_-0.3": 0.025, "x_-0.1": 0.025,
                                        "x_0.1": 0.025, "x_0.3": 0.025, "y_-0.3": 0.025,
                                        "y_-0.1": 0.025, "y_0.1": 0.025, "y_0.3": 0.025},
        "rotation_track.world_move_1": {"none": 0.55, "truck_right_1.0": 0.075,
                                        "truck_left_1.0": 0.075, "pedestal_up_0.5": 0.075,
                                        "pedestal_down_0.5": 0.075, "goes_in_1.0": 0.075,
                                        "goes_out_1.0": 0.075},
        "rotation_track.world_move_2": {"none": 0.7, "truck_right_1.0": 0.05,
                                        "truck_left_1.0": 0.05, "pedestal_up_0.5": 0.05,
                                        "pedestal_down_0.5": 0.05, "goes_in_1.0": 0.05,
                                        "goes_out_1.0": 0.05},
        "track.dutch": {"0": 0.8, "-45": 0.02, "-30": 0.04, "-15": 0.04,
                        "15": 0.04, "30": 0.04, "45": 0.02},
        "track.ease": {"linear": 0.6, "in": 0.1, "out": 0.1, "in_out": 0.15, "out_in": 0.05},
        "track.jitter": {"none": 0.8, "low": 0.15, "high": 0.05},
        "track.ver": {"none": 0.8, "aerial": 0.1, "low-angle": 0.1},
        "track.object": {"none": 0.8, "left": 0.1, "right": 0.1},
    }


@dataclass
class SamplingConfig:
    record_count: int = 10000
    seed: int = 0
    segment_count_weights: tuple[float, float, float] = (0.35, 0.30, 0.35)
    sub_corpus_weights: dict[str, float] = field(default_factory=lambda: {
        "freeform_cam": 0.25, "freeform_cam_para": 0.25, "bbox": 0.25, "bbox_para": 0.25})
    camera_primitive_weights: dict[str, float] = field(default_factory=lambda: {
        dsl.FREE_FORM: 0.25, dsl.ORBIT_TRACK: 0.30, dsl.TAIL_TRACK: 0.30,
        dsl.ROTATION_TRACK: 0.15})
    value_weights: dict[str, dict[str, float]] = field(default_factory=default_value_weights)
    paraphrase_backend: str = "rule"

    def to_json_dict(self) -> dict:
        return {
            "record_count": self.record_count,
            "seed": self.seed,
            "segment_count_weights": list(self.segment_count_weights),
            "sub_corpus_weights": dict(self.sub_corpus_weights),
            "camera_primitive_weights": dict(self.camera_primitive_weights),
            "value_weights": {k: dict(v) for k, v in self.value_weights.items()},
            "paraphrase_backend": self.paraphrase_backend,
        }

    @staticmethod
    def from_json_dict(data: dict) -> "SamplingConfig":
        cfg = SamplingConfig()
        cfg.record_count = int(data.get("record_count", cfg.record_count))
        cfg.seed = int(data.get("seed", cfg.seed))
        if "segment_count_weights" in data:
            w = data["segment_count_weights"]
            cfg.segment_count_weights = (float(w[0]), float(w[1]), float(w[2]))
        for key in ("sub_corpus_weights", "camera_primitive_weights"):
            if key in data:
                setattr(cfg, key, {str(k): float(v) for k, v in data[key].items()})
        if "value_weights" in data:
            merged = default_value_weights()
            for k, v in data["value_weights"].items():
                merged[k] = {str(t): float(w) for t, w in v.items()}
            cfg.value_weights = merged
        cfg.paraphrase_backend = data.get("paraphrase_backend", cfg.paraphrase_backend)
        return cfg

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _weighted_choice(rng: np.random.Generator, weights: dict[str, float]) -> str:
    tokens = list(weights)
    total = sum(weights.values())
    p = [weights[t] / total for t in tokens]
    return tokens[int(rng.choice(len(tokens), p=p))]


def _weights_for(config: SamplingConfig, role: str, primitive: str, key: str) -> dict[str, float]:
    vw = config.value_weights
    for name in (f"{primitive}.{key}", f"{role}.{key}", f"track.{key}"):
        if name in vw:
            return vw[name]
    spec = dsl.MODIFIERS[primitive][key]
    return {spec.default: 1.0}


def sample_tag_count(config: SamplingConfig, rng: np.random.Generator) -> int:
    w1, w2, w34 = config.segment_count_weights
    bucket = _weighted_choice(rng, {"1": w1, "2": w2, "34": w34})
    if bucket == "34":
        return 3 if rng.random() < 0.5 else 4
    return int(bucket)


def _sample_freeform_tag(config: SamplingConfig, role: str,
                         rng: np.random.Generator) -> dsl.MotionTag:
    modifiers: dict[str, str] = {}
    keys = ("t_x", "t_y", "t_z", "yaw", "pitch", "roll") if role == dsl.ROLE_CAMERA \
        else dsl.OBJECT_KEYS
    for key in keys:
        token = _weighted_choice(rng, _weights_for(config, role, dsl.FREE_FORM, key))
        if token not in ("no", "0"):
            modifiers[key] = token
    return dsl.MotionTag(dsl.FREE_FORM, modifiers)


def _sample_tracking_tag(config: SamplingConfig, primitive: str,
                         rng: np.random.Generator) -> dsl.MotionTag:
    modifiers: dict[str, str] = {}
    for key, spec in dsl.MODIFIERS[primitive].items():
        token = _weighted_choice(rng, _weights_for(config, dsl.ROLE_CAMERA, primitive, key))
        if token != spec.default:
            modifiers[key] = token
    # Shot sanity: a camera leading the subject keeps watching it; sampling
    # both "lead" and "dont_look" together yields incoherent control frames.
    if primitive == dsl.TAIL_TRACK and "lead" in modifiers:
        modifiers.pop("dont_look", None)
    return dsl.MotionTag(primitive, modifiers)


def sample_program(role: str, config: SamplingConfig, rng: np.random.Generator,
                   freeform_only: bool = False) -> dsl.MotionProgram:
    """Draw a grammar-valid program from the configured distributions."""
    count = sample_tag_count(config, rng)
    tags = []
    for _ in range(count):
        if role == dsl.ROLE_OBJECT or freeform_only:
            tags.append(_sample_freeform_tag(config, role, rng))
            continue
        primitive = _weighted_choice(rng, config.camera_primitive_weights)
        if primitive == dsl.FREE_FORM:
            tags.append(_sample_freeform_tag(config, role, rng))
        else:
            tags.append(_sample_tracking_tag(config, primitive, rng))
    return dsl.MotionProgram(role, tuple(tags))


# --- captions -----------------------------------------------------------------------

def _intensity_word(token: str) -> str:
    if token.startswith("near_"):
        return TEMPLATES["intensity"]["near"]
    if token.startswith("far_"):
        return TEMPLATES["intensity"]["far"]
    return TEMPLATES["intensity"]["plain"]


def _freeform_clause(tag: dsl.MotionTag, role: str) -> str:
    moves = []
    for key in ("t_x", "t_y", "t_z"):
        token = tag.resolved(key)
        if token == "no":
            continue
        direction = TEMPLATES["directions"][key]["-" if translation_vector(tag)[
            ("t_x", "t_y", "t_z").index(key)] < 0 else "+"]
        intensity = _intensity_word(token)
        moves.append(f"{intensity} {direction}".strip())
    turns = []
    verbs = TEMPLATES["rotation_verbs"][role]
    # Finite form when the rotation stands alone, gerund after "while".
    form = 1 if moves else 0
    for key in verbs:
        angle = tag.angle(key)
        if angle == 0:
            continue
        verb = verbs[key]["+" if angle > 0 else "-"][form]
        turns.append(f"{verb} by {abs(angle)} degrees")
    if not moves and not turns:
        return TEMPLATES["static_clause"]
    parts = []
    if moves:
        parts.append(f"{TEMPLATES['move_verb']} {' and '.join(moves)}")
    if turns:
        joined = " and ".join(turns)
        parts.append(joined if not moves else f"while {joined}")
    clause = " ".join(parts)
    for key, table in (("ease", TEMPLATES["common"]["ease"]),
                       ("jitter", TEMPLATES["common"]["jitter"])):
        if key in dsl.MODIFIERS[dsl.FREE_FORM] and tag.resolved(key) not in ("linear", "none"):
            qualifier = table.get(tag.resolved(key))
            if qualifier:
                clause += f" {qualifier}"
    return clause


def _common_qualifiers(tag: dsl.MotionTag) -> list[str]:
    parts = []
    common = TEMPLATES["common"]
    ver = tag.resolved("ver")
    if ver != "none":
        parts.append(common["ver"][ver])
    if tag.angle("dutch") != 0:
        parts.append(common["dutch"])
    framing = tag.resolved("object")
    if framing != "none":
        parts.append(common["framing"][framing])
    kind = tag.resolved("ease")
    if kind != "linear":
        parts.append(common["ease"][kind])
    jitter = tag.resolved("jitter")
    if jitter != "none":
        parts.append(common["jitter"][jitter])
    return [p for p in parts if p]


def _orbit_clause(tag: dsl.MotionTag) -> str:
    t = TEMPLATES["orbit"]
    parts = [t["verb"], t["dir"][tag.resolved("dir")], t["deg"][tag.resolved("deg")]]
    axis_phrase = t["plane_axis"][tag.resolved("plane_axis")]
    if axis_phrase:
        parts.append(axis_phrase)
    spiral = tag.resolved("spiral")
    if spiral != "no":
        parts.append(t["spiral"][spiral.split("_")[0]])
    parts.extend(_common_qualifiers(tag))
    return " ".join(p for p in parts if p)


def _tail_clause(tag: dsl.MotionTag) -> str:
    t = TEMPLATES["tail"]
    parts = [t["verb"]]
    for key in ("follow_style", "follow_axis"):
        phrase = t[key][tag.resolved(key)]
        if phrase:
            parts.append(phrase)
    if tag.resolved("lead") == "lead":
        parts.append(t["lead"])
    dolly = tag.resolved("dolly")
    if dolly != "no":
        parts.append(t["dolly"][dolly.split("_")[0]])
    amp = tag.resolved("amp")
    if amp != "no":
        parts.append(t["amp_high"] if float(amp.rsplit("_", 1)[1]) > 1.0 else t["amp_low"])
    if tag.resolved("mirror_axis") != "no":
        parts.append(t["mirror"])
    if tag.resolved("dont_look") == "dont_look":
        parts.append(t["dont_look"])
    parts.extend(_common_qualifiers(tag))
    return " ".join(p for p in parts if p)


def _rotation_clause(tag: dsl.MotionTag) -> str:
    t = TEMPLATES["rotation_track"]
    parts = [t["verb"][tag.resolved("rot_axis")]]
    move1 = tag.resolved("world_move_1")
    move2 = tag.resolved("world_move_2")
    if move1 != "none" or move2 != "none":
        if move1 != "none":
            parts.append(t["world_moves"][move1.rsplit("_", 1)[0]])
        if move2 != "none":
            parts.append(f"{t['world_moves'][move2.rsplit('_', 1)[0]]} {t['second_half']}")
    else:
        push = tag.resolved("push")
        if push != "no":
            parts.append(t["push"][push.split("_")[0]])
        if tag.resolved("local_offset") != "no":
            parts.append(t["local_offset"])
    parts.extend(_common_qualifiers(tag))
    return " ".join(p for p in parts if p)


def caption(program: dsl.MotionProgram, style: str = "camera_free") -> str:
    """Deterministic template caption; one clause per tag joined with "then"."""
    role = dsl.ROLE_OBJECT if style == "object" else dsl.ROLE_CAMERA
    subject = TEMPLATES["subjects"][role]
    clauses = []
    for tag in program.tags:
        if tag.primitive == dsl.FREE_FORM:
            clauses.append(_freeform_clause(tag, role))
        elif tag.primitive == dsl.ORBIT_TRACK:
            clauses.append(_orbit_clause(tag))
        elif tag.primitive == dsl.TAIL_TRACK:
            clauses.append(_tail_clause(tag))
        else:
            clauses.append(_rotation_clause(tag))
    if all(c == TEMPLATES["static_clause"] for c in clauses):
        return TEMPLATES["static_program"][role]
    return f"{subject} {TEMPLATES['joiner'].join(clauses)}"


# --- paraphrasing ---------------------------------------------------------------------

class RuleParaphraser:
    """Seeded synonym substitution; always deterministic, never changes
    direction or intensity keywords."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def __call__(self, text: str) -> str:
        rng = np.random.default_rng(self.seed & _U64)
        table = TEMPLATES["paraphrase"]
        out = text
        for phrase in table:
            if phrase in out:
                variants = table[phrase]
                pick = variants[int(rng.integers(len(variants)))]
                out = out.replace(phrase, pick)
        return out


class RemoteParaphraser:
    """Delegates to an LLM chat client; see planner.RemoteBackend."""

    def __init__(self, client):
        self.client = client

    def __call__(self, text: str) -> str:
        prompt = ("Rewrite the following camera/object motion description with "
                  "different wording but identical meaning. Keep every direction "
                  "and intensity word equivalent. Reply with the rewritten "
                  f"sentence only.\n\n{text}")
        return self.client.complete(prompt).strip()


def paraphrase(text: str, backend) -> str:
    """Apply a paraphrase backend; raises BackendUnavailable on failure."""
    try:
        return backend(text)
    except BackendUnavailable:
        raise
    except Exception as exc:  # network/transport faults become typed errors
        raise BackendUnavailable(f"paraphrase backend failed: {exc}") from exc


# --- records and corpus emission ----------------------------------------------------

RECORD_KEYS = ("id", "sub_corpus", "seed", "caption_obj", "caption_cam",
               "caption_source", "program_obj", "program_cam", "scene")


@dataclass
class DatasetRecord:
    id: str
    sub_corpus: str
    seed: int
    caption_obj: str
    caption_cam: str
    caption_source: str
    program_obj: dsl.MotionProgram
    program_cam: dsl.MotionProgram
    scene: SceneMotion

    def to_json_dict(self, scene_path: str | None = None) -> dict:
        return {
            "id": self.id,
            "sub_corpus": self.sub_corpus,
            "seed": self.seed,
            "caption_obj": self.caption_obj,
            "caption_cam": self.caption_cam,
            "caption_source": self.caption_source,
            "program_obj": dsl.serialize_program(self.program_obj),
            "program_cam": dsl.serialize_program(self.program_cam),
            "scene": scene_path if scene_path is not None else self.scene.to_json_dict(),
        }


def build_record(config: SamplingConfig, index: int) -> DatasetRecord:
    """Record ``index`` of the corpus; depends only on (config, index)."""
    rng = np.random.default_rng([config.seed & _U64, index])
    sub = _weighted_choice(rng, config.sub_corpus_weights)
    freeform = sub.startswith("freeform_cam")
    if freeform:
        program_obj = dsl.MotionProgram(dsl.ROLE_OBJECT, (dsl.MotionTag(dsl.FREE_FORM, {}),))
        program_cam = sample_program(dsl.ROLE_CAMERA, config, rng, freeform_only=True)
        cam_style = "camera_free"
    else:
        program_obj = sample_program(dsl.ROLE_OBJECT, config, rng)
        program_cam = sample_program(dsl.ROLE_CAMERA, config, rng)
        cam_style = "camera_relative"
    scene_seed = int(rng.integers(0, 2 ** 63))
    scene = compile_scene(program_obj, program_cam, CompileConfig(), scene_seed)
    caption_obj = caption(program_obj, "object")
    caption_cam = caption(program_cam, cam_style)
    source = "template"
    if sub.endswith("_para"):
        backend = RuleParaphraser(mix_seed(scene_seed, index))
        try:
            caption_obj = paraphrase(caption_obj, backend)
            caption_cam = paraphrase(caption_cam, backend)
            source = "paraphrase"
        except BackendUnavailable:
            source = "template_fallback"
    return DatasetRecord(
        id=f"{config.seed & _U64:016x}-{index:08d}",
        sub_corpus=sub,
        seed=scene_seed,
        caption_obj=caption_obj,
        caption_cam=caption_cam,
        caption_source=source,
        program_obj=program_obj,
        program_cam=program_cam,
        scene=scene,
    )


def iter_records(config: SamplingConfig, start: int = 0,
                 stop: int | None = None) -> Iterator[DatasetRecord]:
    stop = config.record_count if stop is None else stop
    for i in range(start, stop):
        yield build_record(config, i)


def _coarse_label(tag: dsl.MotionTag) -> str:
    v = translation_vector(tag)
    return "/".join("-" if x < 0 else ("+" if x > 0 else "0") for x in v)


def corpus_histograms(records_meta: list[dict]) -> dict:
    """Aggregate per-class counts from lightweight per-record metadata."""
    hists = {
        "segment_count": {"object": {}, "camera": {}},
        "camera_primitive": {},
        "object_coarse_translation": {},
        "camera_freeform_coarse_translation": {},
        "sub_corpus": {},
    }
    for meta in records_meta:
        hists["sub_corpus"][meta["sub_corpus"]] = \
            hists["sub_corpus"].get(meta["sub_corpus"], 0) + 1
        for role in ("object", "camera"):
            if meta[f"{role}_tag_count"] is None:
                continue
            n = str(meta[f"{role}_tag_count"])
            hists["segment_count"][role][n] = hists["segment_count"][role].get(n, 0) + 1
        for prim in meta["camera_primitives"]:
            hists["camera_primitive"][prim] = hists["camera_primitive"].get(prim, 0) + 1
        for label in meta["object_classes"]:
            hists["object_coarse_translation"][label] = \
                hists["object_coarse_translation"].get(label, 0) + 1
        for label in meta["camera_freeform_classes"]:
            hists["camera_freeform_coarse_translation"][label] = \
                hists["camera_freeform_coarse_translation"].get(label, 0) + 1
    return hists


def record_meta(record: DatasetRecord) -> dict:
    # freeform_cam records carry a forced static object, not a sampled one;
    # keep those out of the object-side distribution counts.
    object_sampled = not record.sub_corpus.startswith("freeform_cam")
    return {
        "sub_corpus": record.sub_corpus,
        "object_tag_count": len(record.program_obj.tags) if object_sampled else None,
        "camera_tag_count": len(record.program_cam.tags),
        "camera_primitives": [t.primitive for t in record.program_cam.tags],
        "object_classes": [_coarse_label(t) for t in record.program_obj.tags]
        if object_sampled else [],
        "camera_freeform_classes": [
            _coarse_label(t) for t in record.program_cam.tags
            if t.primitive == dsl.FREE_FORM
        ],
    }


def generate_corpus(config: SamplingConfig, out_path, manifest_path=None,
                    traj_dir=None, start: int = 0, stop: int | None = None) -> dict:
    """Write records as JSONL (UTF-8, fixed key order) plus a manifest.

    With ``traj_dir`` set, trajectories go to sidecar files and each record
    stores a relative path instead of the embedded scene.
    """
    import pathlib

    out_path = pathlib.Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if traj_dir is not None:
        traj_dir = pathlib.Path(traj_dir)
        traj_dir.mkdir(parents=True, exist_ok=True)
    metas = []
    mode = "a" if start > 0 else "w"
    index = start
    with out_path.open(mode, encoding="utf-8") as fh:
        try:
            for index, record in enumerate(iter_records(config, start, stop), start):
                if traj_dir is not None:
                    scene_file = traj_dir / f"{record.id}.json"
                    scene_file.write_text(
                        json.dumps(record.scene.to_json_dict()), encoding="utf-8")
                    line = record.to_json_dict(scene_path=scene_file.name)
                else:
                    line = record.to_json_dict()
                fh.write(json.dumps(line, ensure_ascii=False) + "\n")
                metas.append(record_meta(record))
        except OSError as exc:
            raise OSError(f"corpus write failed at record {index}: {exc}") from exc
    manifest = {
        "version": "1.0",
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "record_count": len(metas),
        "start": start,
        "histograms": corpus_histograms(metas),
    }
    if manifest_path is not None:
        pathlib.Path(manifest_path).write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return manifest
