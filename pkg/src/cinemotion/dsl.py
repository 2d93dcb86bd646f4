"""Motion DSL: value tables, program parsing, serialization, and schema export.

A program is an ordered list of at most four tags separated by ``|``.  Each tag
is a primitive name followed by ``key_value`` modifier tokens, e.g.::

    orbit_track deg_360 dir_ccw | tail_track follow_style_lazy

Unwritten modifiers resolve to their canonical defaults.  All tokens are
lowercase and case-sensitive.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterator

from .errors import (
    DslError,
    DuplicateKey,
    ModifierNotApplicable,
    RoleViolation,
    TooManyTags,
    UnknownModifierKey,
    UnknownPrimitive,
    ValueNotAllowed,
)

SCHEMA_VERSION = "1.0"
TAG_DELIMITER = "|"
MAX_TAGS = 4

FREE_FORM = "free_form"
ORBIT_TRACK = "orbit_track"
TAIL_TRACK = "tail_track"
ROTATION_TRACK = "rotation_track"
PRIMITIVES = (FREE_FORM, ORBIT_TRACK, TAIL_TRACK, ROTATION_TRACK)

ROLE_OBJECT = "object"
ROLE_CAMERA = "camera"
ROLES = (ROLE_OBJECT, ROLE_CAMERA)

# Modifier keys an object-role tag may carry (translation plus yaw/pitch).
OBJECT_KEYS = ("t_x", "t_y", "t_z", "yaw", "pitch")

_INT_RE = re.compile(r"^-?\d+$")


def angle_values() -> tuple[int, ...]:
    """The allowed signed degree values for yaw/pitch/roll.

    10-degree steps beyond +/-90, 5-degree steps inside, zero included.
    """
    vals = set(range(-180, -90, 10)) | set(range(-90, 95, 5)) | set(range(100, 190, 10))
    return tuple(sorted(vals))


ANGLE_VALUES = angle_values()
DUTCH_VALUES = (-45, -30, -15, 0, 15, 30, 45)

_EASE_VALUES = ("in", "out", "in_out", "out_in", "linear")
_JITTER_VALUES = ("low", "high", "none")
_VER_VALUES = ("aerial", "low-angle", "none")
_OBJECT_FRAME_VALUES = ("left", "right", "none")
_DOLLY_VALUES = ("in_0.1", "in_0.3", "in_0.5", "out_0.1", "out_0.3", "out_0.5", "no")
_AMP_VALUES = tuple(
    f"{axis}_{s}" for axis in ("x", "y", "z", "all") for s in ("0.5", "0.8", "1.2", "1.5")
) + ("no",)
_LOCAL_OFFSET_VALUES = tuple(
    f"{axis}_{v}" for axis in ("x", "y") for v in ("-0.3", "-0.1", "0.1", "0.3")
) + ("no",)
_WORLD_MOVE_VALUES = tuple(
    f"{name}_{amt}"
    for name in ("truck_right", "truck_left", "pedestal_up", "pedestal_down", "goes_in", "goes_out")
    for amt in ("0.5", "1.0", "2.0")
) + ("none",)

_LEVEL_TOKENS = {
    "t_x": ("far_left", "left", "near_left", "no", "near_right", "right", "far_right"),
    "t_y": ("far_down", "down", "near_down", "no", "near_up", "up", "far_up"),
    "t_z": ("far_in", "in", "near_in", "no", "near_out", "out", "far_out"),
}


@dataclass(frozen=True)
class ModifierSpec:
    """One modifier key: its value set, default, and a short usage note."""

    key: str
    values: tuple[str, ...]
    default: str
    description: str

    def __post_init__(self) -> None:
        if self.default not in self.values:
            raise ValueError(f"default {self.default!r} not in value set for {self.key!r}")

    def allows(self, value: str) -> bool:
        return value in self.values


def _angle_spec(key: str, description: str) -> ModifierSpec:
    return ModifierSpec(key, tuple(str(v) for v in ANGLE_VALUES), "0", description)


def _track_common() -> list[ModifierSpec]:
    return [
        ModifierSpec("dutch", tuple(str(v) for v in DUTCH_VALUES), "0",
                     "roll angle ramped across the segment"),
        ModifierSpec("ease", _EASE_VALUES, "linear", "time-warp shaping acceleration"),
        ModifierSpec("jitter", _JITTER_VALUES, "none", "handheld-style positional noise"),
        ModifierSpec("ver", _VER_VALUES, "none", "raise or lower the viewpoint relative to the subject"),
        ModifierSpec("object", _OBJECT_FRAME_VALUES, "none", "push the subject left or right in frame"),
    ]


def _build_registry() -> dict[str, dict[str, ModifierSpec]]:
    free_form = [
        ModifierSpec("t_x", _LEVEL_TOKENS["t_x"], "no", "sideways translation level"),
        ModifierSpec("t_y", _LEVEL_TOKENS["t_y"], "no", "vertical translation level"),
        ModifierSpec("t_z", _LEVEL_TOKENS["t_z"], "no", "forward/backward translation level"),
        _angle_spec("yaw", "net heading change in degrees"),
        _angle_spec("pitch", "net tilt change in degrees"),
        _angle_spec("roll", "net roll change in degrees (camera only)"),
        # Extension keys: accepted on camera free_form tags for stylistic control.
        ModifierSpec("ease", _EASE_VALUES, "linear", "time-warp shaping acceleration"),
        ModifierSpec("jitter", _JITTER_VALUES, "none", "handheld-style positional noise"),
    ]
    orbit = _track_common() + [
        ModifierSpec("plane_axis", ("x", "y", "z"), "y", "axis the camera revolves around"),
        ModifierSpec("deg", ("30", "45", "60", "90", "180", "270", "360"), "90",
                     "total swept angle in degrees"),
        ModifierSpec("dir", ("cw", "ccw"), "cw", "sweep direction about the axis"),
        ModifierSpec("spiral", _DOLLY_VALUES, "no", "shrink or grow the radius while sweeping"),
    ]
    tail = _track_common() + [
        ModifierSpec("follow_style", ("hard", "soft", "lazy"), "hard",
                     "how tightly the camera tracks the subject"),
        ModifierSpec("follow_axis", ("x", "y", "z", "full"), "full",
                     "world axes that update while following"),
        ModifierSpec("amp", _AMP_VALUES, "no", "scale camera travel relative to the subject"),
        ModifierSpec("dolly", _DOLLY_VALUES, "no", "close or open the follow distance"),
        ModifierSpec("mirror_axis", ("x", "y", "no"), "no", "flip camera displacement on an axis"),
        ModifierSpec("dont_look", ("dont_look", "none"), "none",
                     "hold the entry orientation instead of watching the subject"),
        ModifierSpec("lead", ("lead", "none"), "none",
                     "place the camera ahead of the subject's motion"),
    ]
    rotation = _track_common() + [
        ModifierSpec("rot_axis", ("pan", "tilt", "full"), "full",
                     "rotation axes used to keep the subject framed"),
        ModifierSpec("push", _DOLLY_VALUES, "no", "move toward or away from the subject while rotating"),
        ModifierSpec("local_offset", _LOCAL_OFFSET_VALUES, "no",
                     "shift the look-at point in camera-local x or y"),
        ModifierSpec("world_move_1", _WORLD_MOVE_VALUES, "none",
                     "world-space camera move, first half of the segment (whole segment if alone)"),
        ModifierSpec("world_move_2", _WORLD_MOVE_VALUES, "none",
                     "world-space camera move, second half of the segment"),
    ]
    return {
        FREE_FORM: {m.key: m for m in free_form},
        ORBIT_TRACK: {m.key: m for m in orbit},
        TAIL_TRACK: {m.key: m for m in tail},
        ROTATION_TRACK: {m.key: m for m in rotation},
    }


MODIFIERS: dict[str, dict[str, ModifierSpec]] = _build_registry()

# All keys across primitives, longest first, for prefix matching of tokens.
_ALL_KEYS = sorted({k for table in MODIFIERS.values() for k in table}, key=len, reverse=True)

_ANGLE_KEYS = {"yaw", "pitch", "roll", "dutch", "deg"}


@dataclass(frozen=True)
class MotionTag:
    """One primitive plus its explicitly written modifiers."""

    primitive: str
    modifiers: dict[str, str] = field(default_factory=dict)

    def resolved(self, key: str) -> str:
        """Value for ``key``, falling back to the primitive's default."""
        spec = MODIFIERS[self.primitive].get(key)
        if spec is None:
            raise ModifierNotApplicable(
                f"{key!r} is not a modifier of {self.primitive}",
                primitive=self.primitive, key=key)
        return self.modifiers.get(key, spec.default)

    def resolved_modifiers(self) -> dict[str, str]:
        """Full modifier map with defaults filled in, in canonical key order."""
        return {k: self.modifiers.get(k, spec.default)
                for k, spec in MODIFIERS[self.primitive].items()}

    def angle(self, key: str) -> int:
        return int(self.resolved(key))


@dataclass(frozen=True)
class MotionProgram:
    """Ordered tag sequence with a role; one tag per temporal segment."""

    role: str
    tags: tuple[MotionTag, ...]

    def __len__(self) -> int:
        return len(self.tags)


def _validate_tag(primitive: str, modifiers: dict[str, str], role: str) -> MotionTag:
    if primitive not in PRIMITIVES:
        raise UnknownPrimitive(f"unknown primitive {primitive!r}", token=primitive)
    if role == ROLE_OBJECT and primitive != FREE_FORM:
        raise RoleViolation(
            f"object programs may only use {FREE_FORM}, got {primitive!r}",
            primitive=primitive, role=role)
    table = MODIFIERS[primitive]
    for key, value in modifiers.items():
        if key not in table:
            raise ModifierNotApplicable(
                f"{key!r} does not apply to {primitive}", primitive=primitive, key=key)
        if role == ROLE_OBJECT and key not in OBJECT_KEYS:
            raise RoleViolation(
                f"object programs may not use {key!r}", key=key, role=role)
        spec = table[key]
        if key in _ANGLE_KEYS:
            if not _INT_RE.match(value) or value not in spec.values:
                raise ValueNotAllowed(
                    f"{value!r} is not an allowed value for {key!r}",
                    key=key, value=value)
        elif not spec.allows(value):
            raise ValueNotAllowed(
                f"{value!r} is not an allowed value for {key!r}", key=key, value=value)
    return MotionTag(primitive, dict(modifiers))


def _match_key(token: str, primitive: str) -> tuple[str, str]:
    """Split a modifier token into (key, value) by longest registered key."""
    for key in _ALL_KEYS:
        if token.startswith(key + "_"):
            value = token[len(key) + 1:]
            return key, value
    raise UnknownModifierKey(
        f"no registered modifier key prefixes {token!r}", token=token, primitive=primitive)


def _parse_tag(chunk: str, role: str) -> MotionTag:
    tokens = chunk.split()
    if not tokens:
        raise UnknownPrimitive("empty tag", token="")
    primitive = tokens[0]
    if primitive not in PRIMITIVES:
        raise UnknownPrimitive(f"unknown primitive {primitive!r}", token=primitive)
    modifiers: dict[str, str] = {}
    for token in tokens[1:]:
        key, value = _match_key(token, primitive)
        if not value:
            raise ValueNotAllowed(f"missing value in token {token!r}", key=key, value="")
        if key in modifiers:
            raise DuplicateKey(f"{key!r} written twice in one tag", key=key)
        modifiers[key] = value
    return _validate_tag(primitive, modifiers, role)


def parse_program(text: str, role: str) -> MotionProgram:
    """Parse DSL source into a validated program for ``role``.

    Raises a :class:`~cinemotion.errors.DslError` subclass on any malformed
    input; never returns a partially valid program.
    """
    if role not in ROLES:
        raise DslError(f"unknown role {role!r}", role=role)
    if not isinstance(text, str) or not text.strip():
        raise UnknownPrimitive("empty program", token="")
    chunks = text.split(TAG_DELIMITER)
    if len(chunks) > MAX_TAGS:
        raise TooManyTags(f"{len(chunks)} tags exceed the maximum of {MAX_TAGS}",
                          count=len(chunks))
    tags = tuple(_parse_tag(chunk, role) for chunk in chunks)
    return MotionProgram(role, tags)


def serialize_program(program: MotionProgram, include_defaults: bool = False) -> str:
    """Render a program back to DSL source.

    ``parse_program(serialize_program(p), p.role) == p`` holds for any valid
    program when ``include_defaults`` is false.
    """
    parts = []
    for tag in program.tags:
        tokens = [tag.primitive]
        for key, spec in MODIFIERS[tag.primitive].items():
            if include_defaults:
                tokens.append(f"{key}_{tag.modifiers.get(key, spec.default)}")
            elif key in tag.modifiers:
                tokens.append(f"{key}_{tag.modifiers[key]}")
        parts.append(" ".join(tokens))
    return f" {TAG_DELIMITER} ".join(parts)


def validate_program(program: MotionProgram) -> MotionProgram:
    """Re-run all tag and role checks on an assembled program."""
    if program.role not in ROLES:
        raise DslError(f"unknown role {program.role!r}", role=program.role)
    if not program.tags:
        raise DslError("program has no tags")
    if len(program.tags) > MAX_TAGS:
        raise TooManyTags(f"{len(program.tags)} tags exceed the maximum of {MAX_TAGS}",
                          count=len(program.tags))
    for tag in program.tags:
        _validate_tag(tag.primitive, tag.modifiers, program.role)
    return program


# --- JSON wire form -----------------------------------------------------------

def program_to_json_dict(program: MotionProgram) -> dict:
    return {
        "role": program.role,
        "tags": [
            {"primitive": t.primitive, "modifiers": dict(t.modifiers)}
            for t in program.tags
        ],
    }


def program_from_json_dict(data: dict) -> MotionProgram:
    try:
        role = data["role"]
        tags = tuple(
            MotionTag(str(t["primitive"]), {str(k): str(v) for k, v in t.get("modifiers", {}).items()})
            for t in data["tags"]
        )
    except (KeyError, TypeError) as exc:
        raise DslError(f"malformed program JSON: {exc}") from exc
    return validate_program(MotionProgram(role, tags))


# --- machine-readable schema ----------------------------------------------------

def schema() -> dict:
    """Stable description of the grammar: primitives, keys, values, defaults."""
    return {
        "version": SCHEMA_VERSION,
        "tag_delimiter": TAG_DELIMITER,
        "max_tags": MAX_TAGS,
        "roles": {
            ROLE_OBJECT: {"primitives": [FREE_FORM], "keys": list(OBJECT_KEYS)},
            ROLE_CAMERA: {"primitives": list(PRIMITIVES), "keys": "all"},
        },
        "primitives": [
            {
                "name": name,
                "modifiers": [
                    {
                        "key": spec.key,
                        "values": list(spec.values),
                        "default": spec.default,
                        "description": spec.description,
                    }
                    for spec in MODIFIERS[name].values()
                ],
            }
            for name in PRIMITIVES
        ],
    }


def schema_json() -> str:
    """Schema serialized with stable key order; byte-identical across calls."""
    return json.dumps(schema(), indent=2, sort_keys=False)


def iter_all_keys() -> Iterator[tuple[str, ModifierSpec]]:
    for name in PRIMITIVES:
        for spec in MODIFIERS[name].values():
            yield name, spec
