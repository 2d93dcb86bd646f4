"""Cinematography motion-program toolkit.

Compiles a motion DSL into deterministic 3D object and camera trajectories,
generates paired text-trajectory corpora, evaluates trajectories by motion
tagging, renders wireframe control frames, and serves a previz HTTP API.
"""

__version__ = "0.1.0"

from .compiler import (  # noqa: F401
    BoxTrack,
    CompileConfig,
    FRAME_COUNT,
    SceneMotion,
    Trajectory,
    compile_camera,
    compile_object,
    compile_scene,
    segmentize,
)
from .dsl import (  # noqa: F401
    MotionProgram,
    MotionTag,
    parse_program,
    schema,
    schema_json,
    serialize_program,
)
from .tagging import (  # noqa: F401
    dsl_round_trip_filter,
    f1_report,
    rotation_mae,
    tag_rotation,
    tag_translation,
    traj_similarity,
)
