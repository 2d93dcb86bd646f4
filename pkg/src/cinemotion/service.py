"""Stateless HTTP facade over the toolkit (the previz UI's contact surface).

All endpoints are versioned under /v1 and speak JSON; handler behavior is
byte-identical to the corresponding library calls.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from . import __version__, dsl
from .compiler import CompileConfig, SceneMotion, Trajectory, compile_scene
from .errors import (
    BackendUnavailable,
    CinemotionError,
    DslError,
    EmptyRange,
    FrameOutOfRange,
    LengthMismatch,
    MissingTarget,
    PlanRejected,
    PlanTimeout,
)
from .planner import PlannerGateway, PlanRequest, RemoteBackend, RemoteBackendConfig
from .render import CameraIntrinsics, export_scene, render_scene
from .tagging import dsl_round_trip_filter, iter_segment_classes

_STATUS = {
    DslError: 400,
    MissingTarget: 400,
    EmptyRange: 400,
    LengthMismatch: 400,
    FrameOutOfRange: 400,
    PlanRejected: 422,
    BackendUnavailable: 502,
    PlanTimeout: 502,
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    cors_origin: str = "*"
    planner_backend: str = "rules"
    remote: RemoteBackendConfig | None = None
    intrinsics: CameraIntrinsics = CameraIntrinsics()

    @staticmethod
    def load(path=None, env=None) -> "ServiceConfig":
        """Config file plus CINEMOTION_* environment overrides.

        Environment beats file beats defaults; see the README for the
        variable table.
        """
        import json
        import os
        import pathlib

        env = os.environ if env is None else env
        data: dict = {}
        if path is not None:
            data = json.loads(pathlib.Path(path).read_text(encoding="utf-8"))

        def pick(key: str, default, cast=str):
            env_key = f"CINEMOTION_{key.upper()}"
            if env_key in env:
                return cast(env[env_key])
            if key in data:
                return cast(data[key])
            return default

        remote = None
        remote_data = data.get("remote", {}) or {}
        endpoint = pick("planner_endpoint", remote_data.get("endpoint"))
        if endpoint:
            defaults = RemoteBackendConfig()
            remote = RemoteBackendConfig(
                endpoint=endpoint,
                model=pick("planner_model", remote_data.get("model", defaults.model)),
                auth_env=pick("planner_auth_env",
                              remote_data.get("auth_env", defaults.auth_env)),
                timeout=pick("planner_timeout",
                             remote_data.get("timeout", defaults.timeout), float),
            )
        intr = data.get("intrinsics")
        return ServiceConfig(
            host=pick("host", "127.0.0.1"),
            port=pick("port", 8000, int),
            cors_origin=pick("cors_origin", "*"),
            planner_backend=pick("planner_backend", "rules"),
            remote=remote,
            intrinsics=CameraIntrinsics.from_json_dict(intr) if intr else CameraIntrinsics(),
        )


def _error_status(exc: CinemotionError) -> int:
    for klass, status in _STATUS.items():
        if isinstance(exc, klass):
            return status
    return 500


def _parse_program_field(value, role: str) -> dsl.MotionProgram:
    if isinstance(value, str):
        return dsl.parse_program(value, role)
    if isinstance(value, dict):
        program = dsl.program_from_json_dict(value)
        if program.role != role:
            raise DslError(f"program role {program.role!r} does not match field {role!r}")
        return program
    raise DslError(f"program must be a DSL string or JSON object, got {type(value).__name__}")


def _scene_from_payload(payload: dict) -> SceneMotion:
    if "scene" in payload:
        return SceneMotion.from_json_dict(payload["scene"])
    if "object" in payload and "camera" in payload:
        return SceneMotion.from_json_dict(payload)
    raise DslError("payload must carry a scene or object/camera tracks")


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="cinemotion", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[config.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    remote = RemoteBackend(config.remote) if config.remote else None
    gateway = PlannerGateway(remote=remote, default_backend=config.planner_backend)

    schema_body = dsl.schema_json().encode("utf-8")
    schema_etag = f'"{hashlib.sha256(schema_body).hexdigest()}"'

    @app.exception_handler(CinemotionError)
    async def _handle_toolkit_error(request: Request, exc: CinemotionError):
        return JSONResponse(status_code=_error_status(exc), content=exc.to_json_dict())

    @app.get("/v1/health")
    def health():
        return {"name": "cinemotion", "version": __version__, "status": "ok"}

    @app.get("/v1/schema")
    def get_schema(request: Request):
        if request.headers.get("if-none-match") == schema_etag:
            return Response(status_code=304, headers={"ETag": schema_etag})
        return Response(content=schema_body, media_type="application/json",
                        headers={"ETag": schema_etag})

    @app.post("/v1/compile")
    async def compile_endpoint(request: Request):
        payload = await request.json()
        program_obj = _parse_program_field(
            payload.get("program_obj", "free_form"), dsl.ROLE_OBJECT)
        program_cam = _parse_program_field(
            payload.get("program_cam", "free_form"), dsl.ROLE_CAMERA)
        seed = int(payload.get("seed", 0))
        cfg = CompileConfig()
        if "config" in payload and payload["config"]:
            raw = payload["config"]
            cfg = CompileConfig(
                start_center=tuple(raw.get("start_center", cfg.start_center)),
                extents=tuple(raw.get("extents", cfg.extents)),
            )
        scene = compile_scene(program_obj, program_cam, cfg, seed)
        return scene.to_json_dict()

    @app.post("/v1/plan")
    async def plan_endpoint(request: Request):
        payload = await request.json()
        text = payload.get("text", "")
        backend = payload.get("backend", config.planner_backend)
        program_obj, program_cam = gateway.plan(PlanRequest(text=text, backend=backend))
        from .planner import decompose

        parts = decompose(text)
        return {
            "program_obj": dsl.program_to_json_dict(program_obj),
            "program_cam": dsl.program_to_json_dict(program_cam),
            "dsl_obj": dsl.serialize_program(program_obj),
            "dsl_cam": dsl.serialize_program(program_cam),
            "decomposition": parts.to_json_dict(),
        }

    @app.post("/v1/refine")
    async def refine_endpoint(request: Request):
        payload = await request.json()
        program_obj = _parse_program_field(payload["program_obj"], dsl.ROLE_OBJECT)
        program_cam = _parse_program_field(payload["program_cam"], dsl.ROLE_CAMERA)
        result = gateway.refine(program_obj, program_cam, payload.get("instruction", ""))
        body = result.to_json_dict()
        body["dsl_obj"] = dsl.serialize_program(result.program_obj)
        body["dsl_cam"] = dsl.serialize_program(result.program_cam)
        return body

    @app.post("/v1/tag")
    async def tag_endpoint(request: Request):
        payload = await request.json()
        granularity = payload.get("granularity", "fine")
        out: dict = {}
        if "trajectory" in payload:
            traj = Trajectory.from_json_dict(payload["trajectory"])
            out["camera"] = _segment_report(traj, granularity)
            filt = dsl_round_trip_filter(traj)
            out["round_trip"] = filt.to_json_dict()
        else:
            scene = _scene_from_payload(payload)
            out["camera"] = _segment_report(scene.camera, granularity)
            out["object"] = _segment_report(scene.object, granularity)
        return out

    @app.post("/v1/render")
    async def render_endpoint(request: Request):
        payload = await request.json()
        scene = _scene_from_payload(payload)
        k = config.intrinsics
        if "intrinsics" in payload and payload["intrinsics"]:
            k = CameraIntrinsics.from_json_dict(payload["intrinsics"])
        fmt = request.query_params.get("format", "polylines")
        if fmt == "frames":
            import tempfile

            buffer = io.BytesIO()
            with tempfile.TemporaryDirectory() as tmp:
                export_scene(scene, tmp, k)
                with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as zf:
                    import pathlib

                    for path in sorted(pathlib.Path(tmp).iterdir()):
                        zf.writestr(path.name, path.read_bytes())
            buffer.seek(0)
            return StreamingResponse(buffer, media_type="application/zip")
        frames = render_scene(scene, k)
        return {"width": k.width, "height": k.height,
                "frames": [f.to_json_dict() for f in frames]}

    return app


def _segment_report(traj, granularity: str) -> dict:
    segments = []
    for (b0, b1), tclass, rclass in iter_segment_classes(traj, granularity):
        segments.append({
            "range": [b0, b1],
            "translation": tclass.label(),
            "rotation": rclass.label(),
        })
    return {"segments": segments}


def serve(config: ServiceConfig | None = None) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    config = config or ServiceConfig()
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
