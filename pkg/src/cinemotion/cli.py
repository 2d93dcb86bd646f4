"""Command-line interface: compile, plan, refine, corpus, eval, render, serve.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import json
import pathlib
import sys

import click

from . import __version__, dsl
from .compiler import CompileConfig, SceneMotion, Trajectory, \
    compile_object, compile_scene
from .corpus import SamplingConfig, generate_corpus
from .errors import CinemotionError, DslError
from .planner import PlannerGateway, PlanRequest, RemoteBackend, RemoteBackendConfig
from .render import CameraIntrinsics, export_scene
from .reports import report_table, write_histogram_figures, write_report_csv, \
    write_report_figure
from .tagging import dsl_round_trip_filter, f1_report, iter_segment_classes, \
    rotation_mae

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


@click.group(name="cinemotion")
@click.version_option(__version__)
def cli() -> None:
    """Motion-program toolkit: DSL programs to trajectories and back."""


def _echo_json(data) -> None:
    click.echo(json.dumps(data, indent=2))


def _gateway(backend: str, endpoint: str | None, model: str | None) -> PlannerGateway:
    remote = None
    if backend == "remote" or endpoint:
        cfg = RemoteBackendConfig(
            endpoint=endpoint or RemoteBackendConfig.endpoint,
            model=model or RemoteBackendConfig.model)
        remote = RemoteBackend(cfg)
    return PlannerGateway(remote=remote, default_backend=backend)


@cli.command("compile")
@click.argument("program")
@click.option("--role", type=click.Choice(["camera", "object", "scene"]), default="camera",
              help="Interpret PROGRAM for this role; 'scene' expects --obj-program too.")
@click.option("--obj-program", default="free_form", help="Object program for scene mode.")
@click.option("--seed", type=int, default=0)
@click.option("--start-center", nargs=3, type=float, default=(0.0, 0.0, -5.0))
@click.option("--out", type=click.Path(), default=None, help="Write JSON here instead of stdout.")
def compile_cmd(program, role, obj_program, seed, start_center, out) -> None:
    """Compile DSL source into trajectory JSON."""
    cfg = CompileConfig(start_center=tuple(start_center))
    if role == "object":
        track = compile_object(dsl.parse_program(program, "object"),
                               cfg.start_center, cfg.extents, seed)
        data = track.to_json_dict()
    elif role == "camera":
        scene = compile_scene(dsl.parse_program(obj_program, "object"),
                              dsl.parse_program(program, "camera"), cfg, seed)
        data = scene.camera.to_json_dict()
    else:
        scene = compile_scene(dsl.parse_program(obj_program, "object"),
                              dsl.parse_program(program, "camera"), cfg, seed)
        data = scene.to_json_dict()
    if out:
        pathlib.Path(out).write_text(json.dumps(data), encoding="utf-8")
    else:
        _echo_json(data)


@cli.command("plan")
@click.argument("text")
@click.option("--backend", type=click.Choice(["rules", "remote"]), default="rules")
@click.option("--endpoint", default=None, help="Remote chat endpoint URL.")
@click.option("--model", default=None, help="Remote model name.")
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON document.")
def plan_cmd(text, backend, endpoint, model, as_json) -> None:
    """Turn a natural-language prompt into object and camera programs."""
    gateway = _gateway(backend, endpoint, model)
    program_obj, program_cam = gateway.plan(PlanRequest(text=text, backend=backend))
    if as_json:
        _echo_json({
            "program_obj": dsl.program_to_json_dict(program_obj),
            "program_cam": dsl.program_to_json_dict(program_cam),
            "dsl_obj": dsl.serialize_program(program_obj),
            "dsl_cam": dsl.serialize_program(program_cam),
        })
    else:
        click.echo(f"object: {dsl.serialize_program(program_obj)}")
        click.echo(f"camera: {dsl.serialize_program(program_cam)}")


@cli.command("refine")
@click.argument("instruction")
@click.option("--obj", "obj_program", default="free_form", help="Current object program.")
@click.option("--cam", "cam_program", required=True, help="Current camera program.")
@click.option("--backend", type=click.Choice(["rules", "remote"]), default="rules")
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
def refine_cmd(instruction, obj_program, cam_program, backend, endpoint, model) -> None:
    """Apply a relative edit instruction to existing programs."""
    gateway = _gateway(backend, endpoint, model)
    result = gateway.refine(dsl.parse_program(obj_program, "object"),
                            dsl.parse_program(cam_program, "camera"), instruction)
    body = result.to_json_dict()
    body["dsl_obj"] = dsl.serialize_program(result.program_obj)
    body["dsl_cam"] = dsl.serialize_program(result.program_cam)
    _echo_json(body)


@cli.command("gen-corpus")
@click.option("--count", type=int, default=None, help="Record count (overrides config).")
@click.option("--seed", type=int, default=None, help="Global seed (overrides config).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True, help="JSONL output path.")
@click.option("--manifest", type=click.Path(), default=None)
@click.option("--traj-dir", type=click.Path(), default=None,
              help="Write trajectories as sidecar files in this directory.")
@click.option("--figures", type=click.Path(), default=None,
              help="Render histogram figures into this directory.")
@click.option("--start", type=int, default=0, help="First record index (resume support).")
def gen_corpus_cmd(count, seed, config_path, out, manifest, traj_dir, figures, start) -> None:
    """Generate the paired text-trajectory corpus as JSONL."""
    if config_path:
        cfg = SamplingConfig.from_json_dict(
            json.loads(pathlib.Path(config_path).read_text(encoding="utf-8")))
    else:
        cfg = SamplingConfig()
    if count is not None:
        cfg.record_count = count
    if seed is not None:
        cfg.seed = seed
    manifest_data = generate_corpus(cfg, out, manifest, traj_dir, start=start)
    if figures:
        write_histogram_figures(manifest_data, figures)
    click.echo(f"wrote {manifest_data['record_count']} records to {out}", err=True)


def _load_trajectory(path: pathlib.Path) -> Trajectory:
    data = json.loads(path.read_text(encoding="utf-8"))
    if "camera" in data:
        return Trajectory.from_json_dict(data["camera"])
    return Trajectory.from_json_dict(data)


@cli.command("tag")
@click.argument("trajectory", type=click.Path(exists=True))
@click.option("--granularity", type=click.Choice(["coarse", "fine"]), default="fine")
def tag_cmd(trajectory, granularity) -> None:
    """Classify a trajectory's per-segment translation and rotation."""
    traj = _load_trajectory(pathlib.Path(trajectory))
    segments = []
    for (b0, b1), tclass, rclass in iter_segment_classes(traj, granularity):
        segments.append({"range": [b0, b1], "translation": tclass.label(),
                         "rotation": rclass.label()})
    _echo_json({"granularity": granularity, "segments": segments})


@cli.command("eval")
@click.option("--pred", "pred_dir", type=click.Path(exists=True), required=True)
@click.option("--ref", "ref_dir", type=click.Path(exists=True), required=True)
@click.option("--granularity", type=click.Choice(["coarse", "fine"]), default="fine")
@click.option("--out", type=click.Path(), default=None, help="Report JSON path.")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Per-class CSV path.")
@click.option("--figures", type=click.Path(), default=None, help="Figure output directory.")
def eval_cmd(pred_dir, ref_dir, granularity, out, csv_path, figures) -> None:
    """Motion-tagging F1 and rotation MAE between two trajectory directories."""
    pred_dir = pathlib.Path(pred_dir)
    ref_dir = pathlib.Path(ref_dir)
    names = sorted(p.name for p in ref_dir.glob("*.json"))
    if not names:
        raise DslError(f"no trajectory JSON files in {ref_dir}")
    pred_trans, ref_trans, pred_rot, ref_rot = [], [], [], []
    preds, refs = [], []
    for name in names:
        pred_path = pred_dir / name
        if not pred_path.exists():
            raise DslError(f"missing prediction for {name}")
        pred = _load_trajectory(pred_path)
        ref = _load_trajectory(ref_dir / name)
        preds.append(pred)
        refs.append(ref)
        for (_, tclass, rclass) in iter_segment_classes(pred, granularity):
            pred_trans.append(tclass)
            pred_rot.append(rclass)
        for (_, tclass, rclass) in iter_segment_classes(ref, granularity):
            ref_trans.append(tclass)
            ref_rot.append(rclass)
    trans_report = f1_report(pred_trans, ref_trans)
    rot_report = f1_report(pred_rot, ref_rot)
    mae = rotation_mae(preds, refs)
    click.echo(report_table(trans_report, f"{granularity} translation"))
    click.echo("")
    click.echo(report_table(rot_report, "rotation"))
    click.echo(f"\nrotation MAE (deg): yaw={mae[0]:.4f} pitch={mae[1]:.4f} roll={mae[2]:.4f}")
    if out:
        pathlib.Path(out).write_text(json.dumps({
            "translation": trans_report.to_json_dict(),
            "rotation": rot_report.to_json_dict(),
            "rotation_mae_deg": {"yaw": mae[0], "pitch": mae[1], "roll": mae[2]},
        }, indent=2), encoding="utf-8")
    if csv_path:
        write_report_csv(trans_report, csv_path)
    if figures:
        fig_dir = pathlib.Path(figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        write_report_figure(trans_report, fig_dir / "translation_f1.png",
                            f"{granularity} translation F1")
        write_report_figure(rot_report, fig_dir / "rotation_f1.png", "rotation F1")


@cli.command("filter")
@click.option("--in", "in_dir", type=click.Path(exists=True), required=True,
              help="Directory of external trajectory JSON files.")
@click.option("--threshold", type=float, default=0.85)
@click.option("--accept-list", type=click.Path(), default=None)
@click.option("--reject-list", type=click.Path(), default=None)
def filter_cmd(in_dir, threshold, accept_list, reject_list) -> None:
    """Round-trip external trajectories through the grammar and split them."""
    in_dir = pathlib.Path(in_dir)
    accepted, rejected = [], []
    for path in sorted(in_dir.glob("*.json")):
        traj = _load_trajectory(path)
        result = dsl_round_trip_filter(traj, threshold)
        row = {"file": path.name, **result.to_json_dict()}
        (accepted if result.accepted else rejected).append(row)
    if accept_list:
        pathlib.Path(accept_list).write_text(
            "\n".join(json.dumps(r) for r in accepted) + "\n", encoding="utf-8")
    if reject_list:
        pathlib.Path(reject_list).write_text(
            "\n".join(json.dumps(r) for r in rejected) + "\n", encoding="utf-8")
    _echo_json({"accepted": len(accepted), "rejected": len(rejected)})


@cli.command("render")
@click.argument("scene", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True, help="Output frame directory.")
@click.option("--format", "image_format", type=click.Choice(["ppm", "png"]), default="ppm")
@click.option("--fov", type=float, default=60.0)
@click.option("--width", type=int, default=640)
@click.option("--height", type=int, default=360)
def render_cmd(scene, out, image_format, fov, width, height) -> None:
    """Render control frames (box + global cube wireframes) for a scene."""
    data = json.loads(pathlib.Path(scene).read_text(encoding="utf-8"))
    scene_motion = SceneMotion.from_json_dict(data)
    k = CameraIntrinsics(vertical_fov=fov, width=width, height=height)
    manifest = export_scene(scene_motion, out, k, image_format)
    click.echo(f"wrote {len(manifest['frames'])} frames to {out}", err=True)


@cli.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Service config file (CINEMOTION_* env vars override it).")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--backend", type=click.Choice(["rules", "remote"]), default=None)
@click.option("--endpoint", default=None, help="Remote planner endpoint URL.")
@click.option("--model", default=None, help="Remote planner model name.")
def serve_cmd(config_path, host, port, backend, endpoint, model) -> None:
    """Run the HTTP service."""
    import dataclasses

    from .service import ServiceConfig, serve

    cfg = ServiceConfig.load(config_path)
    if host:
        cfg = dataclasses.replace(cfg, host=host)
    if port:
        cfg = dataclasses.replace(cfg, port=port)
    if backend:
        cfg = dataclasses.replace(cfg, planner_backend=backend)
    if endpoint:
        base = cfg.remote or RemoteBackendConfig()
        cfg = dataclasses.replace(cfg, remote=dataclasses.replace(
            base, endpoint=endpoint, model=model or base.model))
    serve(cfg)


def main(argv: list[str] | None = None) -> int:
    """Entry point with deterministic exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.exceptions.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except CinemotionError as exc:
        click.echo(f"error [{exc.code}]: {exc.message}", err=True)
        return EXIT_VALIDATION
    except (OSError, RuntimeError, ValueError) as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
