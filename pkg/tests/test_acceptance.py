"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -s`` to see one line per criterion.
Each criterion also enforces its runtime budget.
"""

import json
import math
import time
import warnings
from contextlib import contextmanager

import numpy as np
import pytest

from cinemotion import dsl, kinematics as kin, tagging
from cinemotion.cli import main as cli_main
from cinemotion.compiler import (
    FRAME_COUNT,
    Trajectory,
    compile_camera,
    compile_object,
    compile_scene,
    segmentize,
)
from cinemotion.corpus import SamplingConfig, generate_corpus, sample_program
from cinemotion.errors import BackendUnavailable, PlanRejected, PlanTimeout
from cinemotion.kinematics import Pose
from cinemotion.planner import PlannerGateway, PlanRequest, RemoteBackend, \
    RemoteBackendConfig
from cinemotion.render import CameraIntrinsics, ControlFrame, project_point, \
    rasterize_frame, render_scene
from cinemotion.tagging import dsl_round_trip_filter, f1_report, iter_segment_classes


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"{name} took {elapsed:.2f}s (budget {budget_s}s)"
    print(f"[PASS] {name} ({elapsed:.2f}s)")


def cam_p(text):
    return dsl.parse_program(text, "camera")


def obj_p(text):
    return dsl.parse_program(text, "object")


# --- reference classification tables, independent of the tagger ----------------

_REF_LEVEL = {"near": 1, "far": 3}
_REF_SIGN = {
    "t_x": {"left": -1, "right": 1},
    "t_y": {"down": -1, "up": 1},
    "t_z": {"in": -1, "out": 1},
}


def ref_fine_level(key: str, token: str) -> int:
    if token == "no":
        return 0
    parts = token.split("_")
    if len(parts) == 2:
        level = _REF_LEVEL[parts[0]]
        word = parts[1]
    else:
        level = 2
        word = parts[0]
    return _REF_SIGN[key][word] * level


def ref_rotation_bin(angle_deg: float) -> int:
    theta = kin.wrap_degrees(angle_deg)
    if theta > 180.0 - 1e-6:  # the +/-180 seam is one angle, one bin
        theta = -180.0
    return min(max(int(math.floor((theta + 180.0) / 30.0 + 1e-9)), 0), 11)


def ref_object_level(angle_deg: float) -> int:
    mag = abs(angle_deg) + 1e-9
    if mag < 15.0:
        return 0
    level = 1 if mag < 60.0 else 2
    return level if angle_deg > 0 else -level


def test_structural_constants():
    with criterion("structural constants (T=21, bounds, class spaces)", 1.0):
        scene = compile_scene(
            obj_p("free_form | free_form | free_form | free_form"),
            cam_p("free_form | free_form | free_form | free_form"))
        assert len(scene.camera.poses) == 21
        assert len(scene.object.centers) == 21
        assert scene.camera.segment_bounds == [0, 5, 10, 15, 20]
        assert scene.object.segment_bounds == [0, 5, 10, 15, 20]
        assert segmentize(4) == [0, 5, 10, 15, 20]
        assert len(tagging.class_space("coarse")) == 27
        assert len(tagging.class_space("fine")) == 343
        assert len(tagging.class_space("object_rot")) == 25
        assert len(tagging.class_space("camera_rot")) == 1728


def test_round_trip_f1():
    with criterion("round-trip macro-F1 = 1.0, rotation MAE = 0 (1e-9)", 10.0):
        config = SamplingConfig(seed=101)
        rng = np.random.default_rng(101)
        pred_trans, ref_trans = [], []
        pred_rot, ref_rot = [], []
        mae_sum = [0.0, 0.0, 0.0]
        mae_count = 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for i in range(1000):
                role = "camera" if i % 2 == 0 else "object"
                program = sample_program(role, config, rng, freeform_only=True)
                if role == "camera":
                    traj = compile_camera(program, None, 0)
                else:
                    traj = compile_object(program)
                for (rng_pair, tclass, rclass), tag in zip(
                        iter_segment_classes(traj, "fine"), program.tags):
                    # reference translation class from the program tokens
                    expected_levels = tuple(
                        ref_fine_level(k, tag.resolved(k)) for k in ("t_x", "t_y", "t_z"))
                    pred_trans.append(tclass)
                    ref_trans.append(tagging.TranslationClass("fine", expected_levels))
                    # reference rotation class from the program angles
                    yaw = float(tag.angle("yaw"))
                    pitch = float(tag.angle("pitch"))
                    roll = float(tag.angle("roll")) if role == "camera" else 0.0
                    if role == "camera":
                        cy, cp, cr = kin.canonical_euler(yaw, pitch, roll)
                        expected = tagging.RotationClass(
                            "camera_fine", (ref_rotation_bin(cy), ref_rotation_bin(cp),
                                            ref_rotation_bin(cr)))
                        measured = tagging.net_rotation(traj, rng_pair)
                        for k, exp_angle in enumerate((cy, cp, cr)):
                            mae_sum[k] += abs(kin.wrap_degrees(measured[k] - exp_angle))
                    else:
                        expected = tagging.RotationClass(
                            "object", (ref_object_level(yaw), ref_object_level(pitch)))
                        measured = tagging.net_rotation(traj, rng_pair)
                        for k, exp_angle in enumerate((yaw, pitch)):
                            mae_sum[k] += abs(measured[k] - exp_angle)
                    mae_count += 1
                    pred_rot.append(rclass)
                    ref_rot.append(expected)
        trans_report = f1_report(pred_trans, ref_trans)
        rot_report = f1_report(pred_rot, ref_rot)
        assert trans_report.macro_f1 == 1.0, f"translation macro-F1 {trans_report.macro_f1}"
        assert rot_report.macro_f1 == 1.0, f"rotation macro-F1 {rot_report.macro_f1}"
        assert trans_report.micro_f1 == 1.0
        assert rot_report.micro_f1 == 1.0
        for k in range(3):
            assert mae_sum[k] / mae_count < 1e-9, f"axis {k} MAE {mae_sum[k] / mae_count}"


def test_geometric_oracles():
    with criterion("geometric oracles (orbit, tail, framing, easing)", 5.0):
        # orbit closure and constant radius
        scene = compile_scene(obj_p("free_form"), cam_p("orbit_track deg_360"))
        p0 = scene.camera.poses[0].position
        pN = scene.camera.poses[-1].position
        assert max(abs(a - b) for a, b in zip(p0, pN)) < 1e-6
        radii = [kin.vec_norm(kin.vec_sub(p.position, c))
                 for p, c in zip(scene.camera.poses, scene.object.centers)]
        assert max(radii) - min(radii) < 1e-6
        # tail hard-follow offset constancy
        scene = compile_scene(obj_p("free_form t_x_right t_z_in"), cam_p("tail_track"))
        offsets = [kin.vec_sub(p.position, c)
                   for p, c in zip(scene.camera.poses, scene.object.centers)]
        for off in offsets:
            assert max(abs(a - b) for a, b in zip(off, offsets[0])) < 1e-9
        # rotation-track framing error per frame
        scene = compile_scene(obj_p("free_form t_x_far_right t_y_up"),
                              cam_p("rotation_track"))
        for pose, center in zip(scene.camera.poses, scene.object.centers):
            view = kin.quat_rotate(pose.orientation, (0.0, 0.0, -1.0))
            dn = kin.vec_normalize(kin.vec_sub(center, pose.position))
            cross = kin.vec_cross(view, dn)
            angle = math.atan2(kin.vec_norm(cross), kin.vec_dot(view, dn))
            assert angle < 1e-6
        # easing endpoint exactness and monotonicity
        grid = [i / 1000 for i in range(1001)]
        for kind in kin.EASING_KINDS:
            assert kin.ease(kind, 0.0) == 0.0
            assert kin.ease(kind, 1.0) == 1.0
            values = [kin.ease(kind, u) for u in grid]
            assert all(b >= a for a, b in zip(values, values[1:]))


def test_corpus_statistics(tmp_path):
    with criterion("corpus statistics (10k records, weights, determinism)", 60.0):
        from scipy import stats

        config = SamplingConfig(record_count=10_000, seed=404)
        manifest_a = generate_corpus(config, tmp_path / "a.jsonl")
        generate_corpus(config, tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

        # segment-count weights: 0.35 / 0.30 / 0.35 within +/-1%, chi-square p > 0.01
        for role in ("object", "camera"):
            hist = manifest_a["histograms"]["segment_count"][role]
            counts = {int(k): v for k, v in hist.items()}
            total = sum(counts.values())
            observed = [counts.get(1, 0), counts.get(2, 0),
                        counts.get(3, 0) + counts.get(4, 0)]
            expected = [0.35 * total, 0.30 * total, 0.35 * total]
            for obs, exp in zip(observed, expected):
                assert abs(obs - exp) / total <= 0.01, (role, obs / total, exp / total)
            chi = stats.chisquare(observed, expected)
            assert chi.pvalue > 0.01, (role, chi.pvalue)
            # 3-4 bucket splits evenly
            pair = counts.get(3, 0) + counts.get(4, 0)
            assert abs(counts.get(3, 0) / pair - 0.5) < 0.03

        # per-class histogram within +/-2% of the configured weights
        def sign_marginals(axis):
            weights = config.value_weights[f"object.{axis}"]
            total_w = sum(weights.values())
            neg = sum(w for t, w in weights.items()
                      if t != "no" and ("left" in t or "down" in t or "in" in t))
            pos = sum(w for t, w in weights.items()
                      if t != "no" and ("right" in t or "up" in t or "out" in t))
            return {-1: neg / total_w, 0: weights["no"] / total_w, 1: pos / total_w}

        marg = {axis: sign_marginals(axis) for axis in ("t_x", "t_y", "t_z")}
        hist = manifest_a["histograms"]["object_coarse_translation"]
        sign_of = {"-": -1, "0": 0, "+": 1}
        total = sum(hist.values())
        for cls in tagging.class_space("coarse"):
            key = cls.levels
            expected_p = marg["t_x"][key[0]] * marg["t_y"][key[1]] * marg["t_z"][key[2]]
            label = cls.label()
            observed_p = hist.get(label, 0) / total
            assert abs(observed_p - expected_p) <= 0.02, (label, observed_p, expected_p)
        assert all(sign_of[s] in (-1, 0, 1)
                   for label in hist for s in label.split("/"))


def test_round_trip_filter_self_consistency():
    with criterion("DSL round-trip filter (accept clean, reject static/noise)", 30.0):
        config = SamplingConfig(seed=505)
        rng = np.random.default_rng(505)
        trajectories = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            while len(trajectories) < 1000:
                tags = []
                for _ in range(4):
                    p = sample_program("camera", config, rng, freeform_only=True)
                    tags.append(p.tags[0])
                program = dsl.MotionProgram("camera", tuple(tags))
                if not any(t.modifiers for t in program.tags):
                    continue  # fully static programs are exercised separately
                trajectories.append(compile_camera(program, None, 0))
            for traj in trajectories:
                result = dsl_round_trip_filter(traj)
                assert result.accepted, result.reason
                assert result.score >= 0.95, result.score

            # all-static trajectories are rejected outright
            static = compile_camera(cam_p("free_form"), None, 0)
            result = dsl_round_trip_filter(static)
            assert not result.accepted and result.reason == "static"

            # sigma = 1.0 corruption is rejected at >= 95%
            rejected = 0
            for traj in trajectories[:1000]:
                noisy_poses = [Pose(tuple(np.asarray(p.position)
                                          + rng.normal(0.0, 1.0, 3)), p.orientation)
                               for p in traj.poses]
                noisy = Trajectory(noisy_poses, traj.segment_bounds)
                if not dsl_round_trip_filter(noisy).accepted:
                    rejected += 1
            assert rejected >= 950, f"only {rejected}/1000 rejected"


def test_renderer_goldens(tmp_path):
    with criterion("renderer goldens (pinhole, Bresenham, centering)", 30.0):
        k = CameraIntrinsics(vertical_fov=60.0, width=640, height=360)
        identity = Pose((0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))
        # pinhole center projection is exact
        assert project_point((0.0, 0.0, -5.0), identity, k) == (320.0, 180.0)
        # off-axis golden: 30-degree horizontal offset lands at x = 500
        x = math.tan(math.radians(30.0)) * 5.0
        px = project_point((x, 0.0, -5.0), identity, k)
        assert abs(px[0] - 500.0) < 1e-9 and abs(px[1] - 180.0) < 1e-9
        # Bresenham pixel counts are exact
        frame = ControlFrame(32, 32, [{"label": "bbox", "color": [0, 255, 0],
                                       "points": [[0.0, 10.0], [9.0, 10.0]]}])
        lit = sum(1 for i in range(0, 32 * 32 * 3, 3)
                  if rasterize_frame(frame)[i:i + 3] != b"\x00\x00\x00")
        assert lit == 10
        # tail-track scenes hold the subject within 2 px of center, 100 scenes
        config = SamplingConfig(seed=606)
        rng = np.random.default_rng(606)
        for _ in range(100):
            program_obj = sample_program("object", config, rng)
            scene = compile_scene(program_obj, cam_p("tail_track"))
            for f in range(FRAME_COUNT):
                px = project_point(scene.object.centers[f], scene.camera.poses[f], k)
                assert px is not None
                assert abs(px[0] - 320.0) <= 2.0 and abs(px[1] - 180.0) <= 2.0
        # raster output is byte-identical across runs
        scene = compile_scene(obj_p("free_form t_x_right"), cam_p("orbit_track deg_180"))
        frames = render_scene(scene, k)
        first = [rasterize_frame(fr) for fr in frames]
        second = [rasterize_frame(fr) for fr in frames]
        assert first == second


def test_planner_validity_gate():
    with criterion("planner validity gate (10k fuzzed remote replies)", 30.0):
        rng = np.random.default_rng(707)
        fragments = ("orbit_track", "free_form", "tail_track", "rotation_track",
                     "deg_999", "deg_360", "t_x_left", "t_x_sideways", "yaw_30",
                     "yaw_17", "|", "||", "```", "object:", "camera:", "wat",
                     "follow_style_lazy", "speed_fast", "\n\n", "push_in_0.3",
                     "the camera orbits", "{}")

        class FuzzTransport:
            def __init__(self, seed_rng):
                self.rng = seed_rng

            def __call__(self, url, body, headers, timeout):
                n = int(self.rng.integers(1, 8))
                reply = " ".join(fragments[int(self.rng.integers(len(fragments)))]
                                 for _ in range(n))
                return {"choices": [{"message": {"content": reply}}]}

        backend = RemoteBackend(RemoteBackendConfig(), transport=FuzzTransport(rng))
        gateway = PlannerGateway(remote=backend, default_backend="remote")
        successes = 0
        failures = 0
        for _ in range(10_000):
            try:
                program_obj, program_cam = gateway.plan(
                    PlanRequest(text="move the camera", backend="remote"))
            except (PlanRejected, BackendUnavailable, PlanTimeout):
                failures += 1
                continue
            dsl.validate_program(program_obj)
            dsl.validate_program(program_cam)
            assert program_obj.role == "object" and program_cam.role == "camera"
            successes += 1
        assert successes + failures == 10_000
        assert successes > 0 and failures > 0


def test_end_to_end_cli(tmp_path, capsys):
    with criterion("end-to-end CLI plan/compile/tag/render (3 prompts)", 10.0):
        prompts = {
            "orbit": "the camera orbits the subject in a full circle",
            "tail": "the camera follows the car from behind",
            "rotation": "the camera pans to keep the subject framed",
        }
        for name, prompt in prompts.items():
            code = cli_main(["plan", "--json", prompt])
            assert code == 0
            plan = json.loads(capsys.readouterr().out)
            scene_path = tmp_path / f"{name}.json"
            code = cli_main(["compile", "--role", "scene", plan["dsl_cam"],
                             "--obj-program", plan["dsl_obj"],
                             "--out", str(scene_path)])
            assert code == 0
            capsys.readouterr()
            code = cli_main(["tag", str(scene_path)])
            assert code == 0
            tags = json.loads(capsys.readouterr().out)
            assert tags["segments"]
            code = cli_main(["render", str(scene_path),
                             "--out", str(tmp_path / f"{name}_frames")])
            assert code == 0
            capsys.readouterr()
            assert len(list((tmp_path / f"{name}_frames").glob("*.ppm"))) == 21

            scene = json.loads(scene_path.read_text())
            cam_frames = scene["camera"]["frames"]
            obj_frames = scene["object"]["frames"]
            if name == "orbit":
                p0, pN = cam_frames[0]["p"], cam_frames[-1]["p"]
                assert max(abs(a - b) for a, b in zip(p0, pN)) < 1e-6
            elif name == "tail":
                offs = [tuple(f["p"][i] - c["c"][i] for i in range(3))
                        for f, c in zip(cam_frames, obj_frames)]
                for off in offs:
                    assert max(abs(a - b) for a, b in zip(off, offs[0])) < 1e-9
            else:
                for f, c in zip(cam_frames, obj_frames):
                    pose = Pose(tuple(f["p"]), tuple(f["q"]))
                    view = kin.quat_rotate(pose.orientation, (0.0, 0.0, -1.0))
                    dn = kin.vec_normalize(kin.vec_sub(tuple(c["c"]), pose.position))
                    cross = kin.vec_cross(view, dn)
                    angle = math.atan2(kin.vec_norm(cross), kin.vec_dot(view, dn))
                    assert angle < 1e-6
