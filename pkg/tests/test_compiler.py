"""Compiler tests: segmentation, integration semantics, tracking primitives."""

import json
import math

import pytest

from cinemotion import dsl, kinematics as kin
from cinemotion.compiler import (
    BoxTrack,
    FRAME_COUNT,
    SceneMotion,
    Trajectory,
    compile_camera,
    compile_object,
    compile_scene,
    segmentize,
)
from cinemotion.errors import DslError, MissingTarget


def obj_p(text):
    return dsl.parse_program(text, "object")


def cam_p(text):
    return dsl.parse_program(text, "camera")


def view_angle_to(pose, point):
    """Angle in radians between the camera view axis and the point direction."""
    view = kin.quat_rotate(pose.orientation, (0.0, 0.0, -1.0))
    d = kin.vec_sub(point, pose.position)
    dn = kin.vec_normalize(d)
    cross = kin.vec_cross(view, dn)
    return math.atan2(kin.vec_norm(cross), kin.vec_dot(view, dn))


class TestSegmentize:
    def test_table(self):
        assert segmentize(1) == [0, 20]
        assert segmentize(2) == [0, 10, 20]
        assert segmentize(3) == [0, 7, 14, 20]
        assert segmentize(4) == [0, 5, 10, 15, 20]

    def test_out_of_range(self):
        with pytest.raises(DslError):
            segmentize(0)
        with pytest.raises(DslError):
            segmentize(5)


class TestCompileObject:
    def test_static(self):
        track = compile_object(obj_p("free_form"), (1.0, 2.0, -3.0))
        assert len(track) == FRAME_COUNT
        assert all(c == (1.0, 2.0, -3.0) for c in track.centers)
        assert all(yp == (0.0, 0.0) for yp in track.yaw_pitch)

    def test_forward_unit(self):
        track = compile_object(obj_p("free_form t_z_in"), (0.0, 0.0, -5.0))
        assert track.centers[-1] == pytest.approx((0.0, 0.0, -6.0), abs=1e-12)
        zs = [c[2] for c in track.centers]
        assert all(b <= a for a, b in zip(zs, zs[1:]))  # monotone toward -z

    def test_turn_while_advancing_matches_hand_integration(self):
        # independent oracle: 20 explicit steps of (4.5 deg yaw, 0.05 forward)
        track = compile_object(obj_p("free_form yaw_90 t_z_in"), (0.0, 0.0, 0.0))
        pos = (0.0, 0.0, 0.0)
        for i in range(1, 21):
            yaw = 90.0 * i / 20.0
            q = kin.turret_quat(yaw, 0.0)
            pos = kin.vec_add(pos, kin.quat_rotate(q, (0.0, 0.0, -0.05)))
        assert track.centers[-1] == pytest.approx(pos, abs=1e-12)
        assert abs(track.centers[-1][0]) > 0.1  # curvature bends the path

    def test_levels(self):
        track = compile_object(obj_p("free_form t_x_far_right t_y_near_up"), (0, 0, 0))
        assert track.centers[-1] == pytest.approx((2.0, 0.5, 0.0), abs=1e-12)

    def test_easing_does_not_change_net(self):
        for kind in ("in", "out", "in_out", "out_in"):
            program = dsl.MotionProgram("object", (dsl.MotionTag(
                "free_form", {"t_x": "right"}),))
            track = compile_object(program, (0, 0, 0))
            assert track.centers[-1] == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)

    def test_bad_extents(self):
        with pytest.raises(DslError):
            compile_object(obj_p("free_form"), extents=(0.0, 0.5, 0.5))


class TestCompileCameraFreeform:
    def test_static_identity(self):
        traj = compile_camera(cam_p("free_form"))
        assert len(traj) == FRAME_COUNT
        for pose in traj.poses:
            assert pose.position == (0.0, 0.0, 0.0)
            assert pose.orientation == (1.0, 0.0, 0.0, 0.0)

    def test_frame0_is_identity_always(self):
        traj = compile_camera(cam_p("free_form t_x_left yaw_45 | free_form t_y_up"))
        assert traj.poses[0].position == (0.0, 0.0, 0.0)
        assert traj.poses[0].orientation == (1.0, 0.0, 0.0, 0.0)

    def test_six_dof(self):
        traj = compile_camera(cam_p("free_form roll_45"))
        up = kin.quat_rotate(traj.poses[-1].orientation, (0, 1, 0))
        s = math.sin(math.radians(45))
        # positive free-form roll turns about local -z: image-up tilts toward +x
        assert up == pytest.approx((s, math.cos(math.radians(45)), 0.0), abs=1e-9)


class TestOrbit:
    def test_full_circle_closure(self):
        scene = compile_scene(obj_p("free_form"), cam_p("orbit_track deg_360"))
        p0 = scene.camera.poses[0].position
        pN = scene.camera.poses[-1].position
        assert max(abs(a - b) for a, b in zip(p0, pN)) < 1e-6

    def test_constant_radius(self):
        scene = compile_scene(obj_p("free_form"), cam_p("orbit_track deg_360"))
        radii = [kin.vec_norm(kin.vec_sub(p.position, c))
                 for p, c in zip(scene.camera.poses, scene.object.centers)]
        assert max(radii) - min(radii) < 1e-6

    def test_spiral_changes_radius(self):
        scene = compile_scene(obj_p("free_form"), cam_p("orbit_track spiral_in_0.5"))
        r0 = kin.vec_norm(kin.vec_sub(scene.camera.poses[0].position,
                                      scene.object.centers[0]))
        rN = kin.vec_norm(kin.vec_sub(scene.camera.poses[-1].position,
                                      scene.object.centers[-1]))
        assert rN == pytest.approx(0.5 * r0, rel=1e-9)

    def test_direction_sign(self):
        cw = compile_scene(obj_p("free_form"), cam_p("orbit_track deg_90 dir_cw"))
        ccw = compile_scene(obj_p("free_form"), cam_p("orbit_track deg_90 dir_ccw"))
        # default plane_axis y: ccw sweeps toward +x first (right-hand rule)
        assert ccw.camera.poses[-1].position[0] > 1.0
        assert cw.camera.poses[-1].position[0] < -1.0

    def test_looks_at_object_throughout(self):
        scene = compile_scene(obj_p("free_form t_x_right"), cam_p("orbit_track deg_180"))
        for f in range(FRAME_COUNT):
            angle = view_angle_to(scene.camera.poses[f], scene.object.centers[f])
            assert angle < 1e-6

    def test_aerial_raises_camera(self):
        scene = compile_scene(obj_p("free_form"), cam_p("orbit_track ver_aerial"))
        assert scene.camera.poses[-1].position[1] > 2.0

    def test_missing_target(self):
        with pytest.raises(MissingTarget):
            compile_camera(cam_p("orbit_track deg_90"), None)


class TestTail:
    def test_hard_follow_offset_constant(self):
        scene = compile_scene(obj_p("free_form t_x_right"), cam_p("tail_track"))
        offsets = [kin.vec_sub(p.position, c)
                   for p, c in zip(scene.camera.poses, scene.object.centers)]
        for off in offsets:
            assert max(abs(a - b) for a, b in zip(off, offsets[0])) < 1e-9

    def test_displacement_transfer(self):
        scene = compile_scene(obj_p("free_form t_x_right"), cam_p("tail_track"))
        dx = scene.camera.poses[-1].position[0] - scene.camera.poses[0].position[0]
        assert dx == pytest.approx(1.0, abs=1e-9)

    def test_lazy_lags_behind(self):
        scene = compile_scene(obj_p("free_form t_x_right"),
                              cam_p("tail_track follow_style_lazy"))
        dx = scene.camera.poses[-1].position[0]
        assert 0.0 < dx < 1.0

    def test_amp_scales(self):
        scene = compile_scene(obj_p("free_form t_x_right"), cam_p("tail_track amp_all_1.5"))
        dx = scene.camera.poses[-1].position[0]
        assert dx == pytest.approx(1.5, abs=1e-9)

    def test_mirror_flips(self):
        scene = compile_scene(obj_p("free_form t_x_right"), cam_p("tail_track mirror_axis_x"))
        dx = scene.camera.poses[-1].position[0]
        assert dx == pytest.approx(-1.0, abs=1e-9)

    def test_follow_axis_restricts(self):
        scene = compile_scene(obj_p("free_form t_x_right t_y_up"),
                              cam_p("tail_track follow_axis_y"))
        final = scene.camera.poses[-1].position
        assert final[0] == pytest.approx(0.0, abs=1e-9)  # x frozen at entry
        assert final[1] == pytest.approx(1.0, abs=1e-9)

    def test_dolly_closes_distance(self):
        scene = compile_scene(obj_p("free_form"), cam_p("tail_track dolly_in_0.5"))
        d0 = kin.vec_norm(kin.vec_sub(scene.camera.poses[0].position,
                                      scene.object.centers[0]))
        dN = kin.vec_norm(kin.vec_sub(scene.camera.poses[-1].position,
                                      scene.object.centers[-1]))
        assert dN == pytest.approx(0.5 * d0, rel=1e-9)

    def test_dont_look_holds_orientation(self):
        scene = compile_scene(obj_p("free_form t_x_far_right"),
                              cam_p("tail_track dont_look_dont_look mirror_axis_x"))
        q0 = scene.camera.poses[0].orientation
        for pose in scene.camera.poses:
            assert pose.orientation == q0

    def test_lead_moves_ahead(self):
        scene = compile_scene(obj_p("free_form t_z_out"), cam_p("tail_track lead_lead"))
        # object moves toward +z; offset starts behind (-z side of velocity)
        # and must be reflected to the front half-space
        off = kin.vec_sub(scene.camera.poses[1].position, scene.object.centers[1])
        assert off[2] > 0


class TestRotationTrack:
    def test_position_frozen(self):
        scene = compile_scene(obj_p("free_form t_x_far_right"), cam_p("rotation_track"))
        for pose in scene.camera.poses:
            assert pose.position == (0.0, 0.0, 0.0)

    def test_framing_error_tiny(self):
        scene = compile_scene(obj_p("free_form t_x_far_right t_y_up"),
                              cam_p("rotation_track"))
        for f in range(FRAME_COUNT):
            assert view_angle_to(scene.camera.poses[f], scene.object.centers[f]) < 1e-6

    def test_pan_only_keeps_pitch(self):
        scene = compile_scene(obj_p("free_form t_y_far_up"),
                              cam_p("rotation_track rot_axis_pan"))
        for pose in scene.camera.poses:
            _, pitch, _, _ = kin.euler_of_quat(pose.orientation)
            assert pitch == pytest.approx(0.0, abs=1e-9)

    def test_push_moves_toward_object(self):
        scene = compile_scene(obj_p("free_form"), cam_p("rotation_track push_in_0.5"))
        dN = kin.vec_norm(kin.vec_sub(scene.camera.poses[-1].position,
                                      scene.object.centers[-1]))
        assert dN == pytest.approx(2.5, abs=1e-9)  # half of the 5-unit start distance

    def test_world_move_whole_segment(self):
        scene = compile_scene(obj_p("free_form"),
                              cam_p("rotation_track world_move_1_truck_right_1.0"))
        assert scene.camera.poses[-1].position == pytest.approx((1.0, 0, 0), abs=1e-9)
        # look-at compensation keeps the object framed
        for f in range(FRAME_COUNT):
            assert view_angle_to(scene.camera.poses[f], scene.object.centers[f]) < 1e-6

    def test_world_move_halves(self):
        scene = compile_scene(
            obj_p("free_form"),
            cam_p("rotation_track world_move_1_truck_right_1.0 world_move_2_pedestal_up_0.5"))
        mid = scene.camera.poses[10].position
        final = scene.camera.poses[-1].position
        assert mid == pytest.approx((1.0, 0.0, 0.0), abs=1e-9)
        assert final == pytest.approx((1.0, 0.5, 0.0), abs=1e-9)

    def test_world_move_disables_push(self):
        scene = compile_scene(
            obj_p("free_form"),
            cam_p("rotation_track world_move_1_goes_out_0.5 push_in_0.5"))
        assert scene.camera.poses[-1].position == pytest.approx((0, 0, 0.5), abs=1e-9)


class TestSceneAndDeterminism:
    def test_static_scene(self):
        scene = compile_scene(obj_p("free_form"), cam_p("free_form"))
        assert all(p.position == (0.0, 0.0, 0.0) for p in scene.camera.poses)
        assert all(c == (0.0, 0.0, -5.0) for c in scene.object.centers)

    def test_deterministic_bitwise(self):
        a = compile_scene(obj_p("free_form t_x_right | free_form yaw_90"),
                          cam_p("orbit_track deg_180 jitter_high | tail_track"), seed=99)
        b = compile_scene(obj_p("free_form t_x_right | free_form yaw_90"),
                          cam_p("orbit_track deg_180 jitter_high | tail_track"), seed=99)
        assert json.dumps(a.to_json_dict()) == json.dumps(b.to_json_dict())

    def test_seed_changes_jitter(self):
        a = compile_scene(obj_p("free_form"), cam_p("free_form t_x_right jitter_high"), seed=1)
        b = compile_scene(obj_p("free_form"), cam_p("free_form t_x_right jitter_high"), seed=2)
        assert json.dumps(a.to_json_dict()) != json.dumps(b.to_json_dict())

    def test_jitter_preserves_segment_endpoints(self):
        clean = compile_scene(obj_p("free_form"), cam_p("free_form t_x_right"), seed=5)
        noisy = compile_scene(obj_p("free_form"), cam_p("free_form t_x_right jitter_high"),
                              seed=5)
        for f in (0, 20):
            assert clean.camera.poses[f].position == noisy.camera.poses[f].position

    def test_continuity_no_teleports(self):
        programs = [
            ("free_form t_x_right | free_form yaw_90 t_z_in", "free_form t_z_in | orbit_track deg_180"),
            ("free_form t_z_in | free_form t_y_up | free_form yaw_90", "tail_track | rotation_track | orbit_track deg_90"),
        ]
        for obj_text, cam_text in programs:
            scene = compile_scene(obj_p(obj_text), cam_p(cam_text))
            positions = [p.position for p in scene.camera.poses]
            bounds = scene.camera.segment_bounds
            for b0, b1 in zip(bounds, bounds[1:]):
                steps = [kin.vec_norm(kin.vec_sub(positions[f + 1], positions[f]))
                         for f in range(b0, b1)]
                median = sorted(steps)[len(steps) // 2]
                if median > 1e-9:
                    assert max(steps) <= 3.0 * median + 1e-9

    def test_json_round_trip(self):
        scene = compile_scene(obj_p("free_form yaw_90 t_z_in"),
                              cam_p("orbit_track deg_180 | free_form roll_45"), seed=3)
        data = json.loads(json.dumps(scene.to_json_dict()))
        restored = SceneMotion.from_json_dict(data)
        assert restored.camera.poses == scene.camera.poses
        assert restored.object.centers == scene.object.centers
        assert restored.object.yaw_pitch == scene.object.yaw_pitch
        assert restored.seed == scene.seed

    def test_camera_json_shape(self):
        traj = compile_camera(cam_p("free_form t_x_left"))
        data = traj.to_json_dict()
        assert set(data["frames"][0]) == {"p", "q"}
        assert Trajectory.from_json_dict(data).poses == traj.poses

    def test_boxtrack_json_shape(self):
        track = compile_object(obj_p("free_form yaw_90"))
        data = track.to_json_dict()
        assert set(data["frames"][0]) == {"c", "yp"}
        assert data["e"] == [0.5, 0.5, 0.5]
        restored = BoxTrack.from_json_dict(data)
        assert restored.centers == track.centers
