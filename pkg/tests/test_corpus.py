"""Corpus generation tests: sampling statistics, captions, determinism."""

import json

import numpy as np
import pytest

from cinemotion import dsl, tagging
from cinemotion.compiler import CompileConfig, SceneMotion, compile_scene
from cinemotion.corpus import (
    RuleParaphraser,
    SamplingConfig,
    build_record,
    caption,
    generate_corpus,
    paraphrase,
    sample_program,
    sample_tag_count,
)
from cinemotion.errors import BackendUnavailable


def cam_p(text):
    return dsl.parse_program(text, "camera")


def obj_p(text):
    return dsl.parse_program(text, "object")


class TestSampling:
    def test_degenerate_config(self):
        config = SamplingConfig(seed=1, segment_count_weights=(1.0, 0.0, 0.0))
        config.value_weights = dict(config.value_weights)
        config.value_weights["camera.t_x"] = {"no": 1.0}
        config.value_weights["camera.t_y"] = {"no": 1.0}
        config.value_weights["camera.t_z"] = {"in": 1.0}
        config.value_weights["camera.yaw"] = {"0": 1.0}
        config.value_weights["camera.pitch"] = {"0": 1.0}
        config.value_weights["camera.roll"] = {"0": 1.0}
        rng = np.random.default_rng(0)
        p = sample_program("camera", config, rng, freeform_only=True)
        assert dsl.serialize_program(p) == "free_form t_z_in"

    def test_segment_count_distribution(self):
        config = SamplingConfig(seed=2)
        rng = np.random.default_rng(2)
        n = 100_000
        counts = {1: 0, 2: 0, 3: 0, 4: 0}
        for _ in range(n):
            counts[sample_tag_count(config, rng)] += 1
        assert counts[1] / n == pytest.approx(0.35, abs=0.01)
        assert counts[2] / n == pytest.approx(0.30, abs=0.01)
        assert (counts[3] + counts[4]) / n == pytest.approx(0.35, abs=0.01)
        # the 3-4 bucket splits evenly
        assert counts[3] / (counts[3] + counts[4]) == pytest.approx(0.5, abs=0.02)

    def test_samples_always_valid(self):
        config = SamplingConfig(seed=3)
        rng = np.random.default_rng(3)
        for i in range(2000):
            role = "camera" if i % 2 else "object"
            p = sample_program(role, config, rng)
            dsl.validate_program(p)
            assert dsl.parse_program(dsl.serialize_program(p), role) == p

    def test_object_programs_freeform_only(self):
        config = SamplingConfig(seed=4)
        rng = np.random.default_rng(4)
        for _ in range(200):
            p = sample_program("object", config, rng)
            assert all(t.primitive == "free_form" for t in p.tags)


class TestCaptions:
    def test_move_up_golden(self):
        assert caption(cam_p("free_form t_y_up"), "camera_free") == "the camera moves up"

    def test_orbit_keywords(self):
        text = caption(cam_p("orbit_track deg_360 dir_ccw"), "camera_relative")
        assert "orbits" in text
        assert "counterclockwise" in text
        assert "full circle" in text

    def test_static_program(self):
        assert caption(cam_p("free_form"), "camera_free") == "the camera remains static"
        assert caption(obj_p("free_form"), "object") == "the object stays in place"

    def test_intensity_adverbs(self):
        assert "slightly" in caption(cam_p("free_form t_x_near_left"), "camera_free")
        assert "far" in caption(cam_p("free_form t_x_far_left"), "camera_free")

    def test_multi_tag_joined(self):
        text = caption(cam_p("free_form t_z_in | orbit_track deg_90"), "camera_relative")
        assert ", then " in text

    def test_every_sampled_program_has_a_caption(self):
        config = SamplingConfig(seed=6)
        rng = np.random.default_rng(6)
        for i in range(500):
            role = "camera" if i % 2 else "object"
            p = sample_program(role, config, rng)
            style = "object" if role == "object" else "camera_relative"
            text = caption(p, style)
            assert text and text[0] != " "

    def test_direction_keywords_match_classes(self):
        """Inverse keyword check: caption words agree with tagged classes."""
        direction_words = {
            "t_x": {-1: "to the left", 1: "to the right"},
            "t_y": {-1: "down", 1: "up"},
            "t_z": {-1: "forward", 1: "backward"},
        }
        config = SamplingConfig(seed=7)
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(300):
            p = sample_program("camera", config, rng, freeform_only=True)
            text = caption(p, "camera_free")
            traj = compile_scene(obj_p("free_form"), p).camera
            for (rng_pair, tclass, _), tag in zip(
                    tagging.iter_segment_classes(traj), p.tags):
                for axis, level in zip(("t_x", "t_y", "t_z"), tclass.levels):
                    if level != 0:
                        word = direction_words[axis][1 if level > 0 else -1]
                        assert word in text, (dsl.serialize_program(p), text)
                        checked += 1
        assert checked > 100


class TestParaphrase:
    def test_deterministic(self):
        backend = RuleParaphraser(5)
        text = "the camera moves up, then holds still"
        assert paraphrase(text, backend) == paraphrase(text, backend)

    def test_differs_but_preserves_direction(self):
        text = "the camera moves up"
        out = paraphrase(text, RuleParaphraser(1))
        assert out != text
        assert "up" in out

    def test_backend_failure_is_typed(self):
        def broken(_):
            raise ConnectionError("socket closed")

        with pytest.raises(BackendUnavailable):
            paraphrase("anything", broken)


class TestRecords:
    def test_record_self_consistency(self):
        config = SamplingConfig(seed=9)
        for i in (0, 3, 11):
            record = build_record(config, i)
            rebuilt = compile_scene(record.program_obj, record.program_cam,
                                    CompileConfig(), record.seed)
            assert json.dumps(rebuilt.to_json_dict()) == \
                json.dumps(record.scene.to_json_dict())

    def test_sub_corpus_fields(self):
        config = SamplingConfig(seed=10)
        seen = set()
        for i in range(60):
            record = build_record(config, i)
            seen.add(record.sub_corpus)
            if record.sub_corpus.startswith("freeform_cam"):
                assert all(t.primitive == "free_form" for t in record.program_cam.tags)
                assert dsl.serialize_program(record.program_obj) == "free_form"
            if record.sub_corpus.endswith("_para"):
                assert record.caption_source == "paraphrase"
        assert seen == {"freeform_cam", "freeform_cam_para", "bbox", "bbox_para"}


class TestGenerateCorpus:
    def test_empty_corpus(self, tmp_path):
        config = SamplingConfig(record_count=0, seed=1)
        manifest = generate_corpus(config, tmp_path / "c.jsonl", tmp_path / "m.json")
        assert manifest["record_count"] == 0
        assert (tmp_path / "c.jsonl").read_text() == ""
        assert json.loads((tmp_path / "m.json").read_text())["seed"] == 1

    def test_byte_identical_runs(self, tmp_path):
        config = SamplingConfig(record_count=40, seed=12)
        generate_corpus(config, tmp_path / "a.jsonl")
        generate_corpus(config, tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_resumable(self, tmp_path):
        config = SamplingConfig(record_count=30, seed=13)
        generate_corpus(config, tmp_path / "full.jsonl")
        generate_corpus(config, tmp_path / "split.jsonl", stop=15)
        generate_corpus(config, tmp_path / "split.jsonl", start=15, stop=30)
        assert (tmp_path / "full.jsonl").read_bytes() == \
            (tmp_path / "split.jsonl").read_bytes()

    def test_sidecar_mode(self, tmp_path):
        config = SamplingConfig(record_count=5, seed=14)
        generate_corpus(config, tmp_path / "c.jsonl", traj_dir=tmp_path / "trajs")
        lines = (tmp_path / "c.jsonl").read_text().splitlines()
        assert len(lines) == 5
        first = json.loads(lines[0])
        assert isinstance(first["scene"], str)
        scene_data = json.loads((tmp_path / "trajs" / first["scene"]).read_text())
        scene = SceneMotion.from_json_dict(scene_data)
        assert len(scene.camera.poses) == 21

    def test_records_parse_and_fixed_key_order(self, tmp_path):
        config = SamplingConfig(record_count=8, seed=15)
        generate_corpus(config, tmp_path / "c.jsonl")
        for line in (tmp_path / "c.jsonl").read_text().splitlines():
            data = json.loads(line)
            assert list(data) == ["id", "sub_corpus", "seed", "caption_obj",
                                  "caption_cam", "caption_source", "program_obj",
                                  "program_cam", "scene"]
            dsl.parse_program(data["program_obj"], "object")
            dsl.parse_program(data["program_cam"], "camera")

    def test_manifest_histograms(self, tmp_path):
        config = SamplingConfig(record_count=50, seed=16)
        manifest = generate_corpus(config, tmp_path / "c.jsonl")
        hists = manifest["histograms"]
        assert sum(hists["sub_corpus"].values()) == 50
        assert sum(hists["segment_count"]["camera"].values()) == 50
        # object counts cover only records whose object program is sampled
        bbox_records = sum(v for k, v in hists["sub_corpus"].items()
                           if k.startswith("bbox"))
        assert sum(hists["segment_count"]["object"].values()) == bbox_records
        assert manifest["config_hash"] == config.config_hash()

    def test_config_round_trip(self):
        config = SamplingConfig(record_count=7, seed=21,
                                segment_count_weights=(0.5, 0.25, 0.25))
        data = json.loads(json.dumps(config.to_json_dict()))
        restored = SamplingConfig.from_json_dict(data)
        assert restored.config_hash() == config.config_hash()


class TestClassHistogram:
    def test_object_coarse_classes_match_weights(self):
        """Empirical per-class frequencies track the configured marginals."""
        config = SamplingConfig(seed=17)
        rng = np.random.default_rng(17)
        from cinemotion.compiler import translation_vector

        def sign_marginals(axis):
            weights = config.value_weights[f"object.{axis}"]
            total = sum(weights.values())
            neg = sum(w for t, w in weights.items()
                      if t != "no" and ("left" in t or "down" in t or "in" in t))
            pos = sum(w for t, w in weights.items()
                      if t != "no" and ("right" in t or "up" in t or "out" in t))
            return {-1: neg / total, 0: weights["no"] / total, 1: pos / total}

        marg = {axis: sign_marginals(axis) for axis in ("t_x", "t_y", "t_z")}
        counts: dict[tuple, int] = {}
        n_tags = 0
        for _ in range(8000):
            p = sample_program("object", config, rng)
            for tag in p.tags:
                v = translation_vector(tag)
                key = tuple(0 if x == 0 else (1 if x > 0 else -1) for x in v)
                counts[key] = counts.get(key, 0) + 1
                n_tags += 1
        for cls in tagging.class_space("coarse"):
            key = cls.levels
            expected = (marg["t_x"][key[0]] * marg["t_y"][key[1]]
                        * marg["t_z"][key[2]])
            observed = counts.get(key, 0) / n_tags
            assert abs(observed - expected) <= 0.02
