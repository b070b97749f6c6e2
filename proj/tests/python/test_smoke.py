import json
import math

import pytest

import tubelink


def test_geometry():
    assert tubelink.iou((0, 0, 10, 10), (0, 0, 10, 10)) == pytest.approx(1.0)
    assert tubelink.iou((0, 0, 10, 10), (5, 0, 10, 10)) == pytest.approx(50 / 150)
    assert tubelink.center_distance((0, 0, 10, 10), (3, 4, 10, 10), 10.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        tubelink.iou((0, 0, 0, 10), (0, 0, 1, 1))


def test_smoothing_and_kernel():
    k = tubelink.gaussian_kernel(0.6)
    assert len(k) == 7
    assert math.fsum(k) == pytest.approx(1.0)
    assert tubelink.smooth_series([3.0] * 5, 0.6) == pytest.approx([3.0] * 5)


def test_greedy_match():
    links = tubelink.greedy_match([[0.9, 0.8], [0.85, 0.1]], 0.5)
    assert sorted(links) == [(0, 0)]
    assert tubelink.greedy_match([], 0.5) == []


def test_simulate_postprocess_evaluate(tmp_path):
    cfg = tubelink.SynthConfig()
    cfg.n_videos = 2
    cfg.frames_per_video = 30
    cfg.seed = 5
    n = tubelink.simulate(tmp_path, cfg)
    assert n > 0
    stats = tubelink.postprocess(
        tmp_path / "detections.jsonl", tmp_path / "refined.jsonl", video_meta=tmp_path / "fps.json"
    )
    assert stats["frames"] == 60
    report = tubelink.evaluate(tmp_path / "refined.jsonl", tmp_path / "gt.jsonl", tmp_path / "classes.json")
    assert report["map"] == pytest.approx(1.0)
    first = json.loads((tmp_path / "refined.jsonl").read_text().splitlines()[0])
    assert "tubelet_id" in first


def test_missing_file_raises(tmp_path):
    with pytest.raises(tubelink.DataError):
        tubelink.postprocess(tmp_path / "none.jsonl", tmp_path / "out.jsonl")
