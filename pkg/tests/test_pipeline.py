"""End-to-end sampling runs, scoring rows, grid execution, trajectory files."""

import numpy as np
import pytest

from fusbench.core import InputError
from fusbench.metrics import chamfer, coverage, pair_consistency
from fusbench.pipeline import (
    SequenceScorer,
    compare_grid,
    load_trajectory,
    run_cell,
    run_sequence,
    write_trajectory,
)
from fusbench.geometry import invert_pose
from fusbench.report import CSV_COLUMNS
from fusbench.sampler import SamplerConfig
from fusbench.simulator.sequence import write_sequence


def test_run_sequence_samples_every_part_every_frame(door_sequence):
    cfg = SamplerConfig(strategy="FUS", num_inferences=3)
    sampled = run_sequence(door_sequence, cfg)
    assert len(sampled) == len(door_sequence)
    for frame in sampled:
        for c, part in frame.parts.items():
            assert c in (1, 2, 3)
            assert len(part) == cfg.points_per_part


def test_run_sequence_is_deterministic(door_sequence):
    cfg = SamplerConfig(strategy="FUS", num_inferences=3, seed=4)
    a = run_sequence(door_sequence, cfg)
    b = run_sequence(door_sequence, cfg)
    for fa, fb in zip(a, b):
        for c in fa.parts:
            assert np.array_equal(fa.parts[c].points, fb.parts[c].points)
            assert np.array_equal(fa.parts[c].pixels, fb.parts[c].pixels)
            assert np.array_equal(fa.parts[c].weights, fb.parts[c].weights)


def test_oracle_labels_make_contamination_vanish(door_sequence):
    cfg = SamplerConfig(strategy="FUS", num_inferences=3)
    scorer = SequenceScorer(door_sequence)
    rows = scorer.rows_for_run(run_sequence(door_sequence, cfg, oracle=True), "FUS", 0)
    values = [r["contamination"] for r in rows if r["contamination"] is not None]
    assert values and all(v == 0.0 for v in values)


def test_uniform_downsample_keeps_total_budget(door_sequence):
    cfg = SamplerConfig(strategy="UniformDownsample", num_inferences=3, downsample_total=256)
    sampled = run_sequence(door_sequence, cfg)
    for frame in sampled:
        assert frame.total_points() == 256
    # scoring rows only cover real parts, never the background
    rows = SequenceScorer(door_sequence).rows_for_run(sampled, "UniformDownsample", 0)
    assert set(r["part"] for r in rows) <= {1, 2, 3}


def test_score_based_runs_through_the_pipeline(door_sequence):
    cfg = SamplerConfig(strategy="ScoreBased", num_inferences=3)
    sampled = run_sequence(door_sequence, cfg)
    assert all(len(p) == 32 for f in sampled for p in f.parts.values())


def test_scorer_rows_match_public_metrics(door_sequence):
    cfg = SamplerConfig(strategy="Random", num_inferences=3)
    scorer = SequenceScorer(door_sequence)
    sampled = run_sequence(door_sequence, cfg)
    rows = scorer.rows_for_run(sampled, "Random", 0)
    assert [set(r) == set(CSV_COLUMNS) for r in rows]
    by_key = {(r["frame"], r["part"]): r for r in rows}

    # frame 0: the carry-back motion is the identity, so the row must equal
    # the public metric evaluated on the raw sample points
    for c in (1, 2, 3):
        row = by_key[(0, c)]
        pts = sampled[0].parts[c].points
        assert row["chamfer"] == pytest.approx(chamfer(scorer.refs[c], pts), abs=1e-12)
        assert row["coverage"] == pytest.approx(coverage(pts, scorer.refs[c]), abs=1e-12)
        assert row["consistency"] is None
        assert row["n_samples"] == 32

    # a later frame: consistency equals the pairwise metric under gt motion
    c = 3
    row = by_key[(2, c)]
    motion = door_sequence.frames[2].poses[c] @ invert_pose(door_sequence.frames[1].poses[c])
    expected = pair_consistency(sampled[1].parts[c].points, sampled[2].parts[c].points, motion)
    assert row["consistency"] == pytest.approx(expected, abs=1e-12)


def test_scorer_subsamples_large_references(door_sequence):
    scorer = SequenceScorer(door_sequence, ref_limit=100)
    assert all(len(r) <= 100 for r in scorer.refs.values())
    again = SequenceScorer(door_sequence, ref_limit=100)
    for c in scorer.refs:
        assert np.array_equal(scorer.refs[c], again.refs[c])


def test_run_cell_overrides_strategy_and_seed(door_sequence):
    scorer = SequenceScorer(door_sequence)
    cfg = SamplerConfig(num_inferences=3)
    rows = run_cell(door_sequence, scorer, cfg, "FPS", 7)
    assert all(r["strategy"] == "FPS" and r["seed"] == 7 for r in rows)


def test_compare_grid_parallel_matches_serial(door_sequence, tmp_path):
    seq_dir = write_sequence(door_sequence, tmp_path / "seq")
    cfg = SamplerConfig(num_inferences=3)
    serial, fail_s = compare_grid([seq_dir], ["FUS", "Random"], [0, 1], cfg, workers=1)
    parallel, fail_p = compare_grid([seq_dir], ["FUS", "Random"], [0, 1], cfg, workers=2)
    assert fail_s == [] and fail_p == []
    assert serial == parallel
    assert len(serial) == 2 * 2 * 4 * 3  # strategies x seeds x frames x parts
    keys = [(r["strategy"], r["seed"], r["frame"], r["part"]) for r in serial]
    assert keys == sorted(keys)


def test_compare_grid_records_failures_and_continues(door_sequence, tmp_path):
    good = write_sequence(door_sequence, tmp_path / "good")
    missing = tmp_path / "missing"
    cfg = SamplerConfig(num_inferences=3)
    rows, failures = compare_grid([good, missing], ["Random"], [0], cfg)
    assert len(rows) == 4 * 3
    assert len(failures) == 1
    assert failures[0]["sequence"].endswith("missing")
    assert failures[0]["error"].startswith("InputError")


def test_trajectory_round_trip(door_sequence, tmp_path):
    cfg = SamplerConfig(strategy="FUS", num_inferences=3, seed=2)
    sampled = run_sequence(door_sequence, cfg)
    out = write_trajectory(tmp_path / "traj", sampled, cfg, sequence_dir="seq")
    frames, manifest = load_trajectory(out)
    assert manifest["strategy"] == "FUS"
    assert manifest["seed"] == 2
    assert manifest["frames"] == len(sampled)
    assert manifest["sampler"] == cfg.to_dict()
    for orig, back in zip(sampled, frames):
        assert sorted(back.parts) == sorted(orig.parts)
        assert back.unavailable == orig.unavailable
        for c, part in orig.parts.items():
            assert np.allclose(back.parts[c].points, part.points, atol=0)
            assert np.array_equal(back.parts[c].pixels, part.pixels)
            assert np.allclose(back.parts[c].weights, part.weights, atol=0)
            assert back.parts[c].from_queue == part.from_queue


def test_load_trajectory_requires_manifest(tmp_path):
    with pytest.raises(InputError) as err:
        load_trajectory(tmp_path)
    assert "manifest.json" in str(err.value)
