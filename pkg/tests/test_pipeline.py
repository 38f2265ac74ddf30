import numpy as np
import pytest

from facetex import pipeline
from facetex.config import RunConfig
from facetex.errors import ValidationError
from facetex.ingest import load_manifest
from facetex.windowing import window_frame_counts


@pytest.fixture(scope="module")
def small_run(small_dataset, tmp_path_factory):
    """Features extracted once for the small fixture with (B, bidirectional)."""
    manifest = load_manifest(small_dataset)
    cfg = RunConfig(
        area="B", mode="bidirectional", window_d_seconds=1.0, window_s_seconds=0.5
    )
    feat_dir = tmp_path_factory.mktemp("feats")
    report = pipeline.extract_features(manifest, cfg, feat_dir)
    assert report.ok, report.failures
    return manifest, cfg, feat_dir


class TestExtract:
    def test_one_file_per_video(self, small_run, small_dataset):
        manifest, _, feat_dir = small_run
        files = sorted(feat_dir.glob("*.feat"))
        assert len(files) == len(manifest)

    def test_window_count_matches_formula(self, small_run):
        manifest, cfg, feat_dir = small_run
        features = pipeline.load_feature_dir(feat_dir)
        window, hop = window_frame_counts(cfg.windowing(), 30.0)
        expected = (60 - window) // hop + 1
        for records in features.values():
            assert len(records) == expected

    def test_headers_carry_manifest_fields(self, small_run):
        manifest, cfg, feat_dir = small_run
        features = pipeline.load_feature_dir(feat_dir)
        truth = {r.id: r for r in manifest}
        for vid, records in features.items():
            for fv in records:
                assert fv.label == truth[vid].label
                assert fv.technique == truth[vid].technique
                assert fv.split == truth[vid].split
                assert fv.area == "B" and fv.mode == "bidirectional"
                assert fv.dim == 6144

    def test_failure_isolation(self, small_dataset, tmp_path):
        manifest = load_manifest(small_dataset)
        # corrupt one video by pointing its landmarks at a bad file
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        from dataclasses import replace

        records = list(manifest.records)
        records[0] = replace(records[0], landmarks_path=bad)
        broken = type(manifest)(tuple(records))
        cfg = RunConfig(window_d_seconds=1.0, window_s_seconds=0.5)
        report = pipeline.extract_features(broken, cfg, tmp_path / "out")
        assert set(report.failures) == {records[0].id}
        assert len(report.written) == len(records) - 1

    def test_parallel_matches_serial(self, small_dataset, tmp_path):
        manifest = load_manifest(small_dataset)
        cfg = RunConfig(window_d_seconds=1.0, window_s_seconds=0.5)
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        pipeline.extract_features(manifest, cfg, serial, workers=1)
        pipeline.extract_features(manifest, cfg, parallel, workers=3)
        for f in sorted(serial.glob("*.feat")):
            assert (parallel / f.name).read_bytes() == f.read_bytes()


class TestTrainClassify:
    def test_training_set_filters(self, small_run):
        _, cfg, feat_dir = small_run
        features = pipeline.load_feature_dir(feat_dir)
        dataset = pipeline.training_set(features, "DF")
        zeros, ones = dataset.class_counts
        window, hop = window_frame_counts(cfg.windowing(), 30.0)
        per_video = (60 - window) // hop + 1
        # train split only: 3 videos per class
        assert zeros == ones == 3 * per_video

    def test_classify_and_verdict_roundtrip(self, small_run, tmp_path):
        manifest, cfg, feat_dir = small_run
        features = pipeline.load_feature_dir(feat_dir)
        model = pipeline.train_technique(features, "DF", cfg)
        verdicts = pipeline.classify_videos([model], features, split="test")
        assert len(verdicts) == len(manifest.select(split="test"))
        path = tmp_path / "verdicts.jsonl"
        pipeline.write_verdicts(path, verdicts, config=cfg.to_dict(), model_refs=["m"])
        meta, records = pipeline.read_verdicts(path)
        assert meta["config"] == cfg.to_dict()
        assert len(records) == len(verdicts)
        for rec, v in zip(records, sorted(verdicts, key=lambda v: v.video_id)):
            assert rec["video_id"] == v.video_id
            assert rec["N"] == v.n_windows
            # verdict fields recompute from the per-window pairs
            from facetex.decision import WindowPrediction, majority_vote, reduced_mean

            preds = [WindowPrediction(p["p"], p["s"]) for p in rec["per_window"]]
            assert majority_vote([p.label for p in preds]) == rec["p_hat"]
            assert reduced_mean(preds, rec["p_hat"]) == pytest.approx(rec["s_hat"])

    def test_evaluate_verdicts(self, small_run):
        manifest, cfg, feat_dir = small_run
        features = pipeline.load_feature_dir(feat_dir)
        model = pipeline.train_technique(features, "DF", cfg)
        verdicts = pipeline.classify_videos([model], features, split="test")
        records = [
            {"video_id": v.video_id, "p_hat": v.label, "s_hat": v.score,
             "N": v.n_windows,
             "per_window": [{"p": p.label, "s": p.score} for p in v.window_predictions]}
            for v in verdicts
        ]
        report = pipeline.evaluate_verdicts(records, manifest, window_level_auc=True)
        assert report["accuracy"] == 1.0
        assert report["auc"] == 1.0
        assert report["fpr"] == 0.0 and report["fnr"] == 0.0
        assert report["window_auc"] == 1.0

    def test_evaluate_rejects_unknown_ids(self, small_run):
        manifest, _, _ = small_run
        records = [{"video_id": "ghost", "p_hat": 0, "s_hat": 0.0, "N": 1}]
        with pytest.raises(ValidationError):
            pipeline.evaluate_verdicts(records, manifest)

    def test_fused_classification_structure(self, small_run):
        manifest, cfg, feat_dir = small_run
        features = pipeline.load_feature_dir(feat_dir)
        base = pipeline.train_technique(features, "DF", cfg)
        from dataclasses import replace

        models = [
            base,
            replace(base, technique="F2F"),
            replace(base, technique="FSW"),
        ]
        verdicts = pipeline.classify_videos(models, features, split="test")
        for v in verdicts:
            assert (v.attribution is not None) == (v.label == 1)
            assert set(v.extras["technique_scores"]) == {"DF", "F2F", "FSW"}

    def test_model_dim_mismatch(self, small_run):
        manifest, cfg, feat_dir = small_run
        features = pipeline.load_feature_dir(feat_dir)
        model = pipeline.train_technique(features, "DF", cfg)
        from dataclasses import replace

        import numpy as np

        from facetex.svm import Scaler

        bad = replace(
            model,
            weights=np.zeros(10),
            scaler=Scaler(np.zeros(10), np.ones(10)),
        )
        with pytest.raises(ValidationError):
            pipeline.classify_videos([bad], features)


class TestAblationHarness:
    def test_degenerate_dataset_zero_loss(self, small_dataset, tmp_path):
        # with one window per video, sliding degenerates to non-sliding
        manifest = load_manifest(small_dataset)
        cfg = RunConfig(window_d_seconds=2.0, window_s_seconds=2.0)
        rows = pipeline.sliding_ablation(
            manifest, cfg, tmp_path, areas=["F"], modes=["direct"], techniques=["DF"]
        )
        assert len(rows) == 1
        assert rows[0]["loss"]["DF"] == pytest.approx(0.0)

    def test_loss_equals_accuracy_difference(self, small_dataset, tmp_path):
        manifest = load_manifest(small_dataset)
        cfg = RunConfig(area="B", window_d_seconds=1.0, window_s_seconds=0.5)
        rows = pipeline.sliding_ablation(
            manifest, cfg, tmp_path / "abl", areas=["B"], modes=["direct"],
            techniques=["DF"],
        )
        sliding = pipeline._run_single(
            manifest, cfg.with_overrides(mode="direct", window_sliding=True),
            "DF", tmp_path / "chk",
        )
        fixed = pipeline._run_single(
            manifest, cfg.with_overrides(mode="direct", window_sliding=False),
            "DF", tmp_path / "chk",
        )
        assert rows[0]["loss"]["DF"] == pytest.approx(
            sliding["accuracy"] - fixed["accuracy"]
        )

    def test_row_per_area_mode(self, small_dataset, tmp_path):
        manifest = load_manifest(small_dataset)
        cfg = RunConfig(window_d_seconds=1.0, window_s_seconds=0.5)
        rows = pipeline.sliding_ablation(
            manifest,
            cfg,
            tmp_path,
            areas=["F", "B"],
            modes=["direct"],
            techniques=["DF"],
        )
        assert [(r["area"], r["mode"]) for r in rows] == [
            ("F", "direct"),
            ("B", "direct"),
        ]
        for row in rows:
            recomputed = np.mean([row["loss"][t] for t in row["loss"]])
            assert row["average_loss"] == pytest.approx(recomputed)

    def test_grid_shape(self, small_dataset, tmp_path):
        manifest = load_manifest(small_dataset)
        cfg = RunConfig(window_d_seconds=1.0, window_s_seconds=0.5)
        rows = pipeline.experiment_grid(
            manifest,
            cfg,
            tmp_path,
            areas=["B"],
            modes=["direct", "bidirectional"],
            techniques=["DF"],
        )
        assert len(rows) == 2
        for row in rows:
            assert "DF" in row["accuracy"] and "DF" in row["auc"]
