import json

import numpy as np
import pytest

from facetex import cli
from facetex.ingest import load_manifest


@pytest.fixture(scope="module")
def cli_artifacts(small_dataset, tmp_path_factory):
    """Run extract + train + classify once and share the outputs."""
    root = tmp_path_factory.mktemp("cli")
    feat_dir = root / "features"
    model_path = root / "model_df.json"
    verdicts = root / "verdicts.jsonl"
    common = ["--window-d", "1.0", "--window-s", "0.5", "--area", "B",
              "--mode", "bidirectional"]
    assert cli.main(
        ["extract", "--manifest", str(small_dataset), "--out", str(feat_dir)] + common
    ) == 0
    assert cli.main(
        ["train", "--features", str(feat_dir), "--technique", "DF",
         "--out", str(model_path)] + common
    ) == 0
    assert cli.main(
        ["classify", "--features", str(feat_dir), "--model", str(model_path),
         "--out", str(verdicts)] + common
    ) == 0
    return small_dataset, feat_dir, model_path, verdicts


class TestCliFlow:
    def test_extract_outputs(self, cli_artifacts):
        manifest_path, feat_dir, _, _ = cli_artifacts
        manifest = load_manifest(manifest_path)
        assert len(list(feat_dir.glob("*.feat"))) == len(manifest)

    def test_model_embeds_config(self, cli_artifacts):
        _, _, model_path, _ = cli_artifacts
        payload = json.loads(model_path.read_text())
        assert payload["config"]["area"] == "B"
        assert payload["config"]["window"]["d_seconds"] == 1.0
        assert payload["technique"] == "DF"

    def test_verdicts_have_meta_and_records(self, cli_artifacts):
        manifest_path, _, _, verdicts = cli_artifacts
        lines = verdicts.read_text().splitlines()
        meta = json.loads(lines[0])
        assert meta["format"].startswith("facetex-verdicts")
        assert meta["config"]["mode"] == "bidirectional"
        manifest = load_manifest(manifest_path)
        assert len(lines) - 1 == len(manifest.select(split="test"))
        record = json.loads(lines[1])
        assert {"video_id", "p_hat", "s_hat", "N", "per_window"} <= set(record)
        # single-technique classification carries no attribution
        assert all("attribution" not in json.loads(l) for l in lines[1:])

    def test_evaluate_report(self, cli_artifacts, tmp_path):
        manifest_path, _, _, verdicts = cli_artifacts
        out = tmp_path / "report"
        rc = cli.main(
            ["evaluate", "--verdicts", str(verdicts), "--manifest",
             str(manifest_path), "--out", str(out), "--svg"]
        )
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["accuracy"] == 1.0
        assert "config" in report
        assert (out / "report.csv").exists()
        assert (out / "report.svg").exists()

    def test_rerun_is_byte_identical(self, cli_artifacts, tmp_path):
        manifest_path, feat_dir, model_path, verdicts = cli_artifacts
        feat2 = tmp_path / "features2"
        common = ["--window-d", "1.0", "--window-s", "0.5", "--area", "B",
                  "--mode", "bidirectional"]
        assert cli.main(
            ["extract", "--manifest", str(manifest_path), "--out", str(feat2)] + common
        ) == 0
        for f in sorted(feat_dir.glob("*.feat")):
            assert (feat2 / f.name).read_bytes() == f.read_bytes()
        verdicts2 = tmp_path / "verdicts2.jsonl"
        assert cli.main(
            ["classify", "--features", str(feat2), "--model", str(model_path),
             "--out", str(verdicts2)] + common
        ) == 0
        assert verdicts2.read_bytes() == verdicts.read_bytes()


class TestFusedFlow:
    def test_three_model_fusion_and_confusion_matrix(self, tmp_path_factory):
        from synthdata import build_dataset

        root = tmp_path_factory.mktemp("fused")
        manifest = build_dataset(
            root / "data", n_train=3, n_test=2, seed=31, frames=60,
            techniques=("DF", "F2F", "FSW"),
        )
        flags = ["--window-d", "1.0", "--window-s", "0.5", "--area", "F",
                 "--mode", "direct"]
        feat = root / "features"
        assert cli.main(
            ["extract", "--manifest", str(manifest), "--out", str(feat)] + flags
        ) == 0
        models = []
        for tech in ("DF", "F2F", "FSW"):
            model = root / f"model_{tech.lower()}.json"
            assert cli.main(
                ["train", "--features", str(feat), "--technique", tech,
                 "--out", str(model)] + flags
            ) == 0
            models.append(model)
        verdicts = root / "verdicts.jsonl"
        model_flags = []
        for m in models:
            model_flags += ["--model", str(m)]
        assert cli.main(
            ["classify", "--features", str(feat), "--out", str(verdicts)]
            + model_flags + flags
        ) == 0
        records = [json.loads(l) for l in verdicts.read_text().splitlines()[1:]]
        truth = {r.id: r for r in load_manifest(manifest)}
        # OR-fusion must detect every test video correctly on this fixture
        assert all(r["p_hat"] == truth[r["video_id"]].label for r in records)
        for r in records:
            # attribution present iff positive, and always a known technique
            assert ("attribution" in r) == (r["p_hat"] == 1)
            if "attribution" in r:
                assert r["attribution"] in ("DF", "F2F", "FSW")
            assert set(r["detail"]["technique_scores"]) == {"DF", "F2F", "FSW"}
        out = root / "report"
        assert cli.main(
            ["evaluate", "--verdicts", str(verdicts), "--manifest", str(manifest),
             "--out", str(out), "--unconditioned-confusion"]
        ) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["accuracy"] == 1.0
        confusion = report["attribution_confusion"]
        counts = np.asarray(confusion["counts"])
        # every detected fake lands in its true-technique row
        assert counts.sum(axis=1).tolist() == [2, 2, 2]
        assert "attribution_confusion_unconditioned" in report


class TestCliErrors:
    def test_missing_manifest_is_usage_error(self, tmp_path):
        rc = cli.main(
            ["extract", "--manifest", str(tmp_path / "none.csv"),
             "--out", str(tmp_path / "out")]
        )
        assert rc == cli.EXIT_USAGE

    def test_partial_failure_exit_code(self, small_dataset, tmp_path):
        # break one video's landmarks file path via a manifest copy
        manifest = load_manifest(small_dataset)
        rows = (small_dataset).read_text().splitlines()
        bad_lm = tmp_path / "missing_dir"
        bad_lm.mkdir()
        parts = rows[1].split(",")
        parts[2] = str(bad_lm)  # exists, but not a valid landmark file
        rows[1] = ",".join(parts)
        broken = tmp_path / "broken.csv"
        broken.write_text("\n".join(rows) + "\n")
        rc = cli.main(
            ["extract", "--manifest", str(broken), "--out", str(tmp_path / "out"),
             "--window-d", "1.0", "--window-s", "0.5"]
        )
        assert rc == cli.EXIT_PARTIAL

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_classify_wrong_model_count(self, cli_artifacts, tmp_path):
        manifest_path, feat_dir, model_path, _ = cli_artifacts
        rc = cli.main(
            ["classify", "--features", str(feat_dir), "--model", str(model_path),
             "--model", str(model_path), "--out", str(tmp_path / "v.jsonl")]
        )
        assert rc == cli.EXIT_USAGE

    def test_dump_motion_flag(self, small_dataset, tmp_path):
        out = tmp_path / "feats"
        rc = cli.main(
            ["extract", "--manifest", str(small_dataset), "--out", str(out),
             "--dump-motion", "--window-d", "1.0", "--window-s", "0.5"]
        )
        assert rc == 0
        dumps = sorted((out / "motion").glob("*.motion.csv"))
        manifest = load_manifest(small_dataset)
        assert len(dumps) == len(manifest)
        header = dumps[0].read_text().splitlines()[0]
        assert header == "frame,dx_raw,dy_raw,dx_smooth,dy_smooth"

    def test_ablate_writes_reports(self, small_dataset, tmp_path):
        out = tmp_path / "ablation"
        rc = cli.main(
            ["ablate", "--manifest", str(small_dataset), "--out", str(out),
             "--areas", "B", "--modes", "direct", "--techniques", "DF",
             "--window-d", "1.0", "--window-s", "0.5"]
        )
        assert rc == 0
        payload = json.loads((out / "ablation.json").read_text())
        assert len(payload["rows"]) == 1
        assert (out / "ablation.csv").exists()

    def test_grid_writes_table(self, small_dataset, tmp_path):
        out = tmp_path / "grid"
        rc = cli.main(
            ["grid", "--manifest", str(small_dataset), "--out", str(out),
             "--areas", "B,T", "--modes", "direct", "--techniques", "DF",
             "--window-d", "1.0", "--window-s", "0.5"]
        )
        assert rc == 0
        payload = json.loads((out / "grid.json").read_text())
        assert [(r["area"], r["mode"]) for r in payload["rows"]] == [
            ("B", "direct"),
            ("T", "direct"),
        ]
        lines = (out / "grid.csv").read_text().splitlines()
        assert lines[0].startswith("area,mode,acc_DF")
        assert len(lines) == 3
