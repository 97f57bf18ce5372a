import json
from pathlib import Path

import pytest

from conftest import three_shot_spec
from dfdetect.cli import main
from dfdetect.fixtures import compare_reports
from dfdetect.types import ScoreReport


def write_lookup(tmp_path, fixture) -> str:
    path = tmp_path / "lookup.json"
    path.write_text(json.dumps({"lookup": fixture.lookup}))
    return str(path)


class TestAnalyze:
    def test_fixture_matches_oracle(self, tmp_path, three_shot_fixture, capsys):
        rc = main(["analyze", three_shot_fixture.media.local_ref,
                   "--backend", f"lookup:{write_lookup(tmp_path, three_shot_fixture)}"])
        assert rc == 0
        out = capsys.readouterr().out
        report = ScoreReport.from_json_bytes(out.encode())
        assert compare_reports(three_shot_fixture.expected_report, report) == []

    def test_image_no_faces_exit_zero(self, tmp_path, capsys):
        from dfdetect.fixtures import generate_image_fixture

        fixture = generate_image_fixture(str(tmp_path / "plain.png"), faces=())
        rc = main(["analyze", fixture.media.local_ref])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["overall"] is None
        assert report["no_faces_detected"] is True

    def test_missing_file_exit_two(self, tmp_path, capsys):
        rc = main(["analyze", str(tmp_path / "absent.avi")])
        assert rc == 2
        err = capsys.readouterr().err
        problem = json.loads(err)
        assert problem["status"] == 400
        assert problem["type"].endswith("validation")

    def test_distances_csv(self, tmp_path, three_shot_fixture, capsys):
        csv_path = tmp_path / "distances.csv"
        rc = main(["analyze", three_shot_fixture.media.local_ref,
                   "--distances", str(csv_path)])
        assert rc == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "timestamp,distance"
        assert len(lines) == 15

    def test_gallery_dir(self, tmp_path, three_shot_fixture, capsys):
        gallery_dir = tmp_path / "galleries"
        rc = main(["analyze", three_shot_fixture.media.local_ref,
                   "--gallery-dir", str(gallery_dir)])
        assert rc == 0
        pngs = list(gallery_dir.rglob("*.png"))
        assert len(pngs) == 3

    def test_workers_do_not_change_output(self, tmp_path, three_shot_fixture, capsys):
        lookup = write_lookup(tmp_path, three_shot_fixture)
        outputs = []
        for workers in ("1", "4"):
            rc = main(["analyze", three_shot_fixture.media.local_ref,
                       "--backend", f"lookup:{lookup}", "--workers", workers])
            assert rc == 0
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]

    def test_matches_service_bytes(self, tmp_path, three_shot_fixture, capsys):
        """CLI output is byte-identical to the service's stored report."""
        from fastapi.testclient import TestClient

        from dfdetect.config import ServiceConfig
        from dfdetect.pipeline import reference_components
        from dfdetect.service import JobController, create_app

        url = Path(three_shot_fixture.media.local_ref).resolve().as_uri()
        rc = main(["analyze", url,
                   "--backend", f"lookup:{write_lookup(tmp_path, three_shot_fixture)}"])
        assert rc == 0
        cli_bytes = capsys.readouterr().out.strip().encode()

        config = ServiceConfig(storage_root=str(tmp_path / "svc"))
        controller = JobController(
            config, reference_components(lookup=three_shot_fixture.lookup))
        app = create_app(config, controller=controller)
        with TestClient(app) as client:
            job_id = client.post("/v3/jobs", json={"url": url}).json()["job_id"]
            import time

            for _ in range(600):
                if client.get(f"/v3/jobs/{job_id}").json()["state"] == "completed":
                    break
                time.sleep(0.05)
            service_bytes = client.get(f"/v3/jobs/{job_id}/result").content
        assert cli_bytes == service_bytes


class TestFixtureCommand:
    def test_generate_and_reanalyze(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(three_shot_spec().to_dict()))
        out = tmp_path / "video.avi"
        rc = main(["fixture", str(spec_path), "--out", str(out)])
        assert rc == 0
        gt = json.loads((tmp_path / "video.json").read_text())
        assert gt["boundaries"] == [4.0, 9.0]

        lookup_path = tmp_path / "video.json"
        rc = main(["analyze", str(out), "--backend", f"lookup:{lookup_path}"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        expected = gt["expected_report"]
        assert report["overall"] == pytest.approx(expected["overall"], abs=1e-9)

    def test_deterministic_bytes(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(three_shot_spec().to_dict()))
        a, b = tmp_path / "a.avi", tmp_path / "b.avi"
        assert main(["fixture", str(spec_path), "--out", str(a)]) == 0
        assert main(["fixture", str(spec_path), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_color_exit_two(self, tmp_path, capsys):
        spec = three_shot_spec().to_dict()
        spec["shots"][0]["faces"][0]["color"] = "#808080"
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        rc = main(["fixture", str(spec_path), "--out", str(tmp_path / "x.avi")])
        assert rc == 2
        assert "palette" in capsys.readouterr().err


class TestEvalCommand:
    def test_synthetic_manifest(self, tmp_path, capsys):
        from dfdetect.fixtures import (
            FixtureFace,
            FixtureShot,
            FixtureSpec,
            generate_fixture,
            generate_image_fixture,
        )

        # two fake videos (high lookup scores) and two real images (no faces
        # -> null -> scored 0)
        lookup = {}
        fake1 = generate_fixture(
            FixtureSpec(shots=(FixtureShot(2.0, (40, 60, 80),
                                           (FixtureFace("red", 0.9),)),)),
            str(tmp_path / "fake1.avi"))
        fake2 = generate_fixture(
            FixtureSpec(shots=(FixtureShot(2.0, (40, 60, 80),
                                           (FixtureFace("blue", 0.8),)),)),
            str(tmp_path / "fake2.avi"))
        real1 = generate_image_fixture(str(tmp_path / "real1.png"), faces=())
        real2 = generate_image_fixture(str(tmp_path / "real2.png"), faces=())
        lookup.update(fake1.lookup)
        lookup.update(fake2.lookup)
        lookup_path = tmp_path / "lookup.json"
        lookup_path.write_text(json.dumps(lookup))

        manifest = tmp_path / "manifest.csv"
        manifest.write_text(
            "media,label,manipulation\n"
            f"{fake1.media.local_ref},fake,FaceSwap\n"
            f"{fake2.media.local_ref},fake,FaceSwap\n"
            f"{real1.media.local_ref},real,\n"
            f"{real2.media.local_ref},real,\n")
        csv_out = tmp_path / "metrics.csv"
        rc = main(["eval", str(manifest), "--backend", f"lookup:{lookup_path}",
                   "--csv", str(csv_out)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "100.00%" in out  # perfect separation -> BA 100%
        assert "FaceSwap" in out
        csv_text = csv_out.read_text()
        assert "all,2,2,0,100.0000,1.000000" in csv_text

    def test_single_class_manifest_fails(self, tmp_path, capsys):
        from dfdetect.fixtures import generate_image_fixture

        real = generate_image_fixture(str(tmp_path / "real.png"), faces=())
        manifest = tmp_path / "manifest.csv"
        manifest.write_text(f"media,label\n{real.media.local_ref},real\n")
        rc = main(["eval", str(manifest)])
        assert rc == 2
        assert "metric-undefined" in capsys.readouterr().err


class TestModelCardCommand:
    def test_contains_published_values(self, tmp_path, capsys):
        rc = main(["model-card"])
        assert rc == 0
        card = capsys.readouterr().out
        assert "70.31%" in card
        assert "3.0.0" in card

    def test_writes_file(self, tmp_path):
        out = tmp_path / "card.md"
        assert main(["model-card", "--out", str(out)]) == 0
        assert "0.7705" in out.read_text()

    def test_metrics_merge(self, tmp_path, capsys):
        metrics = tmp_path / "metrics.csv"
        metrics.write_text(
            "scope,n_real,n_fake,n_failed,balanced_accuracy,auc\n"
            "all,5,5,0,87.5000,0.912345\n")
        rc = main(["model-card", "--metrics", str(metrics)])
        assert rc == 0
        card = capsys.readouterr().out
        assert "Local evaluation" in card
        assert "87.50%" in card


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert capsys.readouterr().out.strip() == "3.0.0"
