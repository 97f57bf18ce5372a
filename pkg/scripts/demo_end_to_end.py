#!/usr/bin/env python3
"""Desk-scale walkthrough: fixture -> pipeline -> report -> metrics.

Generates a three-shot ground-truth video, analyzes it with the
reference stack, verifies the report against the fixture's expectation,
and runs a small two-class evaluation.
"""

import json
import sys
import tempfile
from pathlib import Path

from dfdetect.fixtures import (
    FixtureFace,
    FixtureShot,
    FixtureSpec,
    compare_reports,
    generate_fixture,
    generate_image_fixture,
)
from dfdetect.metrics import DatasetManifest, evaluate_manifest, format_metrics_table
from dfdetect.pipeline import analyze_media, analyze_source, reference_components
from dfdetect.types import PipelineConfig


def main() -> int:
    workdir = Path(tempfile.mkdtemp(prefix="dfdetect-demo-"))
    print(f"working under {workdir}")

    spec = FixtureSpec(shots=(
        FixtureShot(duration=4.0, background=(40, 60, 80),
                    faces=(FixtureFace("red", 0.9),)),
        FixtureShot(duration=5.0, background=(180, 80, 100),
                    faces=(FixtureFace("green", 0.2), FixtureFace("blue", 0.7))),
        FixtureShot(duration=6.0, background=(100, 150, 220),
                    faces=(FixtureFace("red", 0.9),)),
    ))
    fixture = generate_fixture(spec, str(workdir / "demo.avi"))
    print(f"fixture: {fixture.media.local_ref} "
          f"({fixture.media.duration}s, boundaries {fixture.boundaries})")

    config = PipelineConfig()
    components = reference_components(lookup=fixture.lookup)
    report = analyze_media(fixture.media, config, components, shot_workers=4)

    print(f"overall DeepFake probability: {report.overall:.3f}")
    for shot in report.shots:
        score = "null" if shot.shot_score is None else f"{shot.shot_score:.3f}"
        print(f"  shot {shot.index} [{shot.start:>4.1f}s, {shot.end:>4.1f}s) "
              f"score={score} clusters={len(shot.clusters)}")

    diffs = compare_reports(fixture.expected_report, report)
    if diffs:
        print("MISMATCH against ground truth:")
        for diff in diffs:
            print(f"  {diff}")
        return 1
    print("report matches the fixture's expected output exactly")

    # tiny evaluation: the fixture as a 'fake', two empty images as 'real'
    real_a = generate_image_fixture(str(workdir / "real_a.png"), faces=())
    real_b = generate_image_fixture(str(workdir / "real_b.png"), faces=())
    manifest = DatasetManifest(name="demo", entries=(
        (fixture.media.local_ref, "fake", "FaceSwap"),
        (real_a.media.local_ref, "real", None),
        (real_b.media.local_ref, "real", None),
    ))

    def analyze(source):
        result, _ = analyze_source(source, config, components)
        return result

    table = evaluate_manifest(manifest, analyze)
    print()
    print(format_metrics_table(table))
    return 0


if __name__ == "__main__":
    sys.exit(main())
