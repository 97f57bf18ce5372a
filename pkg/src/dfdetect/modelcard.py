"""Model card rendering.

The card documents intended use, caveats, and evaluation results. The
benchmark tables ship as static data: they are the reference evaluation
of the production five-model ensemble on public datasets and are not
recomputed by this codebase (training weights and licensed datasets are
not distributed with it).
"""

from __future__ import annotations

from typing import Optional

from .errors import ValidationProblem
from .metrics import MetricsTable, format_metrics_table
from .version import ServiceVersion

# Reference evaluation of the deployed ensemble vs. the public DeepWare
# scanner. Static data; see module docstring.
BENCHMARK_RESULTS: list[dict] = [
    {"dataset": "FaceForensics++", "ba": "70.31%", "auc": "0.7705",
     "deepware_ba": "68.77%", "deepware_auc": "0.7681"},
    {"dataset": "CelebDF", "ba": "82.75%", "auc": "0.9259",
     "deepware_ba": "77.54%", "deepware_auc": "0.9493"},
    {"dataset": "WildDeepFake", "ba": "84.94%", "auc": "0.9373",
     "deepware_ba": "66.96%", "deepware_auc": "0.8646"},
]

# FaceForensics++ broken down by manipulation method.
MANIPULATION_RESULTS: list[dict] = [
    {"manipulation": "FaceSwap", "ba": "78.40%", "auc": "0.8674"},
    {"manipulation": "DeepFakes", "ba": "86.20%", "auc": "0.9468"},
    {"manipulation": "NeuralTextures", "ba": "57.65%", "auc": "0.6276"},
    {"manipulation": "Face2Face", "ba": "59.02%", "auc": "0.6402"},
]

# Balanced accuracy under projected-gradient-descent evasion attacks with
# three output normalization settings (worst case: white-box access).
ROBUSTNESS_RESULTS: list[dict] = [
    {"dataset": "FaceForensics++", "norm1": "70.31%", "norm2": "64.04%", "norminf": "50.53%"},
    {"dataset": "CelebDF", "norm1": "82.75%", "norm2": "76.01%", "norminf": "50.00%"},
    {"dataset": "WildDeepFake", "norm1": "84.94%", "norm2": "63.04%", "norminf": "50.00%"},
]

DEFAULT_INTENDED_USE = """\
This service estimates the probability that faces in an image or video
were manipulated with identity-swap ("DeepFake") methods. It is intended
for technically experienced analysts: media verification teams and
researchers working on manipulation detection. Scores are evidence to be
weighed alongside provenance and context, not verdicts. The service
targets identity-swap manipulations; fully synthetic faces, expression
reenactment, and non-face imagery are out of scope."""

DEFAULT_CAVEATS = """\
- Scores degrade on manipulation families absent from training,
  especially expression-swap methods (see the per-manipulation table).
- Low-resolution, heavily compressed, or re-encoded media reduce
  accuracy; prefer the highest-quality source available.
- The ensemble is vulnerable to white-box adversarial perturbations (see
  the robustness table); weights are therefore not distributed.
- Videos with no detectable faces produce a null overall score rather
  than a fabricated probability.
- A face must appear in enough frames of a shot to survive cluster
  filtering; brief background faces may be ignored by design."""

VERSION_HISTORY = [
    ("3.0.0", "Asynchronous job API with caching, shot-parallel processing, "
              "pluggable scorer backends, model card endpoint."),
]


def _markdown_table(rows: list[dict], columns: list[tuple[str, str]]) -> str:
    header = "| " + " | ".join(title for _, title in columns) + " |"
    rule = "|" + "|".join(["---"] * len(columns)) + "|"
    lines = [header, rule]
    for row in rows:
        lines.append("| " + " | ".join(str(row[key]) for key, _ in columns) + " |")
    return "\n".join(lines)


def render_model_card(version: str,
                      extra_metrics: Optional[MetricsTable] = None,
                      intended_use: Optional[str] = None,
                      caveats: Optional[str] = None) -> str:
    """Render the service model card as markdown."""
    try:
        ServiceVersion.parse(version)
    except ValueError as exc:
        raise ValidationProblem(str(exc)) from exc

    sections = [
        f"# DeepFake Detection Service — Model Card (v{version})",
        "",
        "## Model details",
        "",
        "An ensemble of five image classifiers scores each detected face;"
        " per-face probabilities are averaged across the ensemble, then"
        " aggregated per face cluster (mean), per shot (max), and per video"
        " (max). Videos are segmented into shots, faces are detected with a"
        " margin-expanded square crop, and same-person faces are grouped by"
        " embedding similarity before scoring.",
        "",
        f"- Service version: {version}",
        "- Input: URL of an image or video",
        "- Output: DeepFake probability per face, cluster, shot, and overall",
        "",
        "## Intended use",
        "",
        intended_use or DEFAULT_INTENDED_USE,
        "",
        "## Caveats and recommendations",
        "",
        caveats or DEFAULT_CAVEATS,
        "",
        "## Evaluation",
        "",
        "Reference evaluation of the production ensemble on three public"
        " benchmarks (static data, not recomputed by this build):",
        "",
        "### Benchmark datasets (Table 1)",
        "",
        _markdown_table(BENCHMARK_RESULTS, [
            ("dataset", "Dataset"), ("ba", "BA"), ("auc", "AUC"),
            ("deepware_ba", "DeepWare BA"), ("deepware_auc", "DeepWare AUC"),
        ]),
        "",
        "### FaceForensics++ per manipulation (Table 2)",
        "",
        _markdown_table(MANIPULATION_RESULTS, [
            ("manipulation", "Manipulation"), ("ba", "BA"), ("auc", "AUC"),
        ]),
        "",
        "### Adversarial robustness (Table 3)",
        "",
        "Balanced accuracy under white-box evasion attacks at three output"
        " normalization settings:",
        "",
        _markdown_table(ROBUSTNESS_RESULTS, [
            ("dataset", "Dataset"), ("norm1", "norm-1"),
            ("norm2", "norm-2"), ("norminf", "norm-inf"),
        ]),
    ]

    if extra_metrics:
        sections += [
            "",
            "### Local evaluation",
            "",
            "Metrics computed by this deployment's evaluation harness:",
            "",
            "```",
            format_metrics_table(extra_metrics),
            "```",
        ]

    sections += [
        "",
        "## Metrics explanation",
        "",
        "- **Balanced Accuracy (BA)**: the mean of per-class recall at the"
        " 0.5 decision threshold, in percent. Robust to class imbalance;"
        " 50% is chance, 100% is perfect.",
        "- **AUC**: area under the ROC curve, equivalently the probability"
        " that a random fake outranks a random real (ties count half)."
        " 0.5 is chance, 1.0 is perfect.",
        "",
        "## Version history",
        "",
    ]
    for v, note in VERSION_HISTORY:
        sections.append(f"- **{v}** — {note}")
    sections.append("")
    return "\n".join(sections)
