"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Criterion 9 (sidecar contract) lives in sidecar/tests; this suite
checks its primary-side half: the whole pipeline runs from file-based
manifests with no sidecar present.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import (
    HOLE_PUNCHER_NAMES,
    compound_corpus,
    half_plane,
    separable_record,
    svg_doc,
    write_manifest,
)
from test_edit_lab import analyzed, entangled_two_concepts, isolated_three_concepts
from test_metrics import check_against_brute_force
from svglens.artifact_lab import detect
from svglens.attribution import from_values
from svglens.cli import cli
from svglens.concepts import ConceptHeatmap, select_candidate
from svglens.edit_lab import run_edit_protocol, summarize_outcomes
from svglens.metrics import compactness, coverage, crosstalk, locality, mean_purity
from svglens.model import parse, serialize
from svglens.pipeline import split_verified
from svglens.raster import abs_diff, render, save_raster_png
from svglens.scoring import loo_analyze, make_backend


def report(line: str) -> None:
    print(f"\n{line}")


def test_criterion_1_split_render_equivalence():
    """Subpath splitting is render-preserving over the compound corpus."""
    corpus = compound_corpus()
    assert len(corpus) >= 20
    started = time.monotonic()
    fallbacks = []
    for name, doc in corpus:
        out = split_verified(doc)
        diff = abs_diff(render(out, 384), render(doc, 384))
        assert diff.values.mean() < 1.0 / 255.0, name
        if any("kept unsplit" in note for note in out.notes):
            fallbacks.append(name)
        else:
            assert out.n_elements > doc.n_elements, name
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"render-equivalence corpus took {elapsed:.1f}s"
    assert set(fallbacks) == HOLE_PUNCHER_NAMES  # reported, not failed
    report(f"ACCEPTANCE 1 split render-equivalence: PASS "
           f"({len(corpus)} docs, fallbacks reported: {sorted(fallbacks)}, "
           f"{elapsed:.1f}s)")


def test_criterion_2_loo_correctness_oracle():
    """Deltas equal hand-computed MSE differences; footprints are exact."""
    size = 96
    rects = [  # (x, y, w, h, rgb in [0, 1])
        (8, 8, 20, 16, (1.0, 0.0, 0.0)),
        (40, 8, 16, 20, (0.0, 0.0, 1.0)),
        (8, 48, 24, 24, (0.0, 100 / 255.0, 0.0)),
        (64, 56, 20, 12, (51 / 255.0, 51 / 255.0, 51 / 255.0)),
    ]
    body = "".join(
        f'<rect x="{x}" y="{y}" width="{w}" height="{h}" '
        f'fill="rgb({int(r * 255)},{int(g * 255)},{int(b * 255)})"/>'
        for x, y, w, h, (r, g, b) in rects)
    doc = svg_doc(body, viewbox=f"0 0 {size} {size}")

    def hand_paint(skip=None):
        canvas = np.ones((size, size, 3))
        for i, (x, y, w, h, color) in enumerate(rects):
            if i != skip:
                canvas[y:y + h, x:x + w] = color
        return canvas

    reference_pixels = np.ones((size, size, 3))  # blank white reference
    reference = render(svg_doc('<rect width="1" height="1" fill="none"/>',
                               viewbox=f"0 0 {size} {size}"), size)
    results = loo_analyze(doc, reference, make_backend("neg-mse"), size=size)

    full = hand_paint()
    mse_full = ((full - reference_pixels) ** 2).mean()
    for i, result in enumerate(results):
        ablated = hand_paint(skip=i)
        expected_delta = ((ablated - reference_pixels) ** 2).mean() - mse_full
        assert abs(result.delta - expected_delta) < 1e-9, i
        x, y, w, h, _ = rects[i]
        expected_support = np.zeros((size, size), dtype=bool)
        expected_support[y:y + h, x:x + w] = True
        assert np.array_equal(result.footprint.values > 0, expected_support), i
    report("ACCEPTANCE 2 LOO correctness oracle: PASS "
           f"(max |delta error| < 1e-9 over {len(results)} elements, exact footprints)")


def test_criterion_3_metric_formula_oracles():
    """1000 random matrices match the brute-force reimplementation to 1e-12."""
    rng = np.random.default_rng(20240817)
    for _ in range(1000):
        n = int(rng.integers(1, 10))
        c = int(rng.integers(1, 6))
        values = rng.uniform(0, 1, (n, c))
        values[rng.uniform(size=values.shape) < 0.3] = 0.0
        if rng.uniform() < 0.25:
            values *= 1e-3  # exercise the inactive threshold
        check_against_brute_force(values, tol=1e-12)

    # boundary cases stated in the operation examples
    one_hot = from_values(np.eye(3), epsilon=0.0)
    assert mean_purity(one_hot) == 1.0 and crosstalk(one_hot) == 0.0
    assert coverage(one_hot) == 1.0
    assert compactness(from_values(np.array([[1.0]])), 0) == 1.0
    assert compactness(from_values(np.array([[0.5], [0.5]])), 0) == pytest.approx(0.0)
    assert locality(from_values(np.array([[0.8]])), 0) == 1.0
    spread = np.zeros((7, 1)); spread[0, 0] = spread[6, 0] = 1.0
    assert locality(from_values(spread), 0) == pytest.approx(0.0, abs=1e-12)
    report("ACCEPTANCE 3 metric formula oracles: PASS (1000 matrices, tol 1e-12)")


def test_criterion_4_locality_ordering():
    """Near positions beat far positions for every N >= 19."""
    def loc(positions, n):
        values = np.zeros((n, 1))
        values[list(positions), 0] = 1.0
        return locality(from_values(values), 0)

    near19, far19 = loc([1, 3, 5], 19), loc([1, 9, 18], 19)
    assert near19 == pytest.approx(0.852, abs=1e-3)
    assert far19 == pytest.approx(0.358, abs=1e-3)
    for n in range(19, 200):
        assert loc([1, 3, 5], n) > loc([1, 9, 18], n), n
    report(f"ACCEPTANCE 4 locality ordering: PASS "
           f"(N=19 values {near19:.4f} > {far19:.4f}; ordering holds for N in [19, 200))")


def test_criterion_5_desk_scale_artifact_detection():
    """50-document separable corpus: LOO F1 >= 0.9, beats random by >= 0.5."""
    backend = make_backend("neg-mse")
    started = time.monotonic()
    loo_f1, random_f1, delta_ssims = [], [], []
    for seed in range(50):
        clean, injected, truth = separable_record(seed)
        reference = render(clean, 384)
        loo = detect(injected, reference, "loo", 3, backend, truth, size=384)
        rnd = detect(injected, reference, "random", 3, backend, truth,
                     seed=seed, size=384)
        loo_f1.append(loo.f1)
        random_f1.append(rnd.f1)
        delta_ssims.append(loo.delta_ssim)
    elapsed = time.monotonic() - started
    mean_loo = float(np.mean(loo_f1))
    mean_random = float(np.mean(random_f1))
    mean_dssim = float(np.mean(delta_ssims))
    assert mean_loo >= 0.9, mean_loo
    assert mean_loo > mean_random + 0.5, (mean_loo, mean_random)
    assert mean_dssim > 0.0, mean_dssim
    assert elapsed < 300.0, f"detection corpus took {elapsed:.1f}s"
    report(f"ACCEPTANCE 5 artifact detection: PASS (LOO F1 {mean_loo:.3f}, "
           f"random {mean_random:.3f}, mean dSSIM {mean_dssim:+.4f}, {elapsed:.0f}s)")


def test_criterion_6_edit_precision_sanity():
    """Isolated concepts edit cleanly; entanglement shows up in color edits."""
    doc, concepts = isolated_three_concepts()
    matrix = analyzed(doc, concepts)
    outcomes = run_edit_protocol(doc, matrix, concepts, seed=23, size=96)
    for outcome in outcomes:
        if outcome.precision is not None:
            assert outcome.precision == pytest.approx(1.0, abs=1e-9), outcome
    summary = summarize_outcomes(outcomes)
    assert summary["delete"] >= summary["color"]

    tangled_doc, tangled_concepts = entangled_two_concepts()
    tangled_matrix = analyzed(tangled_doc, tangled_concepts)
    tangled = run_edit_protocol(tangled_doc, tangled_matrix, tangled_concepts,
                                seed=23, size=96)
    color = [o for o in tangled if o.kind == "color" and o.concept == "left"][0]
    assert color.precision is not None and color.precision < 0.9
    report(f"ACCEPTANCE 6 edit precision sanity: PASS (isolated all 1.0, "
           f"entangled color {color.precision:.3f} < 0.9, "
           f"delete {summary['delete']:.3f} >= color {summary['color']:.3f})")


def _prepare_cli_corpus(root: Path, stems=("a", "b", "c")) -> None:
    size = 96
    root.mkdir(parents=True, exist_ok=True)
    for k, stem in enumerate(stems):
        body = (f'<rect x="{8 + k}" y="10" width="25" height="25" fill="#a33"/>'
                f'<rect x="60" y="{58 + k}" width="25" height="25" fill="#33a"/>')
        svg_text = f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">{body}</svg>'
        (root / f"{stem}.svg").write_text(svg_text, encoding="utf-8")
        save_raster_png(render(parse(svg_text), size), root / f"{stem}.ref.png")
        manifest = write_manifest(root / f"_{stem}", [
            {"name": "top", "candidates": [
                (half_plane(size, "y", True), "text-prompted-segmentation", None)]},
            {"name": "bottom", "candidates": [
                (half_plane(size, "y", False), "text-prompted-segmentation", None)]},
        ], render_size=size)
        target = root / f"{stem}.heatmaps.json"
        payload = json.loads(manifest.read_text())
        for concept in payload["concepts"]:
            for cand in concept["candidates"]:
                cand["png"] = f"_{stem}/{cand['png']}"
        target.write_text(json.dumps(payload, indent=2), encoding="utf-8")


def test_criterion_7_cli_determinism(tmp_path):
    """Byte-identical reruns; worker count does not change computed results."""
    runner = CliRunner()
    corpus = tmp_path / "corpus"
    _prepare_cli_corpus(corpus)

    # identical rerun, same seed and config
    outs = []
    for label in ("r1", "r2"):
        out = tmp_path / label
        for args in (
            ["metrics", str(corpus), "--render-size", "96", "--seed", "3",
             "--out", str(out)],
            ["inject", str(corpus / "a.svg"), "--seed", "3", "--out", str(out)],
            ["edit-eval", str(corpus / "a.svg"), "--heatmaps",
             str(corpus / "a.heatmaps.json"), "--render-size", "96",
             "--seed", "3", "--out", str(out)],
        ):
            result = runner.invoke(cli, args)
            assert result.exit_code == 0, result.output
        result = runner.invoke(cli, [
            "detect", str(out), "--method", "all", "--k", "3",
            "--render-size", "96", "--seed", "3", "--out", str(out)])
        assert result.exit_code == 0, result.output
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0].keys() == outs[1].keys()
    for name in outs[0]:
        assert outs[0][name] == outs[1][name], name

    # workers 1 vs 8 over the corpus
    by_workers = {}
    for workers in (1, 8):
        out = tmp_path / f"w{workers}"
        result = runner.invoke(cli, [
            "metrics", str(corpus), "--render-size", "96", "--seed", "3",
            "--workers", str(workers), "--out", str(out)])
        assert result.exit_code == 0, result.output
        by_workers[workers] = out
    for path1 in sorted(by_workers[1].iterdir()):
        path8 = by_workers[8] / path1.name
        if path1.suffix == ".json":
            a = json.loads(path1.read_text())
            b = json.loads(path8.read_text())
            a["config"]["workers"] = b["config"]["workers"] = None
            assert a == b, path1.name
        else:
            assert path1.read_bytes() == path8.read_bytes(), path1.name
    report("ACCEPTANCE 7 determinism: PASS (byte-identical reruns; "
           "workers 1 vs 8 agree on every report)")


def test_criterion_8_fusion_rule_boundaries():
    """Provider selection at score 0.3 and area 0.005 / 0.95 boundaries."""
    size = 100
    total = size * size

    def mask_with(count: int) -> np.ndarray:
        flat = np.zeros(total)
        flat[:count] = 1.0
        return flat.reshape(size, size)

    soft = ConceptHeatmap("x", np.full((size, size), 0.4),
                          "text-prompted-segmentation")

    def selected(score, count) -> str:
        inst = ConceptHeatmap("x", mask_with(count), "instance-mask", score)
        return select_candidate((soft, inst)).provider

    delta = 1e-9
    mid_area = total // 2
    # score boundary at fixed valid area
    assert selected(0.3, mid_area) == "instance-mask"
    assert selected(0.3 + delta, mid_area) == "instance-mask"
    assert selected(0.3 - delta, mid_area) == "text-prompted-segmentation"
    # area boundaries at fixed valid score (50 px = 0.005, 9500 px = 0.95)
    assert selected(0.5, 50) == "instance-mask"
    assert selected(0.5, 49) == "text-prompted-segmentation"
    assert selected(0.5, 51) == "instance-mask"
    assert selected(0.5, 9500) == "instance-mask"
    assert selected(0.5, 9501) == "text-prompted-segmentation"
    assert selected(0.5, 9499) == "instance-mask"
    report("ACCEPTANCE 8 fusion rule boundaries: PASS")


def test_criterion_9_primary_runs_from_file_manifests(tmp_path):
    """The primary pipeline needs only file-based manifests (no sidecar)."""
    runner = CliRunner()
    corpus = tmp_path / "corpus"
    _prepare_cli_corpus(corpus, stems=("solo",))
    out = tmp_path / "out"
    result = runner.invoke(cli, [
        "metrics", str(corpus / "solo.svg"),
        "--reference", str(corpus / "solo.ref.png"),
        "--heatmaps", str(corpus / "solo.heatmaps.json"),
        "--render-size", "96", "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads((out / "solo.metrics.json").read_text())
    assert payload["n_concepts"] == 2
    report("ACCEPTANCE 9 (primary half) file-based manifests: PASS "
           "(sidecar contract test lives in sidecar/tests)")
