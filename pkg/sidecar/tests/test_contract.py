"""Cross-component contract: sidecar manifests load in the analysis library.

Acceptance: a stub-provider manifest round-trips through the primary's
`load_heatmaps` + `fuse` with zero errors, and its heatmap PNGs decode to
values in [0, 1]. The CLI batch mode writes the same artifacts to disk.
"""

import json

import numpy as np
from click.testing import CliRunner

from conftest import png_bytes, two_region_image
from svglens_sidecar.cli import cli
from svglens_sidecar.manifest import build_manifest, write_manifest
from svglens_sidecar.providers import ColorClusterProvider, decode_image

from svglens.concepts import fuse, load_heatmaps


def grounded_fixture():
    provider = ColorClusterProvider()
    image = decode_image(png_bytes(two_region_image()))
    names = provider.list_concepts(image)
    return [(name, provider.ground(image, name)) for name in names]


class TestManifestRoundTrip:
    def test_loads_and_fuses_in_primary(self, tmp_path):
        manifest, files = build_manifest(grounded_fixture(), render_size=384)
        path = write_manifest(tmp_path, manifest, files)
        candidates = load_heatmaps(path, render_size=384)
        assert len(candidates) == len(manifest["concepts"])
        for group in candidates:
            for cand in group.candidates:
                assert cand.values.shape == (384, 384)
                assert cand.values.min() >= 0.0
                assert cand.values.max() <= 1.0
        concept_set = fuse(candidates)
        assert concept_set.count >= 1
        for heatmap in concept_set.heatmaps:
            assert heatmap.values.min() >= 0.0 and heatmap.values.max() <= 1.0

    def test_upsampling_to_other_render_sizes(self, tmp_path):
        manifest, files = build_manifest(grounded_fixture(), render_size=384)
        path = write_manifest(tmp_path, manifest, files)
        for size in (96, 352, 512):
            candidates = load_heatmaps(path, render_size=size)
            assert candidates[0].candidates[0].values.shape == (size, size)


class TestBatchCli:
    def test_ground_command_writes_loadable_manifest(self, tmp_path):
        image_path = tmp_path / "scene.png"
        image_path.write_bytes(png_bytes(two_region_image()))
        out = tmp_path / "heat"
        result = CliRunner().invoke(cli, [
            "ground", str(image_path), "--out", str(out),
            "--concepts", "red region,blue region", "--render-size", "256"])
        assert result.exit_code == 0, result.output
        manifest_path = out / "heatmaps.json"
        payload = json.loads(manifest_path.read_text())
        assert payload["render_size"] == 256
        candidates = load_heatmaps(manifest_path, render_size=256)
        concept_set = fuse(candidates)
        assert concept_set.names == ("red region", "blue region")

    def test_ground_deterministic(self, tmp_path):
        image_path = tmp_path / "scene.png"
        image_path.write_bytes(png_bytes(two_region_image()))
        outputs = []
        for label in ("a", "b"):
            out = tmp_path / label
            result = CliRunner().invoke(cli, [
                "ground", str(image_path), "--out", str(out)])
            assert result.exit_code == 0, result.output
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outputs[0] == outputs[1]


class TestEndToEndWithPrimary:
    def test_metrics_pipeline_consumes_sidecar_manifest(self, tmp_path):
        from svglens.attribution import attribute
        from svglens.metrics import structural_report
        from svglens.model import parse
        from svglens.raster import raster_to_png_bytes, render
        from svglens.scoring import compute_footprints

        svg_text = (
            '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 120 120">'
            '<rect x="10" y="10" width="40" height="40" fill="rgb(220,40,40)"/>'
            '<rect x="70" y="70" width="40" height="40" fill="rgb(40,40,220)"/>'
            "</svg>")
        doc = parse(svg_text)
        size = 120
        rendered = render(doc, size)

        provider = ColorClusterProvider()
        image = decode_image(raster_to_png_bytes(rendered))
        names = ["red region", "blue region"]
        grounded = [(n, provider.ground(image, n)) for n in names]
        manifest, files = build_manifest(grounded, render_size=size)
        path = write_manifest(tmp_path, manifest, files)

        concept_set = fuse(load_heatmaps(path, render_size=size))
        _, footprints = compute_footprints(doc, size=size)
        matrix = attribute(footprints, concept_set)
        report = structural_report(matrix)
        assert report.purity > 0.9
        assert report.coverage == 1.0
