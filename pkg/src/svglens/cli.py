"""Command-line interface: score, metrics, inject, detect, edit-eval, aggregate."""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .artifact_lab import DETECTION_METHODS, detect, inject
from .config import RunConfig, build_config
from .edit_lab import EDIT_PROTOCOL_KINDS, run_edit_protocol, summarize_outcomes
from .errors import (
    ConceptError,
    EmptyDocumentError,
    PathDataError,
    RenderError,
    ScoringError,
    SvgLensError,
    SvgParseError,
)
from .metrics import structural_report
from .model import SvgDocument, serialize
from .pipeline import (
    analyze_document,
    attribution_for,
    load_document,
    load_reference,
    split_verified,
)
from .raster import render, save_gray_png
from .scoring import make_backend

EXIT_IO = 10
EXIT_PARSE = 11
EXIT_RENDER = 12
EXIT_BACKEND = 13
EXIT_CONCEPTS = 14

_ERROR_EXITS = (
    (SvgParseError, EXIT_PARSE),
    (EmptyDocumentError, EXIT_PARSE),
    (PathDataError, EXIT_PARSE),
    (RenderError, EXIT_RENDER),
    (ScoringError, EXIT_BACKEND),
    (ConceptError, EXIT_CONCEPTS),
    (SvgLensError, EXIT_IO),
    (OSError, EXIT_IO),
)


def _exit_for(exc: Exception) -> int:
    for klass, code in _ERROR_EXITS:
        if isinstance(exc, klass):
            return code
    return 1


def _guarded(func):
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as exc:  # translate to the documented exit classes
            if isinstance(exc, (click.ClickException, click.exceptions.Exit)):
                raise
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_for(exc))

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _report_base(config: RunConfig, inputs: dict) -> dict:
    return {"version": __version__, "config": config.to_dict(), "inputs": inputs}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


_CONFIG_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 default=None, help="Key-value config file; flags override it."),
    click.option("--render-size", type=int, default=None, help="Square render size in px."),
    click.option("--background", type=click.Choice(["white", "black", "transparent"]),
                 default=None),
    click.option("--backend", type=click.Choice(["neg-mse", "ssim", "embedding"]),
                 default=None, help="Similarity backend."),
    click.option("--embed-url", default=None, help="Embedding service base URL."),
    click.option("--seed", type=int, default=None),
    click.option("--workers", type=int, default=None),
    click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".",
                 help="Output directory."),
]


def _with_config_options(func):
    for option in reversed(_CONFIG_OPTIONS):
        func = option(func)
    return func


def _make_config(config_path, render_size, background, backend, embed_url,
                 seed, workers) -> RunConfig:
    return build_config(
        config_path, render_size=render_size, background=background,
        backend=backend, embed_url=embed_url, seed=seed, workers=workers)


@click.group()
@click.version_option(version=__version__, prog_name="svglens")
def cli() -> None:
    """Structural quality analysis for SVG code via element ablation."""


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------

@cli.command()
@click.argument("svg_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--reference", "reference_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Reference image (PNG) or SVG rendered at the configured size.")
@click.option("--export-footprints", is_flag=True, default=False,
              help="Write one grayscale PNG per element footprint.")
@_with_config_options
@_guarded
def score(svg_path, reference_path, export_footprints, config_path, render_size,
          background, backend, embed_url, seed, workers, out_dir):
    """Per-element ablation deltas and footprints for one SVG."""
    config = _make_config(config_path, render_size, background, backend,
                          embed_url, seed, workers)
    svg_file = Path(svg_path)
    doc = split_verified(load_document(svg_file))
    reference = load_reference(reference_path, config)
    results = analyze_document(doc, reference, config)

    out = Path(out_dir)
    stem = svg_file.stem
    if export_footprints:
        out.mkdir(parents=True, exist_ok=True)
        for result in results:
            save_gray_png(result.footprint.values,
                          out / f"{stem}.footprint.{result.index:03d}.png")

    report = _report_base(config, {
        "svg": svg_file.name,
        "svg_sha256": _sha256_file(svg_file),
        "reference": Path(reference_path).name,
        "reference_sha256": _sha256_file(Path(reference_path)),
    })
    report.update({
        "n_elements": doc.n_elements,
        "notes": list(doc.notes),
        "elements": [
            {
                "index": r.index,
                "kind": doc.elements[r.index].kind,
                "origin": _origin_str(doc.elements[r.index]),
                "delta": r.delta,
                "classification": r.classification,
                "footprint_mass": r.footprint_mass,
            }
            for r in results
        ],
    })
    _write_json(out / f"{stem}.loo.json", report)
    click.echo(f"wrote {out / f'{stem}.loo.json'}")


def _origin_str(element) -> str:
    origin = element.origin
    if origin.subpath is None:
        return origin.node_id
    return f"{origin.node_id}#sub{origin.subpath}"


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@cli.command()
@click.argument("svg_path", type=click.Path(exists=True))
@click.option("--reference", "reference_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Reference image; defaults to the document's own render.")
@click.option("--heatmaps", "manifest_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Concept heatmap manifest JSON.")
@_with_config_options
@_guarded
def metrics(svg_path, reference_path, manifest_path, config_path, render_size,
            background, backend, embed_url, seed, workers, out_dir):
    """Full pipeline: ablation, attribution, structural metrics report.

    With a directory argument, processes every *.svg inside it using the
    corpus conventions <stem>.ref.png and <stem>.heatmaps.json, and writes
    an aggregate CSV next to the per-document reports.
    """
    config = _make_config(config_path, render_size, background, backend,
                          embed_url, seed, workers)
    out = Path(out_dir)
    target = Path(svg_path)
    if target.is_dir():
        svg_files = sorted(target.glob("*.svg"))
        if not svg_files:
            raise SvgLensError(f"no .svg files in {target}")
        doc_config = replace(config, workers=1)

        def run_one(svg_file: Path) -> tuple[str, dict]:
            manifest = svg_file.parent / f"{svg_file.stem}.heatmaps.json"
            ref = svg_file.parent / f"{svg_file.stem}.ref.png"
            report = _metrics_one(
                svg_file, ref if ref.exists() else None, manifest, doc_config)
            _write_json(out / f"{svg_file.stem}.metrics.json", report)
            return svg_file.name, report

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                entries = list(pool.map(run_one, svg_files))
        else:
            entries = [run_one(f) for f in svg_files]
        _write_csv(out / "metrics_aggregate.csv", _AGGREGATE_HEADER,
                   [_aggregate_row(name, report) for name, report in entries])
        click.echo(f"wrote {len(entries)} reports and metrics_aggregate.csv to {out}")
        return

    if manifest_path is None:
        raise ConceptError(
            "no heatmap manifest: pass --heatmaps <manifest.json> (generate one "
            "with the grounding sidecar's `ground` command or provide file-based "
            "heatmaps)")
    report = _metrics_one(target, Path(reference_path) if reference_path else None,
                          Path(manifest_path), config)
    _write_json(out / f"{target.stem}.metrics.json", report)
    click.echo(f"wrote {out / f'{target.stem}.metrics.json'}")


def _metrics_one(svg_file: Path, reference_path: Path | None,
                 manifest_path: Path, config: RunConfig) -> dict:
    if not manifest_path.exists():
        raise ConceptError(
            f"no heatmap manifest for {svg_file.name}: expected {manifest_path.name} "
            "(generate one with the grounding sidecar's `ground` command or provide "
            "file-based heatmaps)")
    doc = split_verified(load_document(svg_file))
    if reference_path is not None:
        reference = load_reference(reference_path, config)
        reference_name = reference_path.name
        reference_sha = _sha256_file(reference_path)
    else:
        reference = render(doc, config.render_size, config.background)
        reference_name = "self"
        reference_sha = reference.sha256()
    results = analyze_document(doc, reference, config)
    matrix, concepts = attribution_for(doc, manifest_path, config)
    struct = structural_report(matrix, doc.n_elements, config.to_dict())

    report = _report_base(config, {
        "svg": svg_file.name,
        "svg_sha256": _sha256_file(svg_file),
        "reference": reference_name,
        "reference_sha256": reference_sha,
        "heatmaps": manifest_path.name,
        "heatmaps_sha256": _sha256_file(manifest_path),
    })
    report.update(struct.to_json_dict())
    report.update({
        "concepts": list(concepts.names),
        "notes": list(doc.notes) + list(concepts.notes),
        "elements": [
            {
                "index": r.index,
                "kind": doc.elements[r.index].kind,
                "origin": _origin_str(doc.elements[r.index]),
                "delta": r.delta,
                "classification": r.classification,
                "footprint_mass": r.footprint_mass,
                "active": bool(matrix.active[r.index]),
                "primary_concept": matrix.concept_names[matrix.primary[r.index]],
                "purity": float(matrix.purity[r.index]),
                "attribution": [float(v) for v in matrix.values[r.index]],
            }
            for r in results
        ],
    })
    return report


_AGGREGATE_HEADER = ["file", "n_elements", "n_active", "n_concepts", "purity",
                     "coverage", "compactness_mean", "locality_mean", "crosstalk"]


def _aggregate_row(name: str, report: dict) -> list:
    return [
        name,
        report["n_elements"],
        report["n_active"],
        report["n_concepts"],
        _fmt(report["purity"]),
        _fmt(report["coverage"]),
        _fmt(report["compactness"]["mean"]),
        _fmt(report["locality"]["mean"]),
        _fmt(report["crosstalk"]),
    ]


# ---------------------------------------------------------------------------
# inject / detect
# ---------------------------------------------------------------------------

@cli.command("inject")
@click.argument("svg_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--count", type=int, default=3, show_default=True)
@_with_config_options
@_guarded
def inject_cmd(svg_path, count, config_path, render_size, background, backend,
               embed_url, seed, workers, out_dir):
    """Inject synthetic artifacts; writes the injected SVG and ground truth."""
    config = _make_config(config_path, render_size, background, backend,
                          embed_url, seed, workers)
    svg_file = Path(svg_path)
    doc = load_document(svg_file)
    record = inject(doc, count=count, seed=config.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    injected_path = out / f"{svg_file.stem}.injected.svg"
    injected_path.write_text(serialize(record.injected), encoding="utf-8")
    payload = _report_base(config, {
        "svg": svg_file.name,
        "svg_sha256": _sha256_file(svg_file),
    })
    payload.update({
        "source": str(svg_file),
        "injected": injected_path.name,
        "count": count,
        "truth": list(record.truth),
        "kinds": list(record.kinds),
    })
    _write_json(out / f"{svg_file.stem}.injection.json", payload)
    click.echo(f"wrote {injected_path} and {svg_file.stem}.injection.json")


@cli.command("detect")
@click.argument("target", type=click.Path(exists=True))
@click.option("--truth", "truth_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Injection record JSON (single-file mode).")
@click.option("--reference", "reference_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Clean reference; defaults to the injection record's source SVG.")
@click.option("--method", "method_option",
              type=click.Choice([*DETECTION_METHODS, "all"]), default="all",
              show_default=True)
@click.option("--k", type=int, default=3, show_default=True)
@_with_config_options
@_guarded
def detect_cmd(target, truth_path, reference_path, method_option, k, config_path,
               render_size, background, backend, embed_url, seed, workers, out_dir):
    """Run artifact detection against recorded ground truth.

    With a directory argument, pairs every *.injection.json with its
    injected SVG and emits per-document plus corpus-summary CSVs.
    """
    config = _make_config(config_path, render_size, background, backend,
                          embed_url, seed, workers)
    methods = list(DETECTION_METHODS) if method_option == "all" else [method_option]
    out = Path(out_dir)
    target_path = Path(target)

    if target_path.is_dir():
        records = sorted(target_path.glob("*.injection.json"))
        if not records:
            raise SvgLensError(f"no *.injection.json files in {target_path}")
        jobs = [(record, None, None) for record in records]
    else:
        if truth_path is None:
            raise SvgLensError("single-file mode requires --truth <injection.json>")
        jobs = [(Path(truth_path), target_path, reference_path)]

    def run_one(job) -> list[list]:
        record_path, svg_override, ref_override = job
        record = json.loads(record_path.read_text(encoding="utf-8"))
        svg_file = svg_override or record_path.parent / record["injected"]
        doc = load_document(svg_file)
        ref_path = ref_override or record["source"]
        if not Path(ref_path).is_absolute() and not Path(ref_path).exists():
            ref_path = record_path.parent / ref_path
        reference = load_reference(ref_path, config)
        backend_obj = make_backend(
            config.backend, background=config.background, url=config.embed_url,
            timeout=config.embed_timeout, retries=config.embed_retries)
        rows = []
        for method in methods:
            result = detect(
                doc, reference, method, k, backend_obj, tuple(record["truth"]),
                seed=config.seed, size=config.render_size,
                background=config.background)
            rows.append([
                svg_file.name, method, k,
                " ".join(str(i) for i in result.flagged),
                _fmt(result.precision), _fmt(result.recall), _fmt(result.f1),
                _fmt(result.delta_ssim),
            ])
        return rows

    if config.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            all_rows = [row for rows in pool.map(run_one, jobs) for row in rows]
    else:
        all_rows = [row for job in jobs for row in run_one(job)]

    header = ["file", "method", "k", "flagged", "precision", "recall", "f1", "delta_ssim"]
    _write_csv(out / "detection.csv", header, all_rows)

    summary_rows = []
    for method in methods:
        rows = [r for r in all_rows if r[1] == method]
        if not rows:
            continue
        means = [sum(float(r[i]) for r in rows) / len(rows) for i in (4, 5, 6, 7)]
        summary_rows.append([method, len(rows), *(repr(m) for m in means)])
    _write_csv(out / "detection_summary.csv",
               ["method", "n", "precision", "recall", "f1", "delta_ssim"], summary_rows)
    run_manifest = _report_base(config, {
        "records": [
            {"truth": job[0].name, "truth_sha256": _sha256_file(job[0])}
            for job in jobs
        ],
    })
    run_manifest.update({"methods": methods, "k": k})
    _write_json(out / "detection_run.json", run_manifest)
    click.echo(f"wrote detection.csv and detection_summary.csv to {out}")


# ---------------------------------------------------------------------------
# edit-eval
# ---------------------------------------------------------------------------

@cli.command("edit-eval")
@click.argument("svg_path", type=click.Path(exists=True))
@click.option("--heatmaps", "manifest_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@_with_config_options
@_guarded
def edit_eval(svg_path, manifest_path, config_path, render_size, background,
              backend, embed_url, seed, workers, out_dir):
    """Run the five-edit protocol and report per-edit precision."""
    config = _make_config(config_path, render_size, background, backend,
                          embed_url, seed, workers)
    out = Path(out_dir)
    target = Path(svg_path)
    if target.is_dir():
        svg_files = sorted(target.glob("*.svg"))
        if not svg_files:
            raise SvgLensError(f"no .svg files in {target}")
        jobs = [(f, f.parent / f"{f.stem}.heatmaps.json") for f in svg_files]
    else:
        if manifest_path is None:
            raise ConceptError(
                "no heatmap manifest: pass --heatmaps <manifest.json> (generate one "
                "with the grounding sidecar's `ground` command)")
        jobs = [(target, Path(manifest_path))]

    def run_one(job) -> list[list]:
        svg_file, manifest = job
        if not manifest.exists():
            raise ConceptError(f"no heatmap manifest for {svg_file.name}: {manifest}")
        doc = split_verified(load_document(svg_file))
        matrix, concepts = attribution_for(doc, manifest, replace(config, workers=1))
        outcomes = run_edit_protocol(
            doc, matrix, concepts, seed=config.seed,
            size=config.render_size, background=config.background,
            move_px=config.move_px, scale_factor=config.scale_factor,
            binarize_level=config.binarize_level)
        return [
            [svg_file.name, o.concept, o.kind, _fmt(o.target_change),
             _fmt(o.collateral), _fmt(o.precision)]
            for o in outcomes
        ]

    if config.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            all_rows = [row for rows in pool.map(run_one, jobs) for row in rows]
    else:
        all_rows = [row for job in jobs for row in run_one(job)]

    _write_csv(out / "edits.csv",
               ["file", "concept", "kind", "target_change", "collateral", "precision"],
               all_rows)

    summary_rows = []
    for kind in (*EDIT_PROTOCOL_KINDS, "overall"):
        values = [float(r[5]) for r in all_rows
                  if r[5] != "" and (kind == "overall" or r[2] == kind)]
        summary_rows.append([kind, len(values),
                             repr(sum(values) / len(values)) if values else ""])
    _write_csv(out / "edits_summary.csv", ["kind", "n", "precision"], summary_rows)
    run_manifest = _report_base(config, {
        "documents": [
            {"svg": svg_file.name, "svg_sha256": _sha256_file(svg_file),
             "heatmaps": manifest.name, "heatmaps_sha256": _sha256_file(manifest)}
            for svg_file, manifest in jobs
        ],
    })
    _write_json(out / "edits_run.json", run_manifest)
    click.echo(f"wrote edits.csv and edits_summary.csv to {out}")


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

@cli.command()
@click.argument("report_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              default="aggregate.csv", show_default=True)
@_guarded
def aggregate(report_dir, out_path):
    """Collect per-SVG metrics reports into one CSV."""
    reports = sorted(Path(report_dir).glob("*.metrics.json"))
    if not reports:
        raise SvgLensError(f"no *.metrics.json files in {report_dir}")
    rows = []
    for path in reports:
        report = json.loads(path.read_text(encoding="utf-8"))
        rows.append(_aggregate_row(report["inputs"]["svg"], report))
    _write_csv(Path(out_path), _AGGREGATE_HEADER, rows)
    click.echo(f"wrote {out_path} ({len(rows)} rows)")


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
