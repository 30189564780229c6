"""Batch CLI: ground an image into a manifest directory, or serve HTTP."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .manifest import build_manifest, write_manifest
from .providers import ProviderUnavailable, decode_image, default_providers


@click.group()
def cli() -> None:
    """Concept grounding sidecar for svglens."""


@cli.command()
@click.argument("image_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Directory for heatmaps.json and its PNGs.")
@click.option("--concepts", "concepts_csv", default="",
              help="Comma-separated concept names; omitted = list automatically.")
@click.option("--provider", default="color-cluster", show_default=True)
@click.option("--render-size", type=int, default=384, show_default=True)
def ground(image_path, out_dir, concepts_csv, provider, render_size):
    """Write a heatmap manifest for IMAGE_PATH into --out."""
    providers = default_providers()
    chosen = providers.get(provider)
    if chosen is None:
        click.echo(f"error: unknown provider {provider!r}", err=True)
        sys.exit(2)
    image = decode_image(Path(image_path).read_bytes())
    names = [c.strip() for c in concepts_csv.split(",") if c.strip()]
    if not names:
        names = providers["color-cluster"].list_concepts(image)
    grounded = []
    for name in names:
        try:
            grounded.append((name, chosen.ground(image, name)))
        except ProviderUnavailable as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
    manifest, files = build_manifest(grounded, render_size)
    path = write_manifest(out_dir, manifest, files)
    click.echo(f"wrote {path} ({len(files)} heatmaps, {len(grounded)} concepts)")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8461, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
