"""SVG document model: parsing, serialization, ablation, splitting, edits.

Documents are flattened at parse time: groups dissolve and their transforms,
opacity, and presentation attributes are composed onto leaf elements, so the
element list is exactly the ordered sequence of paintable units. All
operations return new documents; nothing mutates in place.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping
from xml.sax.saxutils import escape, quoteattr

from .colors import parse_color, rgb_to_hex
from .errors import EditError, EmptyDocumentError, PathDataError, SvgParseError
from .geometry import Affine, format_number, parse_transform
from .pathdata import count_movetos, split_path_data

SHAPE_TAGS = ("path", "rect", "circle", "ellipse", "line", "polyline", "polygon", "text", "image")
CONTAINER_TAGS = ("g", "a", "switch", "svg")
GRADIENT_TAGS = ("linearGradient", "radialGradient")
GROUP_LEAF_TRIGGERS = ("clip-path", "mask", "filter")

# Presentation attributes that inherit from containers to leaves.
INHERITED_ATTRS = (
    "fill", "stroke", "stroke-width", "stroke-linecap", "stroke-linejoin",
    "fill-opacity", "stroke-opacity", "fill-rule", "font-family", "font-size",
    "font-weight", "font-style", "text-anchor",
)

EDIT_KINDS = ("color", "delete", "move", "scale", "regroup")

_XMLNS = "http://www.w3.org/2000/svg"


@dataclass(frozen=True)
class Origin:
    """Where an element came from in the source document."""

    node_id: str
    subpath: int | None = None  # set for fragments produced by subpath splitting


@dataclass(frozen=True)
class VisualElement:
    """One paintable scoring unit.

    Equality ignores `index` and `origin` so that ablated or re-parsed
    documents compare element-wise by what they paint.
    """

    index: int = field(compare=False)
    kind: str = ""
    attributes: dict[str, str] = field(default_factory=dict)
    text: str | None = None
    raw: str | None = None  # serialized children for group-leaf elements
    origin: Origin = field(default=Origin("?"), compare=False)
    children: tuple["VisualElement", ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class GradientStop:
    offset: float
    color: tuple[float, float, float, float]


@dataclass(frozen=True)
class Gradient:
    kind: str  # "linear" | "radial"
    stops: tuple[GradientStop, ...]
    units: str = "objectBoundingBox"
    transform: Affine = Affine.identity()
    coords: tuple[tuple[str, float], ...] = ()

    def coord(self, name: str, default: float) -> float:
        for key, value in self.coords:
            if key == name:
                return value
        return default


@dataclass(frozen=True)
class DocumentStatics:
    """Non-element document content carried opaquely through operations."""

    opaque_nodes: tuple[str, ...] = ()
    paint_servers: Mapping[str, Gradient] = field(default_factory=dict)


@dataclass(frozen=True)
class EditSpec:
    """A structural edit request; parameters must match the kind."""

    kind: str
    targets: tuple[int, ...]
    color: tuple[int, int, int] | None = None
    dx: float | None = None
    dy: float | None = None
    factor: float | None = None

    def validate(self, n_elements: int) -> None:
        if self.kind not in EDIT_KINDS:
            raise EditError(f"unknown edit kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise EditError("duplicate target indices")
        for t in self.targets:
            if not (0 <= t < n_elements):
                raise EditError(f"target index {t} out of range [0, {n_elements})")
        needs = {"color": ("color",), "move": ("dx", "dy"), "scale": ("factor",)}
        required = needs.get(self.kind, ())
        for name in ("color", "dx", "dy", "factor"):
            value = getattr(self, name)
            if name in required and value is None:
                raise EditError(f"edit kind {self.kind!r} requires parameter {name!r}")
            if name not in required and value is not None:
                raise EditError(f"edit kind {self.kind!r} does not take parameter {name!r}")
        if self.kind == "scale" and self.factor is not None and self.factor <= 0:
            raise EditError(f"scale factor must be positive, got {self.factor}")


@dataclass(frozen=True)
class SvgDocument:
    """Parsed SVG with its ordered paintable elements (paint order = z-order)."""

    source: str
    viewbox: tuple[float, float, float, float]
    elements: tuple[VisualElement, ...]
    statics: DocumentStatics = field(default_factory=DocumentStatics)
    notes: tuple[str, ...] = ()

    @property
    def n_elements(self) -> int:
        return len(self.elements)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse(svg_text: str) -> SvgDocument:
    """Parse SVG markup into a flattened document.

    Groups are dissolved with inherited attributes and transforms composed
    onto leaves; `use` references are inlined; gradients and other
    non-renderable nodes are carried opaquely and excluded from the element
    list.
    """
    try:
        root = ET.fromstring(svg_text)
    except ET.ParseError as exc:
        offset = _byte_offset(svg_text, exc.position) if exc.position else None
        raise SvgParseError(f"malformed XML: {exc}", byte_offset=offset) from exc
    _strip_namespaces(root)
    if root.tag != "svg":
        raise SvgParseError(f"root element is <{root.tag}>, expected <svg>")

    viewbox = _parse_viewbox(root)
    id_map = _collect_ids(root)
    builder = _Builder(id_map)
    builder.walk_children(root, dict(), Affine.identity(), 1.0, top=True)
    if not builder.elements:
        raise EmptyDocumentError("document has no renderable elements")
    statics = DocumentStatics(tuple(builder.opaque), dict(builder.gradients))
    elements = tuple(replace(e, index=i) for i, e in enumerate(builder.elements))
    return SvgDocument(source=svg_text, viewbox=viewbox, elements=elements, statics=statics)


def _byte_offset(text: str, position: tuple[int, int]) -> int:
    line, col = position
    lines = text.splitlines(keepends=True)
    prefix = "".join(lines[: max(0, line - 1)])
    return len(prefix.encode("utf-8")) + col


def _strip_namespaces(node: ET.Element) -> None:
    for el in node.iter():
        if isinstance(el.tag, str) and el.tag.startswith("{"):
            el.tag = el.tag.split("}", 1)[1]
        renamed = {}
        for key in list(el.attrib):
            if key.startswith("{"):
                value = el.attrib.pop(key)
                local = key.split("}", 1)[1]
                if local == "href" and "href" not in el.attrib:
                    renamed["href"] = value
        el.attrib.update(renamed)


def parse_length(value: str, context: str = "length") -> float:
    v = value.strip()
    if v.endswith("px"):
        v = v[:-2]
    try:
        return float(v)
    except ValueError:
        raise SvgParseError(f"cannot parse {context} value {value!r}") from None


def _parse_viewbox(root: ET.Element) -> tuple[float, float, float, float]:
    vb = root.get("viewBox")
    if vb:
        parts = re.split(r"[\s,]+", vb.strip())
        if len(parts) != 4:
            raise SvgParseError(f"viewBox must have 4 numbers: {vb!r}")
        x, y, w, h = (float(p) for p in parts)
    else:
        width, height = root.get("width"), root.get("height")
        if width is None or height is None:
            raise SvgParseError("document has neither viewBox nor width/height")
        x, y = 0.0, 0.0
        w, h = parse_length(width, "width"), parse_length(height, "height")
    if w <= 0 or h <= 0:
        raise SvgParseError(f"viewBox has non-positive size {w} x {h}")
    return (x, y, w, h)


def _collect_ids(root: ET.Element) -> dict[str, ET.Element]:
    ids = {}
    for el in root.iter():
        el_id = el.get("id")
        if el_id and el_id not in ids:
            ids[el_id] = el
    return ids


def _parse_style_attr(style: str) -> dict[str, str]:
    decls = {}
    for chunk in style.split(";"):
        if ":" in chunk:
            key, value = chunk.split(":", 1)
            decls[key.strip()] = value.strip()
    return decls


class _Builder:
    """Recursive tree walker accumulating elements and opaque content."""

    def __init__(self, id_map: dict[str, ET.Element]):
        self.id_map = id_map
        self.elements: list[VisualElement] = []
        self.opaque: list[str] = []
        self.gradients: dict[str, Gradient] = {}
        self._counter = 0
        self._use_stack: list[str] = []

    def walk_children(self, node: ET.Element, inherited: dict[str, str],
                      transform: Affine, opacity: float, top: bool = False) -> list[VisualElement]:
        collected: list[VisualElement] = []
        for child in node:
            collected.extend(self.walk(child, inherited, transform, opacity))
        return collected

    def walk(self, node: ET.Element, inherited: dict[str, str],
             transform: Affine, opacity: float) -> list[VisualElement]:
        tag = node.tag
        if not isinstance(tag, str):  # comments / processing instructions
            return []
        if tag in GRADIENT_TAGS:
            self._register_gradient(node)
            self.opaque.append(_raw_xml(node))
            return []
        if tag == "defs":
            for sub in node.iter():
                if sub.tag in GRADIENT_TAGS:
                    self._register_gradient(sub)
            self.opaque.append(_raw_xml(node))
            return []
        if tag == "use":
            return self._inline_use(node, inherited, transform, opacity)
        if tag in CONTAINER_TAGS:
            own, own_tf, own_opacity = self._own_state(node)
            merged = {**inherited, **{k: v for k, v in own.items() if k in INHERITED_ATTRS}}
            composed = transform @ own_tf
            combined_opacity = opacity * own_opacity
            if tag == "g" and any(k in own for k in GROUP_LEAF_TRIGGERS):
                return [self._group_leaf(node, own, merged, composed, combined_opacity)]
            return self.walk_children(node, merged, composed, combined_opacity)
        if tag in SHAPE_TAGS:
            element = self._leaf(node, tag, inherited, transform, opacity)
            return [element]
        # Everything else (style, script, metadata, animation, ...) passes
        # through opaquely and is excluded from the element list.
        self.opaque.append(_raw_xml(node))
        return []

    def _own_state(self, node: ET.Element) -> tuple[dict[str, str], Affine, float]:
        own = dict(node.attrib)
        style = own.pop("style", None)
        if style:
            own.update(_parse_style_attr(style))
        tf = parse_transform(own.pop("transform", None))
        opacity = float(own.pop("opacity", "1"))
        return own, tf, opacity

    def _next_id(self, node: ET.Element) -> str:
        self._counter += 1
        return node.get("id") or f"node{self._counter}"

    def _leaf(self, node: ET.Element, kind: str, inherited: dict[str, str],
              transform: Affine, opacity: float) -> VisualElement:
        own, own_tf, own_opacity = self._own_state(node)
        attrs = dict(own)
        for key in INHERITED_ATTRS:
            if key not in attrs and key in inherited:
                attrs[key] = inherited[key]
        composed = transform @ own_tf
        if not composed.is_identity():
            attrs["transform"] = composed.to_svg()
        else:
            attrs.pop("transform", None)
        total_opacity = opacity * own_opacity
        if total_opacity != 1.0:
            attrs["opacity"] = format_number(total_opacity)
        text = None
        if kind == "text":
            text = " ".join("".join(node.itertext()).split())
        element = VisualElement(
            index=-1, kind=kind, attributes=attrs, text=text,
            origin=Origin(self._next_id(node)),
        )
        self.elements.append(element)
        return element

    def _group_leaf(self, node: ET.Element, own: dict[str, str], merged: dict[str, str],
                    transform: Affine, opacity: float) -> VisualElement:
        sub = _Builder(self.id_map)
        children = sub.walk_children(node, merged, transform, opacity)
        self.gradients.update(sub.gradients)
        self.opaque.extend(sub.opaque)
        attrs = {k: v for k, v in own.items() if k in GROUP_LEAF_TRIGGERS or k == "id"}
        raw = "".join(serialize_element(c) for c in children)
        element = VisualElement(
            index=-1, kind="group-leaf", attributes=attrs, raw=raw,
            origin=Origin(self._next_id(node)), children=tuple(children),
        )
        self.elements.append(element)
        return element

    def _inline_use(self, node: ET.Element, inherited: dict[str, str],
                    transform: Affine, opacity: float) -> list[VisualElement]:
        own, own_tf, own_opacity = self._own_state(node)
        href = own.pop("href", None)
        if not href or not href.startswith("#"):
            raise SvgParseError(f"use element with unresolvable reference {href!r}")
        target_id = href[1:]
        target = self.id_map.get(target_id)
        if target is None:
            raise SvgParseError(f"use references unknown id {target_id!r}")
        if target_id in self._use_stack:
            raise SvgParseError(f"circular use reference through id {target_id!r}")
        shift = Affine.translation(float(own.pop("x", 0) or 0), float(own.pop("y", 0) or 0))
        merged = {**inherited, **{k: v for k, v in own.items() if k in INHERITED_ATTRS}}
        self._use_stack.append(target_id)
        try:
            return self.walk(target, merged, transform @ own_tf @ shift, opacity * own_opacity)
        finally:
            self._use_stack.pop()

    def _register_gradient(self, node: ET.Element) -> None:
        grad_id = node.get("id")
        if not grad_id:
            return
        kind = "linear" if node.tag == "linearGradient" else "radial"
        stops = []
        for stop in node:
            if stop.tag != "stop":
                continue
            sattrs = dict(stop.attrib)
            style = sattrs.pop("style", None)
            if style:
                sattrs.update(_parse_style_attr(style))
            offset = _fraction(sattrs.get("offset", "0"))
            color = parse_color(sattrs.get("stop-color", "black")) or (0.0, 0.0, 0.0, 0.0)
            alpha = color[3] * float(sattrs.get("stop-opacity", "1"))
            stops.append(GradientStop(offset, (color[0], color[1], color[2], alpha)))
        href = node.get("href")
        if not stops and href and href.startswith("#"):
            parent = self.gradients.get(href[1:])
            if parent is not None:
                stops = list(parent.stops)
        coord_names = ("x1", "y1", "x2", "y2") if kind == "linear" else ("cx", "cy", "r", "fx", "fy")
        coords = tuple((n, _fraction(node.get(n))) for n in coord_names if node.get(n) is not None)
        self.gradients[grad_id] = Gradient(
            kind=kind,
            stops=tuple(sorted(stops, key=lambda s: s.offset)),
            units=node.get("gradientUnits", "objectBoundingBox"),
            transform=parse_transform(node.get("gradientTransform")),
            coords=coords,
        )


def _fraction(value: str | None) -> float:
    if value is None:
        return 0.0
    v = value.strip()
    if v.endswith("%"):
        return float(v[:-1]) / 100.0
    return float(v)


def _raw_xml(node: ET.Element) -> str:
    return ET.tostring(node, encoding="unicode")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def serialize_element(element: VisualElement) -> str:
    tag = "g" if element.kind == "group-leaf" else element.kind
    attrs = "".join(f" {k}={quoteattr(v)}" for k, v in element.attributes.items())
    if element.kind == "group-leaf":
        return f"<{tag}{attrs}>{element.raw or ''}</{tag}>"
    if element.kind == "text":
        return f"<{tag}{attrs}>{escape(element.text or '')}</{tag}>"
    return f"<{tag}{attrs}/>"


def serialize(doc: SvgDocument) -> str:
    """Standalone SVG markup with an explicit viewBox."""
    x, y, w, h = doc.viewbox
    vb = " ".join(format_number(v) for v in (x, y, w, h))
    parts = [f'<svg xmlns="{_XMLNS}" viewBox="{vb}">']
    parts.extend(doc.statics.opaque_nodes)
    parts.extend(serialize_element(e) for e in doc.elements)
    parts.append("</svg>")
    return "\n".join(parts)


def _derive(doc: SvgDocument, elements: list[VisualElement],
            extra_notes: tuple[str, ...] = ()) -> SvgDocument:
    """New document with re-indexed elements and regenerated source text."""
    indexed = tuple(replace(e, index=i) for i, e in enumerate(elements))
    out = SvgDocument(source="", viewbox=doc.viewbox, elements=indexed,
                      statics=doc.statics, notes=doc.notes + extra_notes)
    return replace(out, source=serialize(out))


# ---------------------------------------------------------------------------
# Structural operations
# ---------------------------------------------------------------------------

def ablate(doc: SvgDocument, index: int) -> SvgDocument:
    """Document without element `index`; everything else untouched."""
    if not (0 <= index < doc.n_elements):
        raise IndexError(f"element index {index} out of range [0, {doc.n_elements})")
    remaining = [e for i, e in enumerate(doc.elements) if i != index]
    return _derive(doc, remaining)


SplitVerifier = Callable[[VisualElement, list[VisualElement]], bool]


def split_subpaths(doc: SvgDocument, verifier: SplitVerifier | None = None) -> SvgDocument:
    """Split compound paths at moveto boundaries into standalone elements.

    Fragments inherit all parent paint attributes and occupy consecutive
    positions at the parent's index. When a `verifier` is supplied it is
    asked whether the fragments reproduce the parent's rendering; a refusal
    keeps the parent unsplit and records a note on the document.
    """
    out: list[VisualElement] = []
    notes: list[str] = []
    changed = False
    for element in doc.elements:
        if element.kind != "path":
            out.append(element)
            continue
        d = element.attributes.get("d", "")
        try:
            if count_movetos(d) < 2:
                out.append(element)
                continue
            fragments_d = split_path_data(d)
        except PathDataError as exc:
            raise PathDataError(f"element {element.index} ({element.origin.node_id}): {exc}") from exc
        fragments = []
        for ordinal, frag_d in enumerate(fragments_d):
            attrs = {k: v for k, v in element.attributes.items() if k != "id"}
            attrs["d"] = frag_d
            fragments.append(VisualElement(
                index=-1, kind="path", attributes=attrs,
                origin=Origin(element.origin.node_id, subpath=ordinal),
            ))
        if verifier is not None and not verifier(element, fragments):
            notes.append(
                f"element {element.index} ({element.origin.node_id}): subpath split "
                "not render-equivalent; kept unsplit"
            )
            out.append(element)
            continue
        out.extend(fragments)
        changed = True
    if not changed and not notes:
        return doc
    return _derive(doc, out, tuple(notes))


def apply_edit(doc: SvgDocument, edit: EditSpec) -> SvgDocument:
    """Apply a structural edit, leaving untargeted elements untouched."""
    edit.validate(doc.n_elements)
    if edit.kind == "delete":
        keep = [e for i, e in enumerate(doc.elements) if i not in set(edit.targets)]
        if len(keep) == doc.n_elements:
            return doc
        return _derive(doc, keep)
    if edit.kind == "regroup":
        return _regroup(doc, edit.targets)
    if edit.kind == "color":
        return _recolor(doc, edit.targets, edit.color)  # type: ignore[arg-type]
    if edit.kind == "move":
        return _transform_edit(doc, edit.targets, Affine.translation(edit.dx, edit.dy))
    if edit.kind == "scale":
        return _scale_edit(doc, edit.targets, edit.factor)  # type: ignore[arg-type]
    raise EditError(f"unknown edit kind {edit.kind!r}")  # pragma: no cover


def _recolor(doc: SvgDocument, targets: tuple[int, ...], rgb: tuple[int, int, int]) -> SvgDocument:
    value = rgb_to_hex(rgb)
    out = list(doc.elements)
    for i in targets:
        attrs = dict(out[i].attributes)
        fill = attrs.get("fill")
        stroke = attrs.get("stroke")
        if fill == "none" and stroke is not None and stroke != "none":
            attrs["stroke"] = value
        else:
            attrs["fill"] = value
        out[i] = replace(out[i], attributes=attrs)
    return _derive(doc, out)


def _transform_edit(doc: SvgDocument, targets: tuple[int, ...], prefix: Affine) -> SvgDocument:
    out = list(doc.elements)
    for i in targets:
        attrs = dict(out[i].attributes)
        current = parse_transform(attrs.get("transform"))
        attrs["transform"] = (prefix @ current).to_svg()
        out[i] = replace(out[i], attributes=attrs)
    return _derive(doc, out)


def _scale_edit(doc: SvgDocument, targets: tuple[int, ...], factor: float) -> SvgDocument:
    from .shapes import element_bbox_user  # local import to avoid a cycle

    boxes = []
    for i in targets:
        box = element_bbox_user(doc.elements[i])
        if box is not None:
            boxes.append(box)
    if not boxes:
        return doc if not targets else _derive(doc, list(doc.elements))
    x0 = min(b[0] for b in boxes)
    y0 = min(b[1] for b in boxes)
    x1 = max(b[2] for b in boxes)
    y1 = max(b[3] for b in boxes)
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    pivot_scale = (Affine.translation(cx, cy)
                   @ Affine.scaling(factor)
                   @ Affine.translation(-cx, -cy))
    return _transform_edit(doc, targets, pivot_scale)


def _regroup(doc: SvgDocument, targets: tuple[int, ...]) -> SvgDocument:
    if not targets:
        return doc
    ordered_targets = sorted(targets)
    target_set = set(targets)
    block = [doc.elements[i] for i in ordered_targets]
    rest = [e for i, e in enumerate(doc.elements) if i not in target_set]
    insert_at = ordered_targets[0]
    out = rest[:insert_at] + block + rest[insert_at:]
    return _derive(doc, out)
