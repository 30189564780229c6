import numpy as np
import pytest

from conftest import compound_corpus, grid_doc, svg_doc, HOLE_PUNCHER_NAMES
from svglens.errors import EditError, EmptyDocumentError, SvgParseError
from svglens.model import (
    EditSpec,
    ablate,
    apply_edit,
    parse,
    serialize,
    split_subpaths,
)
from svglens.pipeline import split_verified
from svglens.raster import abs_diff, render


def signatures(doc):
    return [(e.kind, e.attributes, e.text, e.raw) for e in doc.elements]


class TestParse:
    def test_document_order(self):
        doc = svg_doc('<rect x="1" y="1" width="5" height="5"/><circle cx="9" cy="9" r="2"/>')
        assert [(e.index, e.kind) for e in doc.elements] == [(0, "rect"), (1, "circle")]

    def test_empty_document_error(self):
        with pytest.raises(EmptyDocumentError):
            parse("<svg viewBox='0 0 10 10'></svg>")

    def test_malformed_xml_reports_offset(self):
        with pytest.raises(SvgParseError) as err:
            parse("<svg viewBox='0 0 10 10'><rect </svg>")
        assert err.value.byte_offset is not None
        assert err.value.byte_offset > 0

    def test_non_svg_root(self):
        with pytest.raises(SvgParseError):
            parse("<html><svg/></html>")

    def test_nested_groups_flatten_to_leaves(self):
        nested = parse("""
        <svg viewBox="0 0 100 100">
          <g transform="translate(10 0)" fill="red">
            <g transform="scale(2)" fill-opacity="0.5">
              <g transform="translate(5 5)">
                <rect x="0" y="0" width="10" height="10"/>
                <rect x="15" y="0" width="10" height="10" fill="blue"/>
              </g>
              <circle cx="20" cy="30" r="5"/>
            </g>
            <rect x="70" y="70" width="12" height="12"/>
          </g>
        </svg>""")
        assert [e.kind for e in nested.elements] == ["rect", "rect", "circle", "rect"]
        # render-equivalence against a manually flattened twin
        flat = parse("""
        <svg viewBox="0 0 100 100">
          <rect x="0" y="0" width="10" height="10" fill="red" fill-opacity="0.5"
                transform="matrix(2 0 0 2 20 10)"/>
          <rect x="15" y="0" width="10" height="10" fill="blue" fill-opacity="0.5"
                transform="matrix(2 0 0 2 20 10)"/>
          <circle cx="20" cy="30" r="5" fill="red" fill-opacity="0.5"
                  transform="matrix(2 0 0 2 10 0)"/>
          <rect x="70" y="70" width="12" height="12" fill="red"
                transform="matrix(1 0 0 1 10 0)"/>
        </svg>""")
        diff = abs_diff(render(nested, 128), render(flat, 128))
        assert diff.values.max() == 0.0

    def test_style_attribute_wins(self):
        doc = svg_doc('<rect width="10" height="10" fill="blue" style="fill:red"/>')
        assert doc.elements[0].attributes["fill"] == "red"

    def test_opacity_composes_multiplicatively(self):
        doc = parse("""
        <svg viewBox="0 0 10 10">
          <g opacity="0.5"><rect width="10" height="10" opacity="0.5"/></g>
        </svg>""")
        assert doc.elements[0].attributes["opacity"] == "0.25"

    def test_use_is_inlined(self):
        doc = parse("""
        <svg viewBox="0 0 100 100">
          <defs><rect id="unit" width="10" height="10" fill="teal"/></defs>
          <use href="#unit" x="20" y="30"/>
        </svg>""")
        assert [e.kind for e in doc.elements] == ["rect"]
        assert "matrix" in doc.elements[0].attributes["transform"]

    def test_use_unknown_reference_errors(self):
        with pytest.raises(SvgParseError):
            parse('<svg viewBox="0 0 10 10"><use href="#ghost"/></svg>')

    def test_unsupported_nodes_pass_through(self):
        doc = parse("""
        <svg viewBox="0 0 10 10">
          <script>alert(1)</script>
          <rect width="5" height="5"/>
        </svg>""")
        assert [e.kind for e in doc.elements] == ["rect"]
        assert any("script" in node for node in doc.statics.opaque_nodes)
        reparsed = parse(serialize(doc))
        assert signatures(reparsed) == signatures(doc)

    def test_group_leaf_for_clip(self):
        doc = parse("""
        <svg viewBox="0 0 10 10">
          <g clip-path="url(#c)"><rect width="5" height="5" fill="red"/></g>
        </svg>""")
        assert [e.kind for e in doc.elements] == ["group-leaf"]
        assert doc.elements[0].children[0].kind == "rect"

    def test_viewbox_fallback_to_width_height(self):
        doc = parse('<svg width="50px" height="20"><rect width="5" height="5"/></svg>')
        assert doc.viewbox == (0.0, 0.0, 50.0, 20.0)

    def test_missing_geometry_errors(self):
        with pytest.raises(SvgParseError):
            parse("<svg><rect width='5' height='5'/></svg>")


class TestRoundTrip:
    @pytest.mark.parametrize("n", [1, 4, 9])
    def test_parse_serialize_roundtrip(self, n):
        doc = grid_doc(n)
        again = parse(serialize(doc))
        assert signatures(again) == signatures(doc)
        assert again.viewbox == doc.viewbox

    def test_serialize_stable(self):
        doc = grid_doc(5)
        assert serialize(parse(serialize(doc))) == serialize(doc)


class TestAblate:
    def test_basic(self):
        doc = svg_doc('<rect width="5" height="5"/><circle cx="8" cy="8" r="1"/>')
        out = ablate(doc, 0)
        assert [e.kind for e in out.elements] == ["circle"]

    def test_sequence_equality(self):
        doc = grid_doc(6)
        for i in range(doc.n_elements):
            out = ablate(doc, i)
            expected = [e for j, e in enumerate(doc.elements) if j != i]
            assert list(out.elements) == expected  # equality ignores index

    def test_serialized_order_preserved(self):
        doc = grid_doc(5)
        out = serialize(ablate(doc, 2))
        survivors = [f'x="{e.attributes["x"]}" y="{e.attributes["y"]}"'
                     for i, e in enumerate(doc.elements) if i != 2]
        positions = [out.find(needle) for needle in survivors]
        assert positions == sorted(positions) and -1 not in positions

    def test_out_of_range(self):
        doc = grid_doc(2)
        with pytest.raises(IndexError):
            ablate(doc, 2)

    def test_ablating_zero_opacity_element_preserves_render(self):
        doc = svg_doc('<rect x="10" y="10" width="40" height="40" fill="red"/>'
                      '<rect x="30" y="30" width="40" height="40" fill="blue" opacity="0"/>'
                      '<circle cx="70" cy="30" r="12" fill="green"/>')
        diff = abs_diff(render(ablate(doc, 1), 96), render(doc, 96))
        assert diff.values.max() == 0.0

    def test_occluded_bottom_element_render_identical(self):
        doc = svg_doc(
            '<rect x="40" y="40" width="10" height="10" fill="red"/>'
            '<rect x="20" y="20" width="60" height="60" fill="blue"/>'
            '<circle cx="10" cy="10" r="4" fill="green"/>'
            '<rect x="80" y="80" width="9" height="9" fill="#ccc"/>'
            '<circle cx="90" cy="10" r="4" fill="#333"/>')
        diff = abs_diff(render(ablate(doc, 0), 96), render(doc, 96))
        assert diff.values.max() == 0.0


class TestSplitSubpaths:
    def test_trivial_split(self):
        doc = svg_doc('<path d="M0 0 L1 0 M5 5 L6 5" stroke="black" fill="none"/>')
        out = split_subpaths(doc)
        assert [e.kind for e in out.elements] == ["path", "path"]
        assert out.elements[0].origin.subpath == 0
        assert out.elements[1].origin.subpath == 1

    def test_single_moveto_unchanged(self):
        doc = svg_doc('<path d="M0 0 L5 5 Z" fill="red"/>')
        assert split_subpaths(doc) is doc

    def test_idempotent(self):
        doc = svg_doc('<path d="M5 5 h20 v20 h-20 z m50 0 h20 v20 h-20 z" fill="#3a3"/>')
        once = split_subpaths(doc)
        twice = split_subpaths(once)
        assert signatures(twice) == signatures(once)

    def test_paint_attributes_inherited(self):
        doc = svg_doc(
            '<path d="M0 0 h5 M8 8 h5" stroke="#123" stroke-width="2" fill="none" '
            'fill-rule="evenodd" opacity="0.7"/>')
        out = split_subpaths(doc)
        for e in out.elements:
            for key in ("stroke", "stroke-width", "fill", "fill-rule", "opacity"):
                assert e.attributes[key] == doc.elements[0].attributes[key]

    def test_fragment_starts_with_single_moveto(self):
        doc = svg_doc('<path d="m10 10 h5 m20 0 h5 m20 0 h5" stroke="red" fill="none"/>')
        out = split_subpaths(doc)
        for e in out.elements:
            d = e.attributes["d"]
            assert d.startswith("M ")
            assert d.count("M") == 1 and "m" not in d

    def test_render_equivalence_corpus(self):
        for name, doc in compound_corpus():
            if name in HOLE_PUNCHER_NAMES:
                continue
            out = split_subpaths(doc)
            diff = abs_diff(render(out, 128), render(doc, 128))
            assert diff.values.mean() < 1.0 / 255.0, name

    def test_hole_punchers_fall_back_with_note(self):
        for name in HOLE_PUNCHER_NAMES:
            body = dict(compound_corpus())  # name -> doc
            doc = body[name]
            out = split_verified(doc)
            assert signatures(out) == signatures(doc), name
            assert any("kept unsplit" in note for note in out.notes), name
            diff = abs_diff(render(out, 128), render(doc, 128))
            assert diff.values.max() == 0.0


class TestApplyEdit:
    def test_move_shifts_by_user_units(self):
        doc = svg_doc('<rect x="10" y="10" width="20" height="20" fill="red"/>')
        moved = apply_edit(doc, EditSpec(kind="move", targets=(0,), dx=20.0, dy=0.0))
        twin = svg_doc('<rect x="30" y="10" width="20" height="20" fill="red"/>')
        assert abs_diff(render(moved, 100), render(twin, 100)).values.max() == 0.0

    def test_delete_empty_targets_identity(self):
        doc = grid_doc(3)
        assert apply_edit(doc, EditSpec(kind="delete", targets=())) is doc

    def test_delete_removes_only_targets(self):
        doc = grid_doc(5)
        out = apply_edit(doc, EditSpec(kind="delete", targets=(1, 3)))
        expected = [e for i, e in enumerate(doc.elements) if i not in (1, 3)]
        assert list(out.elements) == expected

    def test_regroup_permutation(self):
        doc = grid_doc(9)
        out = apply_edit(doc, EditSpec(kind="regroup", targets=(1, 4, 7)))
        order = [doc.elements.index(e) for e in out.elements]
        assert order == [0, 1, 4, 7, 2, 3, 5, 6, 8]

    def test_color_targets_fill_then_stroke(self):
        doc = svg_doc(
            '<rect width="5" height="5" fill="blue"/>'
            '<rect width="5" height="5" fill="none" stroke="blue"/>')
        out = apply_edit(doc, EditSpec(kind="color", targets=(0, 1), color=(1, 2, 3)))
        assert out.elements[0].attributes["fill"] == "#010203"
        assert out.elements[1].attributes["stroke"] == "#010203"
        assert out.elements[1].attributes["fill"] == "none"

    def test_scale_about_joint_bbox_center(self):
        doc = svg_doc('<rect x="20" y="20" width="20" height="20" fill="red"/>'
                      '<rect x="60" y="60" width="20" height="20" fill="blue"/>')
        out = apply_edit(doc, EditSpec(kind="scale", targets=(0, 1), factor=0.5))
        # joint bbox center is (50, 50); scaling by 0.5 maps 20 -> 35, 80 -> 65
        twin = svg_doc('<rect x="35" y="35" width="10" height="10" fill="red"/>'
                       '<rect x="55" y="55" width="10" height="10" fill="blue"/>')
        assert abs_diff(render(out, 100), render(twin, 100)).values.max() == 0.0

    def test_validation_errors(self):
        doc = grid_doc(3)
        with pytest.raises(EditError):
            apply_edit(doc, EditSpec(kind="delete", targets=(5,)))
        with pytest.raises(EditError):
            apply_edit(doc, EditSpec(kind="scale", targets=(0,), factor=0.0))
        with pytest.raises(EditError):
            apply_edit(doc, EditSpec(kind="move", targets=(0,)))
        with pytest.raises(EditError):
            apply_edit(doc, EditSpec(kind="delete", targets=(0,), color=(1, 2, 3)))
        with pytest.raises(EditError):
            apply_edit(doc, EditSpec(kind="delete", targets=(1, 1)))
        with pytest.raises(EditError):
            apply_edit(doc, EditSpec(kind="warp", targets=(0,)))
