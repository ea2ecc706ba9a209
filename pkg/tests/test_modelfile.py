import json

import numpy as np
import pytest

from intrinsic_lipschitz.modelfile import (
    ModelFileError,
    load_document,
    load_model_file,
    section_entry,
    section_from_entry,
)
from intrinsic_lipschitz.models import random_section


def test_loads(graph_doc):
    ws = load_document(graph_doc)
    assert ws.model.m == 201
    assert set(ws.sections) == {"flat", "diag", "para"}
    np.testing.assert_allclose(ws.sections["para"].params[:, 0], ws.model.base[:, 0] ** 2)
    assert len(ws.checks) == 3


def test_unknown_top_level_key(graph_doc):
    graph_doc["extra"] = 1
    with pytest.raises(ModelFileError, match="unknown key"):
        load_document(graph_doc)


def test_unknown_model_kind(graph_doc):
    graph_doc["model"]["kind"] = "torus"
    with pytest.raises(ModelFileError) as exc:
        load_document(graph_doc)
    assert exc.value.path == "model.kind"


def test_missing_section_reference(graph_doc):
    graph_doc["checks"][0]["args"]["phi"] = "nope"
    with pytest.raises(ModelFileError) as exc:
        load_document(graph_doc)
    assert exc.value.path == "checks[0].args.phi"


def test_missing_weight_reference(graph_doc):
    graph_doc["checks"][1]["args"]["f"] = "g"
    with pytest.raises(ModelFileError, match="weight 'g'"):
        load_document(graph_doc)


def test_affine_coefficients(graph_doc):
    graph_doc["checks"][2]["args"]["beta"] = 0.8
    with pytest.raises(ModelFileError, match="alpha \\+ beta"):
        load_document(graph_doc)


def test_unknown_prop(graph_doc):
    graph_doc["checks"].append({"prop": "nosuch", "args": {}})
    with pytest.raises(ModelFileError) as exc:
        load_document(graph_doc)
    assert exc.value.path == "checks[3].prop"


def test_missing_required_arg(graph_doc):
    del graph_doc["checks"][0]["args"]["at"]
    with pytest.raises(ModelFileError, match="missing"):
        load_document(graph_doc)


def test_expr_syntax_error_has_path(graph_doc):
    graph_doc["sections"]["bad"] = {"kind": "expr", "payload": "y1++2"}
    with pytest.raises(ModelFileError) as exc:
        load_document(graph_doc)
    assert exc.value.path == "sections.bad" and "offset 3" in str(exc.value)


def test_grid_too_large(graph_doc):
    graph_doc["model"]["grid"] = {"axes": [[0, 1, 1e-4]]}
    with pytest.raises(ModelFileError):
        load_document(graph_doc)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "model": {\n    "kind": ,\n  }\n}\n')
    with pytest.raises(ModelFileError) as exc:
        load_model_file(path)
    assert exc.value.line == 3


def test_signs_for_abs_value():
    doc = {"model": {"kind": "abs-value", "params": {"eps": 0.5, "R": 2},
                     "grid": {"points": [0.5, 1.0, 2.0]}},
           "sections": {"s": {"kind": "signs", "payload": [1, -1, 1]}}}
    ws = load_document(doc)
    np.testing.assert_array_equal(ws.sections["s"].scalar(), [0.5, -1.0, 2.0])


def test_expr_rejected_for_circle():
    doc = {"model": {"kind": "circle", "grid": {"axes": [[0, 0.9, 0.1]]}},
           "sections": {"s": {"kind": "expr", "payload": "y1"}}}
    with pytest.raises(ModelFileError):
        load_document(doc)


def test_payload_length():
    doc = {"model": {"kind": "circle", "grid": {"axes": [[0, 0.9, 0.1]]}},
           "sections": {"s": {"kind": "offsets", "payload": [0, 1]}}}
    with pytest.raises(ModelFileError, match="2 entries"):
        load_document(doc)


@pytest.mark.parametrize("spec", [
    {"kind": "linear-projection", "params": {"n": 3, "k": 1, "p": "inf"},
     "grid": {"axes": [[0, 1, 0.25], [0, 1, 0.5]]}},
    {"kind": "abs-value", "params": {"eps": 0.5, "R": 2}, "grid": {"axes": [[0.5, 2, 0.25]]}},
    {"kind": "circle", "params": {}, "grid": {"axes": [[0, 0.9, 0.1]]}},
    {"kind": "heisenberg", "params": {}, "grid": {"axes": [[-0.2, 0.2, 0.1], [-0.2, 0.2, 0.1]]}},
])
def test_section_round_trip(spec):
    ws = load_document({"model": spec})
    phi = random_section(ws.model, 1.0, 12)
    doc = {"model": ws.model.spec(), "sections": {"phi": section_entry(phi)}}
    again = load_document(json.loads(json.dumps(doc)))
    np.testing.assert_array_equal(again.sections["phi"].values, phi.values)
    assert again.model.spec() == ws.model.spec()


def test_section_from_entry_table(graph_doc):
    ws = load_document(graph_doc)
    s = section_from_entry(ws.model, {"kind": "table", "payload": [0.0] * ws.model.m}, "t")
    assert np.all(s.params == 0)
