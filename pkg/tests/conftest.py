import json

import pytest

GRAPH_DOC = {
    "model": {"kind": "linear-projection", "params": {"n": 2, "k": 1, "p": 2},
              "grid": {"axes": [[0, 2, 0.01]]}},
    "sections": {
        "flat": {"kind": "expr", "payload": "0"},
        "diag": {"kind": "expr", "payload": "y1"},
        "para": {"kind": "expr", "payload": "y1^2"},
    },
    "weights": {"f": "0.5+0.4*cos(5*y1)"},
    "checks": [
        {"prop": "chain", "args": {"phi": "para", "at": [1]}},
        {"prop": "leibniz", "args": {"phi": "diag", "psi": "para", "f": "f", "at": [1]}},
        {"prop": "affine", "args": {"phi": "diag", "psi": "para", "alpha": 0.3, "beta": 0.7,
                                    "at": [1]}},
    ],
}


@pytest.fixture
def graph_doc():
    return json.loads(json.dumps(GRAPH_DOC))


@pytest.fixture
def write_doc(tmp_path):
    def write(doc, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)
    return write
