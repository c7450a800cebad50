import json
import math
import os
from pathlib import Path

import pytest

import causal_steer as cs

SOURCE = Path(os.environ.get("CAUSAL_STEER_SOURCE_DIR", Path(__file__).resolve().parents[2]))
MANIFEST = SOURCE / "fixtures" / "manifest.json"


def test_extraction_matches_the_target_lines():
    items = cs.extract_interventions("He is young, he has a beard.", "She is young.")
    assert items == [("gender", "woman"), ("beard", "absent")]
    assert cs.render_target_interventions(items) == "woman, no-beard (gender)"
    assert dict(cs.parse_attributes("This woman is old."))["age"] == "old"


def test_decoupling_sentence_only_for_downstream_interventions():
    sentence = "do not include references to age or gender"
    assert sentence in cs.render_evaluation_instruction("A bald woman", [("bald", "present")])["body"]
    plain = cs.render_evaluation_instruction("A woman is young", [("age", "young")])
    assert sentence not in plain["body"] and not plain["decoupled"]


def test_mutilation_and_cosine():
    cut = cs.mutilate([("beard", "present")])
    assert all(child != "beard" for _, child in cut["edges"])
    assert len(cut["edges"]) < len(cs.builtin_graph()["edges"])
    assert cs.parents("beard") == ["age", "gender"]
    assert math.isclose(cs.cosine([1, 1], [1, 0]), 1 / math.sqrt(2), abs_tol=1e-12)
    with pytest.raises(cs.CausalSteerError) as err:
        cs.cosine([0, 0], [1, 0])
    assert err.value.code == "zero-vector"


def test_manifest_and_mock_sweep(tmp_path):
    manifest = cs.load_manifest(str(MANIFEST))
    assert [i["id"] for i in manifest["items"]] == ["item-001", "item-002"]
    runs = tmp_path / "runs"
    assert cs.steer(str(MANIFEST), str(runs), items=["item-001"], labels=["age"], mock=True, fixed_clock=True) == 0
    trace = json.loads((runs / "item-001-age" / "trace.json").read_text())
    assert trace["status"] == "approved"
    assert cs.evaluate([str(runs)], str(tmp_path / "reports"), mock=True) == 0
    report = json.loads((tmp_path / "reports" / "report.json").read_text())
    assert report["columns"] == ["age", "gender", "beard", "bald", "VLM-Min"]
