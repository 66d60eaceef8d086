from __future__ import annotations

import json

import numpy as np
import pytest

from stardil import io
from stardil.algebroid import PositiveForm, StarAlgebroid, random_amplified
from stardil.cli import main, run
from stardil.dilation import dilate
from stardil.errors import DocumentError
from stardil.free import DirectedGraph, free_star_semigroupoid
from stardil.maps import CoherentMap
from stardil.semigroupoid import cyclic_group, pair_groupoid
from pullbacks import free_star_pullback, pair_groupoid_pullback
from test_ckt import edge_family

TRIVIAL = {"format": "sgd", "version": 1, "objects": 1,
           "elements": [{"id": 0, "d": 0, "c": 0}], "mul": [[0, 0, 0]],
           "star": [[0, 0]], "units": [[0, 0]]}


def test_trivial_group_parses():
    t = io.parse_sgd(TRIVIAL)
    assert t.n_elements == 1 and t.mul[0, 0] == 0


def test_unknown_id_in_mul():
    doc = dict(TRIVIAL, mul=[[0, 0, 3]])
    with pytest.raises(DocumentError) as exc:
        io.parse_sgd(doc)
    assert exc.value.path == "mul[0][2]"


def test_conflicting_products_name_both_triples():
    doc = {"format": "sgd", "version": 1, "objects": 1,
           "elements": [{"id": 0, "d": 0, "c": 0}, {"id": 1, "d": 0, "c": 0}],
           "mul": [[0, 0, 0], [0, 0, 1]]}
    with pytest.raises(DocumentError) as exc:
        io.parse_sgd(doc)
    msg = str(exc.value)
    assert "[0, 0, 0]" in msg and "[0, 0, 1]" in msg and exc.value.path == "mul[1]"


def test_schema_errors_carry_paths():
    with pytest.raises(DocumentError) as exc:
        io.parse_sgd(dict(TRIVIAL, elements=[{"id": 0, "d": -1, "c": 0}]))
    assert exc.value.path == "elements[0].d"
    with pytest.raises(DocumentError) as exc:
        io.parse_sgd(dict(TRIVIAL, version=2))
    assert exc.value.path == "version"


def test_syntax_errors_carry_positions():
    with pytest.raises(DocumentError) as exc:
        io.loads('{"a":\n  1,,}')
    assert exc.value.line == 2


def test_missing_star_entry():
    doc = dict(TRIVIAL, elements=[{"id": 0, "d": 0, "c": 0}, {"id": 1, "d": 0, "c": 0}],
               mul=[[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]])
    with pytest.raises(DocumentError, match="no star given for element 1"):
        io.parse_sgd(doc)


@pytest.mark.parametrize("table", [
    pair_groupoid(3),
    cyclic_group(4),
    free_star_semigroupoid(DirectedGraph(2, ((0, 1), (1, 1))), 2),
], ids=["pair", "cyclic", "free"])
def test_sgd_round_trip_is_byte_stable(table):
    text = io.dumps(io.sgd_doc(table))
    again = io.dumps(io.sgd_doc(io.parse_sgd(io.loads(text))))
    assert text == again


def test_free_block_must_match():
    t = free_star_semigroupoid(DirectedGraph(1, ((0, 0),)), 2)
    doc = io.sgd_doc(t)
    doc["free"]["L_max"] = 3
    with pytest.raises(DocumentError) as exc:
        io.parse_sgd(doc)
    assert exc.value.path == "free"


def test_map_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pb = free_star_pullback(rng)
    text = io.dumps(io.map_doc(pb.T))
    T = io.parse_map(io.loads(text))
    assert io.dumps(io.map_doc(T)) == text
    assert all(np.array_equal(a, b) for a, b in zip(T.mats, pb.T.mats))
    # referenced table
    io.write(tmp_path / "t.json", io.sgd_doc(pb.T.table))
    io.write(tmp_path / "m.json", io.map_doc(pb.T, sgd_ref="t.json"))
    T2 = io.parse_map(io.read(tmp_path / "m.json"), tmp_path)
    assert T2.table.n_elements == pb.T.table.n_elements


def test_map_coherence_enforced_on_load():
    T = CoherentMap.scalar(pair_groupoid(2), [1, 1, 1, 1])
    doc = io.map_doc(T)
    doc["mats"][2]["rows"] = 2
    doc["mats"][2]["entries"] *= 2
    with pytest.raises(DocumentError) as exc:
        io.parse_map(doc)
    assert exc.value.path == "mats[2]"
    doc = io.map_doc(T)
    doc["sgd"]["mul"][0][1] = 99
    with pytest.raises(DocumentError) as exc:
        io.parse_map(doc)
    assert exc.value.path == "sgd.mul[0][1]"
    doc = io.map_doc(T)
    del doc["mats"][3]
    with pytest.raises(DocumentError, match="no matrix for element 3"):
        io.parse_map(doc)


def test_dilation_round_trip():
    rng = np.random.default_rng(1)
    pb = pair_groupoid_pullback(rng, n=3)
    D = dilate(pb.T, order=rng.permutation(9))
    text = io.dumps(io.dilation_doc(D))
    D2 = io.parse_dilation(io.loads(text), pb.T.table)
    assert io.dumps(io.dilation_doc(D2)) == text
    assert D2.ordering == D.ordering
    assert json.loads(text)["layout"][0]["blocks"][0]["offset"] == 0


def test_ckt_and_element_documents():
    fam = edge_family()
    fam2 = io.parse_ckt(io.ckt_doc(fam))
    assert all(np.array_equal(a, b) for a, b in zip(fam.S, fam2.S))
    rng = np.random.default_rng(2)
    alg = StarAlgebroid(pair_groupoid(2))
    X = random_amplified(alg, rng, 2)
    assert io.parse_amplified(io.amplified_doc(X)) == X
    single = io.parse_amplified(io.formal_doc(X.entries[0][0]))
    assert single.n == 1
    bad = io.amplified_doc(X)
    bad["entries"][1][0]["fiber"] = [0]
    with pytest.raises(DocumentError) as exc:
        io.parse_amplified(bad)
    assert exc.value.path.startswith("entries[1][0].fiber")


def test_form_document():
    t = cyclic_group(2)
    om, t2 = io.parse_form(io.form_doc(PositiveForm([1, 0.5]), t))
    assert om.values == (1, 0.5) and t2.n_elements == 2


# ---------------------------------------------------------------------------
# command line


@pytest.fixture
def workdir(tmp_path):
    t = pair_groupoid(2)
    io.write(tmp_path / "pg.json", io.sgd_doc(t))
    io.write(tmp_path / "map.json", io.map_doc(CoherentMap.scalar(t, [1, 1, 1, 1], tau=[0, 1]), sgd_ref="pg.json"))
    io.write(tmp_path / "bad.json", io.map_doc(CoherentMap.scalar(t, [1, 2, 2, 1])))
    io.write(tmp_path / "graph.json", {"format": "graph", "vertices": 2, "edges": [[0, 1], [1, 1]]})
    io.write(tmp_path / "ckt.json", io.ckt_doc(edge_family()))
    io.write(tmp_path / "a.json", {"format": "matrix", "rows": 1, "cols": 1, "entries": [[0.5, 0]]})
    io.write(tmp_path / "form.json", io.form_doc(PositiveForm([1, 1, 1, 1]), t))
    return tmp_path


def cli(workdir, *args):
    return run([str(workdir / a) if a.endswith(".json") else a for a in args])


def test_psd_check_pass(workdir):
    code, rep = cli(workdir, "psd-check", "map.json")
    assert code == 0 and rep["verdict"] == "PASS"
    assert set(rep["residuals"]["lambda_min"]) == {"0", "1"}
    assert rep["tolerances"]["psd_relative"] == 1e-9


def test_psd_check_fail_has_witness(workdir):
    code, rep = cli(workdir, "psd-check", "bad.json")
    assert code == 1 and rep["witnesses"]["psd"]["fiber"] == 0
    assert rep["witnesses"]["psd"]["lambda_min"] == pytest.approx(-1.0)


def test_dilate_verify_equiv(workdir):
    assert cli(workdir, "dilate", "map.json", "--out", str(workdir / "dA.json"))[0] == 0
    code, rep = cli(workdir, "dilate", "map.json", "--permute", "--seed", "5", "--out", str(workdir / "dB.json"))
    assert code == 0 and rep["seed"] == 5
    code, rep = cli(workdir, "verify", "map.json", "dA.json")
    assert code == 0 and max(v for k, v in rep["residuals"].items() if k != "minimality_defect") < 1e-8
    code, rep = cli(workdir, "equiv", "map.json", "dA.json", "dB.json")
    assert code == 0
    assert set(rep["residuals"]) == {"unitarity", "intertwining", "v_matching"}


def test_dilate_non_psd_fails(workdir):
    code, rep = cli(workdir, "dilate", "bad.json")
    assert code == 1 and "psd" in rep["witnesses"]


def test_minimalize_and_embed(workdir):
    cli(workdir, "dilate", "map.json", "--out", str(workdir / "d.json"))
    code, rep = cli(workdir, "minimalize", "map.json", "d.json")
    assert code == 0 and rep["kdims_after"] == rep["kdims_before"]
    code, rep = cli(workdir, "embed", "map.json", "d.json")
    assert code == 0


def test_embed_non_unital_is_a_fail(workdir):
    t = pair_groupoid(2)
    io.write(workdir / "double.json", io.map_doc(CoherentMap.scalar(t, [2, 2, 2, 2], tau=[0, 1])))
    code, rep = cli(workdir, "embed", "double.json")
    assert code == 1 and "unital" in rep["witnesses"]


@pytest.mark.parametrize("args, expect", [
    (("validate", "pg.json"), 0),
    (("classify", "pg.json"), 0),
    (("free-gen", "graph.json", "--lmax", "2"), 0),
    (("bound", "map.json"), 0),
    (("ckt-check", "ckt.json"), 0),
    (("induce", "ckt.json", "--lmax", "2"), 0),
    (("leftreg", "pg.json", "--tau", "0,0"), 0),
    (("cp-check", "map.json", "--trials", "10"), 0),
    (("cp-check", "bad.json", "--trials", "50"), 1),
    (("sqrt-series", "a.json"), 0),
    (("form-rep", "form.json"), 0),
])
def test_commands(workdir, args, expect):
    code, rep = cli(workdir, *args)
    assert code == expect, rep
    for k, ok in rep["verdicts"].items():
        if not ok:
            assert k in rep["witnesses"]


def test_amplify(workdir):
    alg = StarAlgebroid(pair_groupoid(2))
    X = random_amplified(alg, np.random.default_rng(0), 2)
    io.write(workdir / "x.json", io.amplified_doc(X))
    code, rep = cli(workdir, "amplify", "map.json", "x.json")
    assert code == 0 and rep["matrix"]["rows"] == 2


def test_reports_are_deterministic(workdir):
    a = cli(workdir, "cp-check", "bad.json", "--trials", "20", "--seed", "3")[1]
    b = cli(workdir, "cp-check", "bad.json", "--trials", "20", "--seed", "3")[1]
    a.pop("wall_time")
    b.pop("wall_time")
    assert a == b and a["seed"] == 3


def test_errors_exit_2(workdir, capsys):
    code, rep = cli(workdir, "psd-check", "missing.json")
    assert code == 2 and rep["verdict"] == "ERROR"
    (workdir / "broken.json").write_text("{not json")
    assert main(["validate", str(workdir / "broken.json")]) == 2
    assert "DocumentError" in capsys.readouterr().err


def test_unknown_command_and_arity(workdir):
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        run(["verify", str(workdir / "map.json")])


def test_human_output(workdir, capsys):
    assert main(["psd-check", str(workdir / "map.json"), "--human"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("psd-check: PASS") and "PASS  psd" in out


def test_json_output_is_parseable(workdir, capsys):
    main(["validate", str(workdir / "pg.json")])
    rep = json.loads(capsys.readouterr().out)
    assert rep["command"] == "validate" and len(rep["inputs_digest"]) == 64
