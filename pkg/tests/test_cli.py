import json
import os

import numpy as np
import pytest

import toruskit as tk
from toruskit import serialize
from toruskit.cli import main

from conftest import t0_periods


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def t0_file(tmp_path):
    return write(tmp_path, "t0.json",
                 serialize.encode_torus(tk.make_torus(t0_periods())))


def test_sample_torus_deterministic(capsys):
    code1, out1 = run(["sample-torus", "--n", "3", "--seed", "11"], capsys)
    code2, out2 = run(["sample-torus", "--n", "3", "--seed", "11"], capsys)
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    tk.make_torus(serialize.decode(doc).periods)  # revalidates


def test_sample_kinds_roundtrip(capsys):
    for kind in ("torus", "structure", "metric", "ext-class"):
        code, out = run(["sample-torus", "--kind", kind, "--seed", "5"], capsys)
        assert code == 0
        serialize.decode(json.loads(out))


def test_sample_ext_class_obstruction_free(capsys):
    from toruskit import bundles
    code, out = run(["sample-torus", "--kind", "ext-class", "--seed", "9"], capsys)
    nu = serialize.decode(json.loads(out))
    assert bundles.obstruction_norm(nu) == 0.0


def test_sample_corpus_roundtrips(capsys):
    # 100-document corpus: every emitted document re-parses and re-validates
    for seed in range(25):
        for kind in ("torus", "structure", "metric", "ext-class"):
            code, out = run(["sample-torus", "--kind", kind,
                             "--seed", str(seed)], capsys)
            assert code == 0
            serialize.decode(json.loads(out))


def test_check_generic_t0_negative(t0_file, capsys):
    code, out = run(["check-generic", "--in", t0_file], capsys)
    assert code == 10
    doc = json.loads(out)
    assert doc["verdict"] == "non_generic"
    assert sorted(map(tuple, doc["subtorus"]["basis"])) == [
        (0, 0, 0, 1, 0, 0), (1, 0, 0, 0, 0, 0)]
    assert doc["reverified"] is True


def test_check_generic_random_inconclusive(tmp_path, capsys):
    path = write(tmp_path, "t.json",
                 serialize.encode_torus(tk.random_torus(3, 77)))
    code, out = run(["check-generic", "--in", path], capsys)
    assert code == 20
    assert json.loads(out)["verdict"] == "no_obstruction_found"


def test_hodge_type_pure_and_mixed(tmp_path, t0_file, capsys):
    w = tk.MultiVector.basis_element(6, 0, 3)
    path = write(tmp_path, "w.json", serialize.encode_multivector(w))
    code, out = run(["hodge-type", "--in", path, "--torus", t0_file], capsys)
    assert code == 0 and json.loads(out)["pq"] == [1, 1]
    w2 = tk.MultiVector.basis_element(6, 0, 1)
    path2 = write(tmp_path, "w2.json", serialize.encode_multivector(w2))
    code, out = run(["hodge-type", "--in", path2, "--torus", t0_file], capsys)
    assert code == 10 and json.loads(out)["pq"] is None


def test_connect_cli(tmp_path, capsys):
    from conftest import general_position_pair
    i, j = general_position_pair(3)
    pi = write(tmp_path, "i.json", serialize.encode_structure(i))
    pj = write(tmp_path, "j.json", serialize.encode_structure(j))
    code, out = run(["connect", "--i", pi, "--j", pj, "--seed", "7"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["hops"] <= 6 and doc["residual"] < 1e-8
    chain = serialize.decode(doc)
    assert tk.verify_chain(chain).ok


def test_section_cli_and_not_transversal(tmp_path, capsys):
    g = tk.identity_metric(6)
    from toruskit.twistor import random_transversal_pair
    a, b = random_transversal_pair(g, 4)
    pi = write(tmp_path, "i.json", serialize.encode_structure(a.structure()))
    pj = write(tmp_path, "j.json", serialize.encode_structure(b.structure()))
    pg = write(tmp_path, "g.json", serialize.encode_metric(g))
    wi = write(tmp_path, "wi.json", [[1.0, 0], [0, 1], [0, 0]])
    wj = write(tmp_path, "wj.json", [[0.5, 0], [0, 0], [1, 0]])
    code, out = run(["section", "--i", pi, "--j", pj, "--metric", pg,
                     "--wi", wi, "--wj", wj], capsys)
    assert code == 0
    assert json.loads(out)["residual"] < 1e-9
    code, _ = run(["section", "--i", pi, "--j", pi, "--metric", pg,
                   "--wi", wi, "--wj", wj], capsys)
    assert code == 10


def test_transport_cli(tmp_path, capsys):
    g = tk.identity_metric(6)
    from toruskit.twistor import random_transversal_pair
    a, b = random_transversal_pair(g, 8)
    pi = write(tmp_path, "i.json", serialize.encode_structure(a.structure()))
    pl = write(tmp_path, "l.json", serialize.encode_structure(b.structure()))
    pg = write(tmp_path, "g.json", serialize.encode_metric(g))
    t = write(tmp_path, "t.json", [[0.3, 0], [0, -0.2], [1, 0]])
    code, out = run(["transport", "--i", pi, "--l", pl, "--lp", pl,
                     "--metric", pg, "--t", t], capsys)
    assert code == 0
    w = np.array(json.loads(out)["w"])
    assert np.abs(w - [[0.3, 0], [0, -0.2], [1, 0]]).max() < 1e-9


def test_bundle_extend_cli(tmp_path, capsys):
    from toruskit.bundles import Character, ExtClass, GradedFlatBundle
    from toruskit.twistor import random_transversal_pair
    g = tk.identity_metric(6)
    a, b = random_transversal_pair(g, 12)
    ch = Character.trivial(6)
    rng = np.random.default_rng(0)
    nu = ExtClass(bundle=GradedFlatBundle(blocks=((ch, 1), (ch, 1))),
                  forms={(1, 0): rng.standard_normal((3, 1, 1))
                         + 1j * rng.standard_normal((3, 1, 1))})
    pe = write(tmp_path, "e.json", serialize.encode_ext_class(nu))
    pi = write(tmp_path, "i.json", serialize.encode_structure(a.structure()))
    pj = write(tmp_path, "j.json", serialize.encode_structure(b.structure()))
    pg = write(tmp_path, "g.json", serialize.encode_metric(g))
    code, out = run(["bundle-extend", "--ext", pe, "--i", pi, "--j", pj,
                     "--l", pi, "--metric", pg], capsys)
    assert code == 0
    back = serialize.decode(json.loads(out))
    assert back.norm() < 1e-9  # restriction at I vanishes


def test_massey_cli(tmp_path, capsys):
    from toruskit.fourier import FourierForm, FourierFormSpace
    sp = FourierFormSpace(3, 3)
    c = np.zeros((3, 2, 2), complex)
    c[0] = [[0, 2.0], [0, 0]]
    theta = FourierForm(sp, 1, {(0,) * 6: c}, extra=(2, 2))
    path = write(tmp_path, "theta.json", serialize.encode_fourier_form(theta))
    code, out = run(["massey", "--in", path], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["converged"] and doc["mc_residual"] < 1e-12

    c2 = np.zeros((3, 3, 3), complex)
    c2[0] = np.diag([0, 0, 0.0])
    c2[0][0, 1] = 2.0
    c2[1][1, 2] = 3.0
    theta2 = FourierForm(sp, 1, {(0,) * 6: c2}, extra=(3, 3))
    path2 = write(tmp_path, "theta2.json", serialize.encode_fourier_form(theta2))
    code, _ = run(["massey", "--in", path2], capsys)
    assert code == 10  # obstructed


def test_curvature_scan_cli(capsys):
    code, out = run(["curvature-scan", "--n", "3", "--count", "40",
                     "--seed", "2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["violation"] is False
    assert doc["max_formula_error"] < 1e-12
    assert doc["seed"] == 2


def test_usage_error(capsys):
    assert main(["no-such-command"]) == 1


def test_malformed_input(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{broken")
    assert main(["check-generic", "--in", str(path)]) == 2
    missing = str(tmp_path / "missing.json")
    assert main(["check-generic", "--in", missing]) == 2


def test_env_seed_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TORUSKIT_SEED", "33")
    code, out1 = run(["sample-torus", "--n", "3"], capsys)
    assert code == 0 and json.loads(out1)["seed"] == 33
    monkeypatch.delenv("TORUSKIT_SEED")
    code, out2 = run(["sample-torus", "--n", "3"], capsys)
    assert json.loads(out2)["seed"] == 0


def test_out_flag(tmp_path, capsys):
    target = str(tmp_path / "out.json")
    code, out = run(["sample-torus", "--seed", "1", "--out", target], capsys)
    assert code == 0 and out == ""
    serialize.decode(json.loads(open(target).read()))
