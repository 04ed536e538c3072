import json

import pytest

from colorembed.cli import main, parse_kv, UsageError
from colorembed.graphs import load_family


@pytest.fixture
def run(tmp_path):
    def go(*argv):
        return main([str(a) for a in argv])

    go.dir = tmp_path
    return go


def read(path):
    return json.loads(path.read_text())


def test_parse_kv():
    assert parse_kv(["q=3", "R=1,2"]) == {"q": "3", "R": "1,2"}
    with pytest.raises(UsageError):
        parse_kv(["q"])


def test_gen_examples(run):
    d = run.dir
    assert run("gen", "--ffdist", "q=3", "d=2", "R=1", "-o", d / "f.json") == 0
    F = load_family(d / "f.json")
    assert F.n == 9 and set(F.graphs[0].degrees()) == {4}
    assert run("gen", "--complete", "n=30", "-o", d / "k.json") == 0
    assert load_family(d / "k.json").graphs[0].num_edges == 435
    assert run("gen", "--ffdist", "q=4", "-o", d / "bad.json") == 2
    assert run("gen", "--complete", "n=5") == 2
    assert run("gen", "--complete", "n=5", "--random", "n=5", "-o", d / "x.json") == 2
    assert run("bogus") == 2


def test_certify_examples(run, k5_plus_isolated):
    from colorembed.graphs import save_family

    d = run.dir
    run("gen", "--complete", "n=30", "-o", d / "k.json")
    # (v, 1) misses v itself, so K_30 is 2-joined but not 1-joined
    assert run("certify", d / "k.json", "--joined", "s=1", "-o", d / "c1.json") == 1
    assert run("certify", d / "k.json", "--joined", "s=2", "-o", d / "c2.json") == 0
    save_family(k5_plus_isolated, d / "iso.json")
    assert run("certify", d / "iso.json", "--joined", "s=2", "-o", d / "c3.json") == 1
    rep = read(d / "c3.json")["reports"]["joined"]
    assert rep["verdict"] == "fail" and rep["witness"]["X"]
    assert run("certify", d / "iso.json", "--jumbled", "spectral") == 2
    assert run("certify", d / "iso.json", "--joined", "-o", d / "m.json") == 0
    assert read(d / "m.json")["reports"]["min_joined"]["s"] == 3
    assert run("certify", d / "missing.json", "--joined", "s=1") == 2


def test_certify_spectral_and_exhaustive(run):
    d = run.dir
    run("gen", "--ffdist", "q=3", "d=2", "R=1", "-o", d / "f.json")
    assert run("certify", d / "f.json", "--jumbled", "spectral", "-o", d / "s.json") == 0
    rep = read(d / "s.json")["reports"]["jumbled"]
    assert rep["p"] == pytest.approx(4 / 9) and rep["beta"] == pytest.approx(2)
    run("gen", "--complete", "n=4", "-o", d / "k4.json")
    assert run("certify", d / "k4.json", "--jumbled", "exhaustive", "p=0.75", "beta=1") == 0
    assert run("certify", d / "k4.json", "--jumbled", "exhaustive", "p=0.2", "beta=1") == 1
    assert run("certify", d / "k4.json", "--jumbled", "exhaustive", "p=0.2", "beta=0.1") == 2


def test_embed_and_verify_joined(run):
    d = run.dir
    run("gen", "--complete", "n=30", "-o", d / "k.json")
    assert run("target", "subdivision", "D=3", "ell=3", "-o", d / "t.json") == 0
    assert run("embed", d / "k.json", d / "t.json", "s=1", "D=3", "mode=exact", "-o", d / "e.json") == 0
    out = read(d / "e.json")
    assert out["run"]["seed"] == 0 and out["embedding"]["steps"]
    assert run("verify", d / "k.json", d / "e.json", "--target", d / "t.json", "--goodness", "bound=2s") == 0
    assert run("verify", d / "k.json", d / "e.json", "--goodness", "bound=2s", "mode=exact", "cap=10") == 2


def test_embed_short_paths_names_condition(run):
    d = run.dir
    run("gen", "--complete", "n=30", "-o", d / "k.json")
    run("target", "subdivision", "D=3", "ell=3", "-o", d / "t.json")
    assert run("embed", d / "k.json", d / "t.json", "s=2", "D=3", "mode=exact", "-o", d / "e.json") == 1
    err = read(d / "e.json")["error"]
    assert "required_path_length" in err["message"] or err.get("condition") == "required_path_length"
    assert run("verify", d / "k.json", d / "e.json") == 2


def test_embed_distance_target(run):
    d = run.dir
    run("gen", "--ffdist", "q=5", "d=2", "R=1", "-o", d / "f.json")
    run("target", "subdivision", "D=3", "ell=5", "color=1", "-o", d / "t.json")
    assert run("embed", d / "f.json", d / "t.json", "mode=best-effort", "-o", d / "e.json") == 0
    out = read(d / "e.json")
    assert out["s"] == 11 and out["s_source"] == "exhaustive"
    assert run("verify", d / "f.json", d / "e.json", "--target", d / "t.json") == 0


def test_embed_expansion(run):
    d = run.dir
    run("gen", "--complete", "n=40", "-o", d / "k.json")
    assert run("target", "expansion", "D=3", "ell=3", "tree=2", "-o", d / "t.json") == 0
    assert run("embed", d / "k.json", d / "t.json", "s=1", "-o", d / "e.json") == 0
    assert run("verify", d / "k.json", d / "e.json", "--target", d / "t.json", "--goodness") == 0


def test_verify_corrupted_map(run):
    d = run.dir
    # K_30 minus the matching {2i, 2i+1}
    run("gen", "--matching-deleted", "n=30", "-o", d / "m.json")
    run("target", "subdivision", "D=3", "ell=5", "-o", d / "t.json")
    assert run("embed", d / "m.json", d / "t.json", "s=2", "mode=best-effort", "-o", d / "e.json") == 0
    doc = read(d / "e.json")
    emb = doc["embedding"]
    images = {int(h): x for h, x in emb["map"].items()}
    used = set(images.values())
    # move one endpoint onto the matched partner of the other, which is unused
    u, v = next((a, b) for a, b, _ in emb["target"]["edges"] if images[b] ^ 1 not in used)
    images[u] = images[v] ^ 1
    emb["map"] = {str(h): x for h, x in images.items()}
    (d / "bad.json").write_text(json.dumps(doc))
    assert run("verify", d / "m.json", d / "bad.json", "-o", d / "r.json") == 1
    problems = read(d / "r.json")["problems"]
    assert any(f"({u}, {v})" in p or f"({v}, {u})" in p for p in problems)


def test_outputs_repeat_with_same_seed(run):
    d = run.dir
    for k in range(2):
        sub = d / str(k)
        sub.mkdir()
        assert run("--seed", 7, "gen", "--random", "n=20", "p=0.5", "t=2", "-o", sub / "f.json") == 0
        assert run("--seed", 7, "target", "subdivision", "D=3", "ell=5", "t=2", "pattern=random", "-o", sub / "t.json") == 0
        assert run("--seed", 7, "embed", sub / "f.json", sub / "t.json", "s=1", "mode=best-effort", "-o", sub / "e.json") in (0, 1)
    for name in ("f.json", "t.json", "e.json"):
        a = read(d / "0" / name)
        b = read(d / "1" / name)
        for doc in (a, b):
            if "run" in doc:
                doc["run"].pop("inputs")
                doc["run"].pop("output")
        assert a == b
    other = d / "other.json"
    run("--seed", 8, "gen", "--random", "n=20", "p=0.5", "t=2", "-o", other)
    assert read(other) != read(d / "0" / "f.json")


def test_export(run, capsys):
    d = run.dir
    run("gen", "--complete", "n=4", "t=2", "-o", d / "k.json")
    assert run("export", d / "k.json", d / "dot") == 0
    assert len(list((d / "dot").glob("*.dot"))) == 3


def test_verify_reports_collision(run):
    d = run.dir
    run("gen", "--complete", "n=30", "-o", d / "k.json")
    run("target", "subdivision", "D=3", "ell=3", "-o", d / "t.json")
    run("embed", d / "k.json", d / "t.json", "s=1", "-o", d / "e.json")
    doc = read(d / "e.json")
    doc["embedding"]["map"]["1"] = doc["embedding"]["map"]["0"]
    (d / "bad.json").write_text(json.dumps(doc))
    assert run("verify", d / "k.json", d / "bad.json", "-o", d / "r.json") == 1
    assert "share host vertex" in read(d / "r.json")["problems"][0]
