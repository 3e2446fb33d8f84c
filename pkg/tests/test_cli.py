import pytest

from ecvc.cli import main
from ecvc.pedigree import format_ibd, structure_segments
from ecvc.sim import Crossover, SimConfig, export_truth, nuclear, simulate, swap_label, three_generation

PATH_GRAPH = "V v0\nV v1\nV v2\nV v3\nE e0 v0 v1\nE e1 v1 v2\nE e2 v2 v3\n"
TEE_GRAPH = "V v0\nV v1\nV v2\nV p\nE e0 v0 v1\nE e1 v1 v2\nE f v1 p\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_unique_path(tmp_path, capsys):
    g = write(tmp_path, "g.txt", PATH_GRAPH)
    c = write(tmp_path, "c.txt", "C 1 e0 Y R\nC 1 e1 R B\nC 1 e2 B Y\n")
    code, out, _ = run(capsys, "solve", g, c)
    assert code == 0
    assert out.splitlines() == ["S 1 1", "V 1 0 v0 Y", "V 1 0 v1 R", "V 1 0 v2 B", "V 1 0 v3 Y"]


def test_solve_two_solutions_and_diagnostics(tmp_path, capsys):
    g = write(tmp_path, "g.txt", TEE_GRAPH)
    c = write(
        tmp_path,
        "c.txt",
        "C a e0 B R\nC a e1 B R\nC a f B R\n" "C b e0 B B\nC b e1 R R\nC b f B R\n",
    )
    out_file = tmp_path / "sol.txt"
    code, _, _ = run(capsys, "solve", g, c, "-o", out_file, "--max-solutions", 1)
    lines = out_file.read_text().splitlines()
    assert code == 0
    assert lines[0] == "S a 2" and sum(l.startswith("V a 0 ") for l in lines) == 4
    assert not any(l.startswith("V a 1 ") for l in lines)
    assert "S b 0" in lines and "D b EmptyIntersection(v1)" in lines


def test_solve_malformed_inputs(tmp_path, capsys):
    g = write(tmp_path, "g.txt", "V a\nV b\nE e a b\nX junk\n")
    c = write(tmp_path, "c.txt", "C 1 e A B\n")
    code, _, err = run(capsys, "solve", g, c)
    assert code == 2 and ":4:" in err
    g = write(tmp_path, "g2.txt", "V a\nV b\nE e a b\n")
    code, _, err = run(capsys, "solve", g, write(tmp_path, "c2.txt", "C 1 q A B\n"))
    assert code == 2 and "unknown edge" in err
    code, _, _ = run(capsys, "solve", g, write(tmp_path, "c3.txt", "C 1 e A B\nC 1 e A B\n"))
    assert code == 2
    code, _, _ = run(capsys, "solve", g, tmp_path / "absent.txt")
    assert code == 2


@pytest.fixture
def family(tmp_path):
    ped = three_generation((2, 2), 2)
    ts = simulate(SimConfig(pedigree=ped, n_markers=300, missing_rate=0.02, seed=12))
    files = export_truth(ts, tmp_path / "fam")
    return ts, {k: str(v) for k, v in files.items()}


def test_phase(tmp_path, capsys, family):
    ts, f = family
    out = tmp_path / "out"
    code, stdout, _ = run(capsys, "phase", f["pedigree"], f["ibd"], f["genotypes"], "--out-dir", out, "--threads", 1)
    assert code == 0 and "Error=0" in stdout
    haps = (out / "haplotypes.tsv").read_text().splitlines()
    assert len(haps[0].split("\t")) == 301
    report = (out / "marker_report.tsv").read_text().splitlines()
    assert len(report) == 301 and report[0].startswith("marker_id\tstatus")
    code, stdout, _ = run(
        capsys, "phase", f["pedigree"], f["ibd"], f["genotypes"], "--out-dir", out, "--range", "10:20",
        "--drop-individual", "G1_1",
    )
    assert code == 0 and sum(int(x.split("=")[1]) for x in stdout.split()) == 11
    code, _, err = run(capsys, "phase", f["pedigree"], f["ibd"], f["genotypes"], "--drop-individual", "nobody")
    assert code == 2 and "nobody" in err
    code, _, _ = run(capsys, "phase", f["pedigree"], f["ibd"], f["genotypes"], "--range", "5:3")
    assert code == 2


def test_check_ibd_exit_codes(tmp_path, capsys, family):
    ts, f = family
    out = tmp_path / "out"
    code, stdout, _ = run(capsys, "check-ibd", f["pedigree"], f["ibd"], f["genotypes"], "--out-dir", out)
    assert code == 0 and stdout.startswith("Consistent")
    assert (out / "ibd_report.tsv").exists()
    bad = swap_label(ts.pedigree, ts.ibd_at(1), "A1")
    bad_file = write(tmp_path, "bad.tsv", format_ibd(structure_segments(bad, ts.n_markers)))
    code, stdout, _ = run(capsys, "check-ibd", f["pedigree"], bad_file, f["genotypes"], "--out-dir", out)
    assert code == 4 and stdout.startswith("Inconsistent")
    code, _, _ = run(capsys, "check-ibd", f["pedigree"], f["ibd"], f["genotypes"], "--range", "0:10")
    assert code == 2
    code, _, _ = run(capsys, "check-ibd", f["pedigree"], f["ibd"], f["genotypes"], "--suspect", "0.5", "--inconsistent", "0.1")
    assert code == 2


def test_check_ibd_suspect(tmp_path, capsys):
    ts = simulate(SimConfig(pedigree=nuclear(4), n_markers=2000, error_rate=0.01, seed=7))
    f = {k: str(v) for k, v in export_truth(ts, tmp_path).items()}
    code, stdout, _ = run(capsys, "check-ibd", f["pedigree"], f["ibd"], f["genotypes"], "--out-dir", tmp_path)
    assert code == 3 and stdout.startswith("Suspect")


def test_check_ibd_needs_one_interval(tmp_path, capsys):
    ts = simulate(SimConfig(pedigree=nuclear(3), n_markers=200, crossovers=[Crossover("C1", "m", 100)], seed=1))
    f = {k: str(v) for k, v in export_truth(ts, tmp_path).items()}
    code, _, err = run(capsys, "check-ibd", f["pedigree"], f["ibd"], f["genotypes"])
    assert code == 2 and "--range" in err
    code, _, _ = run(capsys, "check-ibd", f["pedigree"], f["ibd"], f["genotypes"], "--range", "1:100", "--out-dir", tmp_path)
    assert code == 0


def test_localize(tmp_path, capsys):
    ts = simulate(SimConfig(pedigree=nuclear(4), n_markers=600, crossovers=[Crossover("C2", "m", 299)], seed=3))
    f = {k: str(v) for k, v in export_truth(ts, tmp_path).items()}
    code, stdout, _ = run(
        capsys, "localize", f["pedigree"], f["ibd"], f["ibd"], f["genotypes"], "--out-dir", tmp_path,
        "--trace", "--event-id", "x",
    )
    assert code == 0
    eid, a, b, status, n_amb, _ = stdout.split()
    ids = [m.id for m in ts.observed.markers]
    assert eid == "x" and status == "Localized" and n_amb == "0"
    assert ids.index(a) + 1 <= 299 < ids.index(b) + 1
    assert len((tmp_path / "localization_trace.tsv").read_text().splitlines()) == 601
    code, _, _ = run(capsys, "localize", f["pedigree"], f["ibd"], f["ibd"], f["genotypes"], "--range", "1:200")
    assert code == 2  # same structure on both sides


def test_localize_leaf_only(tmp_path, capsys):
    ped = nuclear(1, unsequenced=("F",))
    ts = simulate(SimConfig(pedigree=ped, n_markers=300, crossovers=[Crossover("C1", "p", 150)], seed=2))
    f = {k: str(v) for k, v in export_truth(ts, tmp_path).items()}
    code, stdout, _ = run(capsys, "localize", f["pedigree"], f["ibd"], f["ibd"], f["genotypes"], "--out-dir", tmp_path)
    assert code == 0 and "NotLocalizable" in stdout


def test_simulate(tmp_path, capsys):
    cfg = write(tmp_path, "sim.cfg", "pedigree = nuclear\nchildren = 2\nn_markers = 40\nerror_rate = 0.01\nseed = 3\n")
    code, stdout, _ = run(capsys, "simulate", cfg, "--out-dir", tmp_path / "a")
    assert code == 0 and len(stdout.split()) == 3
    run(capsys, "simulate", cfg, "--out-dir", tmp_path / "b")
    for name in ("pedigree.tsv", "ibd.tsv", "genotypes.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run(capsys, "simulate", cfg, "--out-dir", tmp_path / "c", "--seed", 4)
    assert (tmp_path / "a" / "genotypes.tsv").read_bytes() != (tmp_path / "c" / "genotypes.tsv").read_bytes()
    bad = write(tmp_path, "bad.cfg", "error_rate = 2\n")
    assert run(capsys, "simulate", bad)[0] == 2


def test_threads_from_environment(tmp_path, capsys, family, monkeypatch):
    ts, f = family
    monkeypatch.setenv("ECVC_THREADS", "2")
    code, stdout, _ = run(capsys, "phase", f["pedigree"], f["ibd"], f["genotypes"], "--out-dir", tmp_path)
    assert code == 0
    assert run(capsys, "phase", f["pedigree"], f["ibd"], f["genotypes"], "--threads", 0)[0] == 2
