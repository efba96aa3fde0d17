"""End-to-end command-line tests, exercising every subcommand."""

import json

import pytest

from starfree import corpus
from starfree.cli import main


@pytest.fixture()
def dyck_path(tmp_path):
    p = tmp_path / "dyck_program"
    p.write_text(corpus.data_text("dyck.brasp"))
    return str(p)


@pytest.fixture()
def phi2_path(tmp_path):
    p = tmp_path / "phi2_formula"
    p.write_text(corpus.data_text("phi2.ltl"))
    return str(p)


def test_run_accept_with_trace(dyck_path, capsys):
    code = main(["run", dyck_path, "--input", "llrrllrlrr", "--trace"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("input")
    assert any(line.startswith("Y ") for line in lines)
    assert "accept: True" in out


def test_run_reject_exit_code(dyck_path, capsys):
    assert main(["run", dyck_path, "--input", "lrrlllrrrl"]) == 1


def test_run_empty_input_is_usage_error(dyck_path, capsys):
    assert main(["run", dyck_path, "--input", ""]) == 2
    assert "error:" in capsys.readouterr().err


def test_trace_output_is_byte_stable(dyck_path, capsys):
    main(["run", dyck_path, "--input", "llrr", "--trace"])
    first = capsys.readouterr().out
    main(["run", dyck_path, "--input", "llrr", "--trace"])
    second = capsys.readouterr().out
    assert first == second


def test_transduce_recall(tmp_path, capsys):
    p = tmp_path / "recall_program"
    p.write_text(corpus.data_text("recall.brasp"))
    code = main(["transduce", str(p), "--input", "a3b2b1a2c1a1c3"])
    out = capsys.readouterr().out
    assert code == 0
    assert "a?b?b2a3c?a2c1" in out


def test_translate_then_diff_against_oracle(phi2_path, tmp_path, capsys):
    code = main(
        ["translate", "--from", "ltl", "--to", "brasp", phi2_path, "--alphabet", "a b #"]
    )
    out = capsys.readouterr().out
    assert code == 0
    prog_path = tmp_path / "phi2_program"
    prog_path.write_text(out)
    code = main(["diff", str(prog_path), "corpus:phi2", "--bound", "5"])
    out = capsys.readouterr().out
    assert code == 0
    assert "0 mismatches" in out


def test_translate_inline_formula(capsys):
    code = main(["translate", "--from", "ltl", "--to", "brasp", "Qa S Qb", "--alphabet", "a b"])
    out = capsys.readouterr().out
    assert code == 0
    assert "alphabet: a b" in out


def test_translate_brasp_to_ltl(dyck_path, capsys):
    code = main(["translate", "--from", "brasp", "--to", "ltl", dyck_path])
    out = capsys.readouterr().out
    assert code == 0
    assert " S " in out


def test_compile_run_transformer_and_decompile(dyck_path, tmp_path, capsys):
    weights = tmp_path / "dyck_weights"
    code = main(["compile", dyck_path, "--mode", "naive", "-o", str(weights)])
    assert code == 0
    code = main(["run-transformer", str(weights), "--input", "llrr"])
    out = capsys.readouterr().out
    assert code == 0 and "accept: True" in out
    assert main(["run-transformer", str(weights), "--input", "rl"]) == 1
    capsys.readouterr()
    code = main(["decompile", str(weights), "--variant", "smaller"])
    out = capsys.readouterr().out
    assert code == 0
    assert "output:" in out


def test_compile_depth_mode(dyck_path, tmp_path, capsys):
    weights = tmp_path / "w"
    assert main(["compile", dyck_path, "--mode", "depth", "-o", str(weights)]) == 0
    payload = json.loads(weights.read_text())
    assert len(payload["layers"]) == 3


def test_automata_subcommands(tmp_path, capsys):
    a3 = tmp_path / "a3"
    a3.write_text(corpus.data_text("a3_dfa.json"))
    aa = tmp_path / "aa"
    aa.write_text(corpus.data_text("aa_dfa.json"))
    cas = tmp_path / "cascade"
    cas.write_text(corpus.data_text("a3_cascade.json"))

    assert main(["automata", "check-cf", str(a3)]) == 0
    assert "counter-free: True" in capsys.readouterr().out
    assert main(["automata", "check-cf", str(aa)]) == 1
    capsys.readouterr()
    assert main(["automata", "verify-hom", str(cas), "--target", str(a3)]) == 0
    capsys.readouterr()
    code = main(["automata", "cascade-compile", str(cas), "--target", str(a3)])
    out = capsys.readouterr().out
    assert code == 0
    prog_path = tmp_path / "a3_program"
    prog_path.write_text(out)
    assert main(["diff", str(prog_path), str(a3), "--bound", "6"]) == 0


def test_diff_json_lines_and_jobs(capsys):
    code = main(
        [
            "diff", "corpus:phi1", "corpus:phi2",
            "--bound", "3", "--format", "json-lines",
        ]
    )
    out = capsys.readouterr().out
    assert code == 1
    lines = [json.loads(line) for line in out.splitlines()]
    assert lines[-1]["mismatches"] > 0
    assert all("string" in entry for entry in lines[:-1])


def test_diff_with_jobs(dyck_path, capsys):
    code = main(["diff", dyck_path, "corpus:dyck", "--bound", "6", "--jobs", "2"])
    out = capsys.readouterr().out
    assert code == 0 and "0 mismatches" in out


def test_stutter_check(capsys):
    assert main(["stutter-check", "corpus:apbp_star", "--bound", "6"]) == 0
    capsys.readouterr()
    code = main(["stutter-check", "corpus:ab_star", "--bound", "6"])
    out = capsys.readouterr().out
    assert code == 1
    assert "witness" in out


def test_corpus_list_and_show(capsys):
    assert main(["corpus", "list"]) == 0
    out = capsys.readouterr().out
    assert "language dyck" in out and "data dyck.brasp" in out
    assert main(["corpus", "show", "phi4.ltl"]) == 0
    assert "Qb S" in capsys.readouterr().out


def test_unknown_file_is_error(capsys):
    assert main(["run", "/nonexistent/path", "--input", "a"]) == 2
