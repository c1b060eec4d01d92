"""End-to-end command-line checks: exit codes, emitted certificates,
verification, and manifest replay."""

import json

import pytest

from symdyn.certificates import load_certificate, load_manifest
from symdyn.cli import (
    format_pattern,
    main,
    parse_letter,
    parse_pattern,
    parse_region,
)
from symdyn.groups import parse_group
from symdyn.subshifts import SubshiftError

Z = parse_group("Z")


# --- parsing helpers -----------------------------------------------------------


def test_parse_region_interval_and_subset_forms():
    r = parse_region(Z, "-2..3")
    assert [g[0] for g in r] == [0, -1, 1, -2, 2, 3]
    assert parse_region(Z, "ball:2") == Z.ball(2)
    with pytest.raises(SubshiftError):
        parse_region(Z, "5..1")


def test_parse_letter_depths():
    assert parse_letter("3") == 3
    assert parse_letter("0.1") == (0, 1)
    assert parse_letter("1.0.1") == (1, 0, 1)


def test_parse_pattern_round_trips_through_format():
    p = parse_pattern(Z, "0=1,1=0,-3=1")
    assert p.value_at((-3,)) == 1
    assert parse_pattern(Z, format_pattern(Z, p)) == p
    stacked = parse_pattern(Z, "0=1.0")
    assert stacked.value_at((0,)) == (1, 0)


def test_parse_pattern_rejects_bad_syntax():
    with pytest.raises(SubshiftError):
        parse_pattern(Z, "0:1")
    with pytest.raises(SubshiftError):
        parse_pattern(Z, "")


# --- simple commands -----------------------------------------------------------


def test_corpus_lists_builtins(capsys):
    assert main(["corpus"]) == 0
    out = capsys.readouterr().out
    assert "period2" in out
    assert "golden_mean" in out
    assert "squares" in out


def test_ball_command(capsys):
    assert main(["ball", "Z", "2"]) == 0
    out = capsys.readouterr().out
    assert "|ball(2)| = 5" in out


def test_separated_exit_codes(capsys):
    assert main(["separated", "Z", "--d", "ball:1", "--s", "0,5"]) == 0
    assert main(["separated", "Z", "--d", "ball:1", "--s", "0,1"]) == 1
    out = capsys.readouterr().out
    assert "not separated" in out


def test_small_command_exit_codes(capsys):
    assert main([
        "small", "Z", "--member", "squares", "--radius", "2",
        "--region", "0..200", "--syndetic-cap", "60",
    ]) == 0
    assert "overall: small-up-to-scale" in capsys.readouterr().out
    assert main([
        "small", "Z", "--member", "evens", "--radius", "1",
        "--region", "0..400", "--syndetic-cap", "60",
    ]) == 1


def test_small_unknown_member_is_usage_error(capsys):
    assert main([
        "small", "Z", "--member", "primes", "--radius", "1", "--region", "0..10",
    ]) == 2
    assert "unknown member" in capsys.readouterr().err


def test_patterns_command(capsys):
    assert main(["patterns", "golden_mean", "--window", "0,1", "--list"]) == 0
    out = capsys.readouterr().out
    assert "3 admissible patterns" in out
    assert "0=1,1=0" in out


def test_conf_command_success_and_rejection(capsys):
    assert main([
        "conf", "golden_mean", "--f", "0,1,2,3,4", "--a", "0=1", "--b", "4=1",
    ]) == 0
    assert "0=1,1=0,2=0,3=0,4=1" in capsys.readouterr().out
    assert main([
        "conf", "period2", "--f", "0,1,2,3,4,5", "--a", "0=0", "--b", "5=0",
    ]) == 1
    assert "rejected:" in capsys.readouterr().err


def test_bad_pattern_syntax_is_usage_error(capsys):
    assert main([
        "conf", "golden_mean", "--f", "0,1", "--a", "0-1", "--b", "1=0",
    ]) == 2
    assert "error:" in capsys.readouterr().err


# --- verdict commands ------------------------------------------------------------


def test_irreducible_verdicts(capsys):
    assert main(["irreducible", "golden_mean", "--d", "ball:2", "--scale", "8"]) == 0
    assert "holds" in capsys.readouterr().out
    assert main(["irreducible", "period2", "--d", "ball:2", "--scale", "8"]) == 1
    assert "fails" in capsys.readouterr().out


def test_scp_command_prints_covering_set(capsys):
    assert main(["scp", "period2", "--d", "ball:1", "--u", "0=0"]) == 0
    assert "covering set: 0, -3" in capsys.readouterr().out


def test_lift_scp_command(capsys):
    assert main(["lift-scp", "period2_or", "--d", "ball:1", "--u", "0=1"]) == 0
    assert "covering set: 0" in capsys.readouterr().out


def test_joint_realize_command(capsys):
    assert main([
        "joint-realize", "period2", "--alpha", "0=0,1=1", "--u", "0=1",
    ]) == 0
    assert "realized at g = " in capsys.readouterr().out


def test_disjoint_command_and_guard(capsys):
    assert main([
        "disjoint", "period2", "full_shift", "--window", "0,1", "--scale", "120",
    ]) == 0
    assert "8/8 joint window pairs realized" in capsys.readouterr().out
    assert main([
        "disjoint", "period2", "period2", "--window", "0", "--scale", "120",
    ]) == 1
    assert "rejected:" in capsys.readouterr().err


def test_shatter_rejects_non_small_set(capsys):
    assert main([
        "shatter", "--member", "evens", "--c", "0", "--region", "0..400",
    ]) == 1
    assert "rejected:" in capsys.readouterr().err


def test_densify_command(capsys):
    assert main([
        "densify", "full_shift", "--window", "0", "--level", "1",
        "--scale", "12", "--samples", "2",
    ]) == 0
    out = capsys.readouterr().out
    assert "displaying ball radius 1" in out
    assert "holds" in out


def test_pad_free_command(capsys):
    assert main(["pad-free", "period2", "--g", "2"]) == 0
    assert "holds" in capsys.readouterr().out


def test_cylinder_point_command(capsys):
    assert main(["cylinder-point", "Z", "--u", "0=1,1=1", "--radius", "3"]) == 0
    out = capsys.readouterr().out
    assert "=" in out


# --- certificates on disk ---------------------------------------------------------


def test_emit_then_verify_round_trip(tmp_path, capsys):
    cert = str(tmp_path / "irr.json")
    assert main([
        "irreducible", "golden_mean", "--d", "ball:2", "--scale", "8",
        "--emit", cert,
    ]) == 0
    env = load_certificate(cert)
    assert env["claim"] == "irreducible-gluing"
    assert main(["verify", cert]) == 0
    assert "ok - reproduced byte-identically" in capsys.readouterr().out


def test_verify_detects_tampered_certificate(tmp_path, capsys):
    cert = str(tmp_path / "irr.json")
    main(["irreducible", "golden_mean", "--d", "ball:2", "--scale", "8",
          "--emit", cert])
    env = json.loads(open(cert).read())
    env["verdict"] = False
    with open(cert, "w") as fh:
        fh.write(json.dumps(env))
    assert main(["verify", cert]) == 1
    assert "FAILED" in capsys.readouterr().out


def test_verify_unreadable_file(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "missing.json")]) == 1
    assert "unreadable" in capsys.readouterr().out


def test_emitted_false_verdict_still_verifies(tmp_path, capsys):
    cert = str(tmp_path / "p2.json")
    assert main([
        "irreducible", "period2", "--d", "ball:2", "--scale", "8",
        "--emit", cert,
    ]) == 1
    assert main(["verify", cert]) == 0
    assert "fails (as recorded)" in capsys.readouterr().out


# --- manifests and replay -----------------------------------------------------------


def test_manifest_records_argv_without_manifest_flag(tmp_path):
    cert = str(tmp_path / "c.json")
    mani = str(tmp_path / "m.json")
    main(["irreducible", "golden_mean", "--d", "ball:2", "--scale", "8",
          "--emit", cert, "--manifest", mani])
    m = load_manifest(mani)
    assert "--manifest" not in m.argv
    assert m.argv[0] == "irreducible"
    assert m.outputs[0][0] == cert


def test_replay_reproduces_byte_identical_artifacts(tmp_path, capsys):
    cert = str(tmp_path / "c.json")
    mani = str(tmp_path / "m.json")
    main(["irreducible", "golden_mean", "--d", "ball:2", "--scale", "8",
          "--emit", cert, "--manifest", mani])
    assert main(["replay", mani]) == 0
    assert "byte-identical" in capsys.readouterr().out


def test_replay_leaves_manifest_intact_and_is_repeatable(tmp_path, capsys):
    cert = str(tmp_path / "c.json")
    mani = str(tmp_path / "m.json")
    main(["irreducible", "golden_mean", "--d", "ball:2", "--scale", "8",
          "--emit", cert, "--manifest", mani])
    before = open(mani).read()
    assert main(["replay", mani]) == 0
    assert open(mani).read() == before
    assert main(["replay", mani]) == 0
    assert capsys.readouterr().out.count("byte-identical") == 2


def test_replay_detects_drifted_artifacts(tmp_path, capsys):
    cert = str(tmp_path / "c.json")
    mani = str(tmp_path / "m.json")
    main(["irreducible", "golden_mean", "--d", "ball:2", "--scale", "8",
          "--emit", cert, "--manifest", mani])
    m = json.loads(open(mani).read())
    m["outputs"][0][1] = "0" * 64
    with open(mani, "w") as fh:
        fh.write(json.dumps(m))
    assert main(["replay", mani]) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_replay_missing_manifest_is_usage_error(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "nope.json")]) == 2
    assert "error:" in capsys.readouterr().err
