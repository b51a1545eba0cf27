import json
from pathlib import Path

import numpy as np
import pytest

from mcagg import cli
from mcagg.core import make_partition
from mcagg.errors import (BadAssignment, BadBigram, DuplicateLabel,
                          LabelMismatch, NegativeCount, NonLetter, ParseError,
                          RaggedRows, RowSumViolation)
from mcagg.io import (file_sha256, ingest_bigrams, parse_matrix,
                      parse_partitions, read_report, write_matrix,
                      write_partitions, write_report)
from mcagg.selection import SelectionOptions, SelectionReport

DATA = Path(__file__).resolve().parents[1] / "data"


# --- parse_matrix / write_matrix ---

def test_parse_identity_csv(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,0\n0,1\n")
    m = parse_matrix(p)
    assert np.array_equal(m.rows, np.eye(2))
    assert m.labels is None


def test_parse_ragged(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,0\n1\n")
    with pytest.raises(RaggedRows):
        parse_matrix(p)


def test_parse_renormalizes_near_one(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("0.5000001,0.5\n0.25,0.7499999\n")
    m = parse_matrix(p)
    assert np.abs(m.rows.sum(axis=1) - 1.0).max() < 1e-15


def test_parse_rejects_bad_sums(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("0.6,0.5\n0.5,0.5\n")
    with pytest.raises(RowSumViolation):
        parse_matrix(p)


def test_parse_bad_token_position(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,0\n0,oops\n")
    with pytest.raises(ParseError) as exc:
        parse_matrix(p)
    assert exc.value.line == 2
    assert exc.value.column == 2


def test_parse_label_header(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("u,v\n0.5,0.5\n0.25,0.75\n")
    m = parse_matrix(p)
    assert m.labels == ("u", "v")


def test_parse_json_variant(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"labels": ["x", "y"],
                             "matrix": [[0.5, 0.5], [0.1, 0.9]]}))
    m = parse_matrix(p, format="json")
    assert m.labels == ("x", "y")
    assert np.allclose(m.rows, [[0.5, 0.5], [0.1, 0.9]], atol=1e-15)
    p2 = tmp_path / "bad.json"
    p2.write_text(json.dumps({"rows": []}))
    with pytest.raises(ParseError):
        parse_matrix(p2, format="json")


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_matrix_round_trip(tmp_path, fmt):
    rng = np.random.default_rng(0)
    from mcagg.core import StochasticMatrix
    m = StochasticMatrix(rows=rng.dirichlet(np.ones(5), size=5),
                         labels=tuple("abcde"))
    p = tmp_path / f"m.{fmt}"
    write_matrix(m, p, format=fmt)
    back = parse_matrix(p, format=fmt)
    assert np.abs(back.rows - m.rows).max() < 1e-12
    assert back.labels == m.labels


# --- ingest_bigrams ---

def test_ingest_unsmoothed_rows(tmp_path):
    p = tmp_path / "b.txt"
    p.write_text("aa 100\nab 100\nba 300\nbb 300\n")
    m = ingest_bigrams(p, smoothing=0.0)
    assert np.allclose(m.rows[0, :2], [0.5, 0.5], atol=1e-15)
    assert np.all(m.rows[0, 2:] == 0.0)
    assert np.allclose(m.rows[1, :2], [0.5, 0.5], atol=1e-15)
    # letters with no observed transitions fall back to uniform
    assert np.allclose(m.rows[2], 1 / 26, atol=1e-15)
    assert m.labels == tuple("abcdefghijklmnopqrstuvwxyz")


def test_ingest_empty_file_uniform(tmp_path):
    p = tmp_path / "b.txt"
    p.write_text("\n")
    m = ingest_bigrams(p, smoothing=1.0)
    assert np.allclose(m.rows, 1 / 26, atol=1e-15)


def test_ingest_errors(tmp_path):
    cases = [("abc 5\n", BadBigram), ("ab x\n", BadBigram),
             ("Ab 5\n", NonLetter), ("ab -3\n", NegativeCount)]
    for text, err in cases:
        p = tmp_path / "b.txt"
        p.write_text(text)
        with pytest.raises(err):
            ingest_bigrams(p)


def test_ingest_sample_strictly_positive():
    m = ingest_bigrams(DATA / "bigrams_sample.txt", smoothing=1.0)
    assert (m.rows > 0).all()
    assert np.abs(m.rows.sum(axis=1) - 1.0).max() < 1e-12


# --- partitions ---

def test_parse_partitions_trivial(tmp_path):
    p = tmp_path / "p.json"
    p.write_text('{"1": [0, 0, 0]}')
    parts = parse_partitions(p)
    assert parts[1].k == 1 and parts[1].n == 3


def test_parse_partitions_label_sets():
    m = ingest_bigrams(DATA / "bigrams_sample.txt")
    parts = parse_partitions(DATA / "table1_partitions.json",
                             labels=m.labels)
    vowels = sorted("aeiouy")
    got = [m.labels[i] for i in np.where(parts[2].assign ==
                                         parts[2].assign[0])[0]]
    assert sorted(got) == vowels


def test_parse_partitions_surjectivity(tmp_path):
    p = tmp_path / "p.json"
    p.write_text('{"2": [0, 2]}')
    with pytest.raises(BadAssignment):
        parse_partitions(p)


def test_parse_partitions_label_errors(tmp_path):
    labels = ("a", "b", "c")
    p = tmp_path / "p.json"
    p.write_text('{"2": [["a", "q"], ["b", "c"]]}')
    with pytest.raises(LabelMismatch):
        parse_partitions(p, labels=labels)
    p.write_text('{"2": [["a", "b"], ["b", "c"]]}')
    with pytest.raises(DuplicateLabel):
        parse_partitions(p, labels=labels)
    p.write_text('{"2": [["a"], ["b"]]}')
    with pytest.raises(LabelMismatch):   # c uncovered
        parse_partitions(p, labels=labels)


def test_partitions_round_trip(tmp_path):
    parts = {1: make_partition([0, 0, 0, 0]),
             2: make_partition([0, 1, 0, 1]),
             3: make_partition([0, 1, 2, 2])}
    p = tmp_path / "p.json"
    write_partitions(parts, p)
    back = parse_partitions(p)
    assert sorted(back) == [1, 2, 3]
    for k in parts:
        assert np.array_equal(back[k].assign, parts[k].assign)


# --- reports ---

def test_report_csv_formatting(tmp_path):
    rep = SelectionReport(k_t=2, t_bars={1: np.e ** 2, 2: np.e},
                          nus={2: 1.0})
    p = tmp_path / "r.csv"
    write_report(rep, p)
    lines = p.read_text().splitlines()
    assert lines[-2] == "1,7.389056098931,"
    assert lines[-1] == "2,2.718281828459,1.000000000000"
    assert "k,t_bar,nu" in lines
    assert any(ln.startswith("# k_t: 2") for ln in lines)


def test_report_json_round_trip(tmp_path):
    rep = SelectionReport(
        k_t=3, t_bars={1: 4.0, 2: 2.0, 3: 0.5}, nus={2: 0.69, 3: 1.386},
        options=SelectionOptions(mode="whiten", membership="raw"),
        per_superstate={1: [4.0], 2: [2.0, 1.0], 3: [0.5, 0.2, 0.1]})
    p = tmp_path / "r.json"
    write_report(rep, p, format="json", input_hash="cafe")
    back = read_report(p)
    assert back.k_t == rep.k_t
    assert back.t_bars == rep.t_bars
    assert back.nus == rep.nus
    assert back.options == rep.options
    assert back.per_superstate == rep.per_superstate
    assert json.loads(p.read_text())["input"] == "cafe"


def test_report_exact_fit_round_trip(tmp_path):
    rep = SelectionReport(k_t=2, t_bars={1: 1.0, 2: 0.0},
                          nus={2: np.inf}, exact_fit=True)
    p = tmp_path / "r.json"
    write_report(rep, p, format="json")
    back = read_report(p)
    assert back.exact_fit
    assert back.nus[2] == np.inf


# --- CLI ---

def _gen_matrix(tmp_path, seed=42):
    out = tmp_path / "pi.csv"
    rc = cli.main(["gen", "ncd", "--blocks", "3,3,3", "--eps", "0.05",
                   "--seed", str(seed), "--out", str(out)])
    assert rc == 0
    return out


def test_cli_gen_and_pipeline(tmp_path, capsys):
    mpath = _gen_matrix(tmp_path)
    report = tmp_path / "report.json"
    rc = cli.main(["pipeline", "--matrix", str(mpath), "--kmax", "6",
                   "--out", str(report)])
    assert rc == 0
    obj = json.loads(report.read_text())
    assert obj["k_t"] == 3
    out = capsys.readouterr().out
    assert out.startswith("config:")
    assert "k_t = 3" in out


def test_cli_select_bigrams(tmp_path, capsys):
    mpath = tmp_path / "bigram.csv"
    rc = cli.main(["ingest-bigrams", "--counts",
                   str(DATA / "bigrams_sample.txt"), "--out", str(mpath)])
    assert rc == 0
    rc = cli.main(["select", "--matrix", str(mpath), "--partitions",
                   str(DATA / "table1_partitions.json")])
    assert rc == 0
    assert "k_t = 2" in capsys.readouterr().out


def test_cli_aggregate_writes_partitions(tmp_path):
    mpath = _gen_matrix(tmp_path)
    parts = tmp_path / "parts.json"
    models = tmp_path / "models.json"
    rc = cli.main(["aggregate", "--matrix", str(mpath), "--kmax", "4",
                   "--out", str(parts), "--models", str(models)])
    assert rc == 0
    back = parse_partitions(parts)
    assert 1 in back
    mobj = json.loads(models.read_text())
    for k, rec in mobj.items():
        psi = np.asarray(rec["psi"])
        assert np.abs(psi.sum(axis=1) - 1.0).max() < 1e-9


def test_cli_exit_codes(tmp_path):
    assert cli.main(["select"]) == 1                     # missing args
    assert cli.main(["pipeline", "--matrix", "nope.csv"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\nx,y\n")
    assert cli.main(["select", "--matrix", str(bad),
                     "--partitions", str(bad)]) == 2     # parse failure
    sums = tmp_path / "sums.csv"
    sums.write_text("0.5,0.6\n0.5,0.5\n")
    assert cli.main(["pipeline", "--matrix", str(sums)]) == 1
    assert cli.main(["pipeline", "--matrix", str(sums), "--bogus"]) == 1


def test_cli_deterministic_reports(tmp_path):
    mpath = _gen_matrix(tmp_path, seed=7)
    r1, r2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for r in (r1, r2):
        rc = cli.main(["pipeline", "--matrix", str(mpath), "--kmax", "5",
                       "--out", str(r)])
        assert rc == 0
    assert file_sha256(r1) == file_sha256(r2)


def test_cli_stationary_rho(tmp_path, capsys):
    mpath = _gen_matrix(tmp_path)
    rc = cli.main(["pipeline", "--matrix", str(mpath), "--kmax", "4",
                   "--rho", "stationary"])
    assert rc == 0
    assert "k_t =" in capsys.readouterr().out
