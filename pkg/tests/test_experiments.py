import csv
import hashlib
import json
import math
import os
from fractions import Fraction

import pytest

from microentropy.dsl import parse_structure, serialize_structure, structure_to_doc
from microentropy.entropy import CSV_HEADER, EntropyTable
from microentropy.experiments import (
    emit_plot_data,
    pmp_action,
    run_bowen,
    run_shannon,
    run_sofic_dim,
    shannon_entropy,
    sofic_oracle,
)
from microentropy.structures import (
    SoficMap,
    StructureError,
    build_dyn_measure_algebra,
    build_group,
    build_measure_algebra,
    cyclic_group,
    subset_mask,
)

HALVES = [subset_mask([1, 2]), subset_mask([3, 4])]


def z2_source():
    action = SoficMap(("e", "g"), {("g", 4): (3, 4, 1, 2)})
    return build_dyn_measure_algebra(4, action, ["g"])


def test_shannon_references():
    assert shannon_entropy([Fraction(1, 2)] * 2) == pytest.approx(math.log(2))
    assert shannon_entropy([Fraction(1, 4), Fraction(3, 4)]) == pytest.approx(0.5623, abs=1e-4)
    assert shannon_entropy([1, 0]) == 0


def test_shannon_degenerate_vector():
    res = run_shannon([1, 0], [4, 16, 64], [Fraction(1, 100)])
    assert res.reference == 0
    assert res.estimate.sequence == [0.0, 0.0, 0.0]
    assert all(row.n_raw == 1 for row in res.table.rows)


def test_shannon_approaches_reference():
    res = run_shannon([Fraction(1, 2)] * 2, [16, 64, 256, 1024], [Fraction(1, 50)])
    errs = [abs(v - res.reference) for v in res.estimate.sequence]
    assert errs == sorted(errs, reverse=True)
    assert res.deviation == pytest.approx(abs(res.estimate.value - res.reference))


def test_shannon_engines_agree():
    p = [Fraction(1, 3)] * 3
    a = run_shannon(p, [3, 6], [Fraction(1, 4)], engine="count")
    b = run_shannon(p, [3, 6], [Fraction(1, 4)], engine="enumerate")
    assert a.table.to_csv() == b.table.to_csv()


def test_shannon_sampling_engine_is_seeded():
    p = [Fraction(1, 2)] * 2
    a = run_shannon(p, [10], [Fraction(1, 20)], engine="sample", samples=2000, seed=4)
    b = run_shannon(p, [10], [Fraction(1, 20)], engine="sample", samples=2000, seed=4)
    assert a.table.to_csv() == b.table.to_csv()
    assert a.table.rows[0].packing_kind == "sampled_estimate"
    assert abs(a.table.rows[0].n_raw - 252) < 40


def test_pmp_action_reads_atoms():
    labels, weights, perms = pmp_action(z2_source(), HALVES, ["e", "g"])
    assert labels == [0, 0, 1, 1]
    assert weights == [Fraction(1, 4)] * 4
    assert perms == [(1, 2, 3, 4), (3, 4, 1, 2)]


def test_pmp_action_rejects_overlapping_cells():
    with pytest.raises(StructureError):
        pmp_action(z2_source(), [subset_mask([1, 2]), subset_mask([2, 3, 4])], ["g"])


def test_bowen_trivial_group_equals_shannon(tmp_path):
    doc = structure_to_doc(build_measure_algebra(4), {"P": HALVES})
    doc = parse_structure(serialize_structure(doc))
    grid = dict(r_schedule=[4, 8, 16], deltas=[Fraction(1, 10), Fraction(1, 4)])
    run_bowen(doc, "P", ["e"], SoficMap(("e",), {}), out_dir=str(tmp_path / "b"), **grid)
    run_shannon([Fraction(1, 2)] * 2, out_dir=str(tmp_path / "s"), **grid)
    assert (tmp_path / "b" / "table.csv").read_bytes() == (tmp_path / "s" / "table.csv").read_bytes()


def test_bowen_single_cell_partition():
    res = run_bowen(z2_source(), [subset_mask([1, 2, 3, 4])], ["e", "g"],
                    SoficMap(("e", "g"), {("g", 4): (2, 1, 4, 3)}), [4], [Fraction(1, 10)])
    assert res.estimate.value == 0


def test_bowen_z2_matches_oracle():
    sofic = SoficMap(("e", "g"), {("g", 4): (2, 1, 4, 3)})
    res = run_bowen(z2_source(), HALVES, ["e", "g"], sofic, [4], [Fraction(1, 10)])
    assert res.table.rows[0].n_raw == 4
    assert res.reference == res.estimate.value == pytest.approx(math.log(4) / 4)
    assert "oracle" in res.provenance


def test_bowen_window_mismatch():
    sofic = SoficMap(("e", "g"), {("g", 4): (2, 1, 4, 3)})
    with pytest.raises(StructureError):
        run_bowen(z2_source(), HALVES, ["e", "g"], sofic, [4, 6], [Fraction(1, 10)])
    with pytest.raises(StructureError):
        run_bowen(z2_source(), HALVES, ["h"], sofic, [4], [Fraction(1, 10)])


def test_sofic_trivial_group():
    trivial = build_group(["e"], {("e", "e"): "e"})
    res = run_sofic_dim(trivial, ["e"], [2, 3, 4], [0], [Fraction(1, 2)])
    assert [row.n_raw for row in res.table.rows] == [1, 1, 1]
    assert res.estimate.value == 0


def test_sofic_z2_examples():
    Z2 = cyclic_group(2)
    res = run_sofic_dim(Z2, ["g"], [4], [0], [Fraction(1, 2)])
    assert res.table.rows[0].n_raw == 3
    assert res.estimate.value == pytest.approx(math.log(3) / (4 * math.log(4)))
    assert res.deviation == 0
    odd = run_sofic_dim(Z2, ["g"], [3], [0], [Fraction(1, 2)])
    assert odd.estimate.value == -math.inf
    assert odd.reference == -math.inf


def test_sofic_oracle_counts():
    Z2 = cyclic_group(2)
    assert sofic_oracle(Z2, [0, 1], [1], 4, 0, Fraction(1, 2)) == 3
    assert sofic_oracle(Z2, [0, 1], [1], 3, 0, Fraction(1, 2)) == 0


def test_emit_plot_data_empty(tmp_path):
    by_r, by_eps = emit_plot_data(EntropyTable([]), str(tmp_path))
    assert open(by_r).read() == "eps,delta,F_size,R_depth,r,normalized\n"
    assert open(by_eps).read() == "r,delta,F_size,R_depth,eps,normalized\n"


def test_series_conserve_rows(tmp_path):
    res = run_shannon([Fraction(1, 4), Fraction(3, 4)], [8, 32, 128],
                      [Fraction(1, 50), Fraction(1, 10)], out_dir=str(tmp_path))
    for name in ("series_vs_r.csv", "series_vs_eps.csv"):
        with open(tmp_path / name) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(res.table.rows)
    with open(tmp_path / "series_vs_r.csv") as fh:
        rows = list(csv.DictReader(fh))
    for d in ("1/50", "1/10"):
        rs = [int(row["r"]) for row in rows if row["delta"] == d]
        assert rs == [8, 32, 128]


def test_files_match_declared_hashes(tmp_path):
    res = run_shannon([Fraction(1, 2)] * 2, [8, 16], [Fraction(1, 10)], out_dir=str(tmp_path))
    assert set(res.files) == {"table.csv", "estimate.json", "series_vs_r.csv", "series_vs_eps.csv"}
    for name, digest in res.files.items():
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == digest
    with open(tmp_path / "table.csv") as fh:
        assert fh.readline().strip() == ",".join(CSV_HEADER)
    summary = json.loads((tmp_path / "result.json").read_text())
    assert summary["files"] == res.files


def test_runs_are_byte_reproducible(tmp_path):
    sofic = SoficMap(("e", "g"), {("g", 4): (2, 1, 4, 3), ("g", 6): (2, 1, 4, 3, 6, 5)})
    for sub in ("a", "b"):
        run_bowen(z2_source(), HALVES, ["e", "g"], sofic, [4, 6], [Fraction(1, 10)],
                  out_dir=str(tmp_path / sub))
    for name in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
