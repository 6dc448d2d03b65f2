import json
import math
from fractions import Fraction

import pytest

from microentropy.entropy import (
    CSV_HEADER,
    RSpec,
    Schedule,
    TailStatistic,
    boltzmann_normalization,
    dimension,
    entropy,
    finite_rows,
    h_finite,
    h_over_lattice,
    lattice_violations,
    packing_normalization,
    relative_dimension,
    relative_entropy,
)
from microentropy.structures import build_measure_algebra, build_sym, cyclic_group, subset_mask

from _helpers import weighted_measure_space

HALF = weighted_measure_space([Fraction(1, 2), Fraction(1, 2)])
P = subset_mask([1])
PC = subset_mask([2])
Z2 = cyclic_group(2)


def test_tail_statistics():
    seq = [0.1, 0.5, 0.3, 0.4]
    assert TailStatistic.parse("last").apply(seq) == 0.4
    assert TailStatistic.parse("max(3)").apply(seq) == 0.5
    assert TailStatistic.parse("min(2)").apply(seq) == 0.3
    assert TailStatistic.parse("max(2)").oscillation(seq) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        TailStatistic.parse("median")


def test_normalizations():
    assert boltzmann_normalization("r", 8) == 8
    assert boltzmann_normalization("r log r", 8) == pytest.approx(8 * math.log(8))
    assert boltzmann_normalization("r^2", 8) == 64
    assert boltzmann_normalization("r log r", 8, 2) == pytest.approx(24)
    with pytest.raises(ValueError):
        boltzmann_normalization("r log r", 1)
    assert packing_normalization("|log eps|", Fraction(1, 4)) == pytest.approx(math.log(4))
    with pytest.raises(ValueError):
        packing_normalization("|log eps|", 1)


def test_log_252_row():
    est = h_finite(HALF, [P], [P], RSpec(0, ("mu",)), Fraction(1, 40), Fraction(1, 20), [10],
                   "measure_algebra")
    row = est.table.rows[0]
    assert row.n_raw == 252
    assert row.log_n == pytest.approx(math.log(252))
    assert est.value == pytest.approx(math.log(252) / 10)
    assert round(est.value, 4) == 0.5529


def test_empty_E_gives_zero():
    est = h_finite(HALF, [], [P], RSpec(0, ("mu",)), Fraction(1, 40), Fraction(1, 20), [6, 10],
                   "measure_algebra")
    assert est.sequence == [0.0, 0.0]


def test_no_microstates_is_minus_infinity():
    est = h_finite(Z2, ["g"], ["e", "g"], RSpec(1, ("tau",)), 0, Fraction(1, 2), [3, 5], "sym")
    assert est.value == -math.inf
    assert est.sequence == [-math.inf, -math.inf]
    assert json.loads(est.to_json())["value"] == "-inf"


def _sched(**kw):
    base = dict(r_schedule=(4, 6), model_family="measure_algebra", deltas=(Fraction(1, 10),),
                eps_grid=(Fraction(1, 8),), R_specs=(RSpec(1, ("mu",)),))
    base.update(kw)
    return Schedule(**base)


def test_singleton_grids_equal_h_finite():
    sched = _sched()
    a = h_over_lattice(HALF, [P], Fraction(1, 8), sched, F_chain=[[P, PC]])
    b = h_finite(HALF, [P], [P, PC], RSpec(1, ("mu",)), Fraction(1, 10), Fraction(1, 8), (4, 6),
                 "measure_algebra")
    assert a.value == b.value
    assert a.sequence == b.sequence


def test_larger_delta_grid_only_lowers():
    small = h_over_lattice(HALF, [P], Fraction(1, 8), _sched(deltas=(Fraction(1, 4),)), B=[P, PC])
    big = h_over_lattice(HALF, [P], Fraction(1, 8),
                         _sched(deltas=(Fraction(1, 10), Fraction(1, 4))), B=[P, PC])
    assert big.value <= small.value


def test_F_chain_may_stop_at_B():
    B = [0, P, PC, 3]
    sched = _sched()
    via_B = h_over_lattice(HALF, [P], Fraction(1, 8), sched, B=B)
    via_chain = h_over_lattice(HALF, [P], Fraction(1, 8), sched, F_chain=[[P], [P, PC], B])
    # the min over a chain ending at B is attained at B by monotonicity
    assert via_chain.value == via_B.value


def test_constants_have_zero_entropy():
    S = build_measure_algebra(2)
    sched = _sched(deltas=(Fraction(1, 20),))
    est = entropy(S, [0, 3], sched)
    assert est.value == 0


def test_single_point_model_family():
    sched = Schedule((2, 3, 4), lambda r: build_sym(1), deltas=(1,), eps_grid=(Fraction(1, 2),),
                     R_specs=(RSpec(1, ("tau",)),))
    assert entropy(Z2, ["g"], sched).value == 0


def test_dimension_with_L_one_is_entropy_at_smallest_eps():
    sched = _sched(eps_grid=(Fraction(1, 8), Fraction(1, 2)))
    dim = dimension(HALF, [P], sched)
    B = sorted({0, P, PC, 3})
    h = h_over_lattice(HALF, [P], Fraction(1, 8), sched, B=B)
    assert dim.value == h.value
    assert dim.axis == "eps"


def test_dimension_all_zero_counts():
    sched = Schedule((3, 5), "sym", deltas=(0,), eps_grid=(Fraction(1, 2),),
                     R_specs=(RSpec(1, ("tau",)),), normalization="r log r")
    assert dimension(Z2, ["g"], sched).value == -math.inf


def test_relative_with_empty_H():
    sched = _sched()
    assert relative_entropy(HALF, [P], [], sched).value == entropy(HALF, [P], sched).value
    assert relative_dimension(HALF, [P], [], sched).value == dimension(HALF, [P], sched).value


def test_relative_with_H_inside_closure():
    sched = _sched()
    # P^c is already in the closure of {P}
    assert relative_entropy(HALF, [P], [PC], sched).value == entropy(HALF, [P], sched).value


def test_relative_on_two_generator_toy():
    S = weighted_measure_space([Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)])
    A, B = subset_mask([1]), subset_mask([2])
    sched = Schedule((4,), "measure_algebra", deltas=(Fraction(1, 8),), eps_grid=(Fraction(1, 8),),
                     R_specs=(RSpec(1, ("mu",)),))
    union_AB = subset_mask([1, 2])
    # union_AB lies in the closure of {A, B}
    assert (relative_entropy(S, [A], [B, union_AB], sched).value
            == relative_entropy(S, [A], [B], sched).value)


def test_empty_E_grid_rejected():
    with pytest.raises(ValueError, match="nonempty"):
        entropy(HALF, [P], _sched(), E_grid=[])


def test_lattice_monotone_on_grid():
    sched = _sched(deltas=(Fraction(1, 10), Fraction(1, 4)), eps_grid=(Fraction(1, 8), Fraction(1, 2)),
                   R_specs=(RSpec(0, ("mu",)), RSpec(1, ("mu",))))
    rows = finite_rows(HALF, [P], [[P], [P, PC]], sched) + finite_rows(HALF, [], [[P], [P, PC]], sched)
    assert lattice_violations(rows) == []


def test_workers_do_not_change_tables():
    one = entropy(HALF, [P], _sched(workers=1, deltas=(Fraction(1, 10), Fraction(1, 4))))
    four = entropy(HALF, [P], _sched(workers=4, deltas=(Fraction(1, 10), Fraction(1, 4))))
    assert one.table.to_csv() == four.table.to_csv()
    assert one.to_json() == four.to_json()


def test_table_csv_header_and_json_schema():
    est = entropy(HALF, [P], _sched())
    lines = est.table.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == len(est.table.rows) + 1
    data = json.loads(est.to_json(reference=0.5, deviation=0.1))
    assert set(data) == {"value", "sequence", "statistic", "schedule_hash", "reference", "deviation"}


def test_budget_exhaustion_marks_rows(monkeypatch):
    est = h_finite(HALF, [P], [P, PC], RSpec(1, ("mu",)), Fraction(1, 10), Fraction(1, 8), (4,),
                   "measure_algebra", budget=3)
    assert est.partial
    assert est.table.rows[0].packing_kind == "budget_exhausted"
    assert math.isnan(est.value)


def test_log_base_two():
    a = h_finite(HALF, [P], [P], RSpec(0, ("mu",)), Fraction(1, 40), Fraction(1, 20), [10],
                 "measure_algebra")
    b = h_finite(HALF, [P], [P], RSpec(0, ("mu",)), Fraction(1, 40), Fraction(1, 20), [10],
                 "measure_algebra", log_base=2)
    assert b.value == pytest.approx(a.value / math.log(2))


def test_schedule_validation():
    with pytest.raises(ValueError):
        _sched(r_schedule=(4, 4))
    with pytest.raises(ValueError):
        _sched(eps_grid=(0,))
    with pytest.raises(ValueError):
        _sched(deltas=(-1,))
