"""Bowen-style counting for a swap acting on four points.

The source is the measure algebra of {1,2,3,4} where g acts by (1 3)(2 4);
the partition splits {1,2} from {3,4}. Approximating partitions live on
{1..r} with g acting by the model permutation sigma(g).
"""
from fractions import Fraction

from microentropy import SoficMap, build_dyn_measure_algebra, run_bowen, run_shannon
from microentropy.experiments import bowen_oracle, pmp_action
from microentropy.microstates import bowen_target
from microentropy.structures import subset_mask

action = SoficMap(("e", "g"), {("g", 4): (3, 4, 1, 2)})
source = build_dyn_measure_algebra(4, action, ["g"])
cells = [subset_mask([1, 2]), subset_mask([3, 4])]

labels, weights, perms = pmp_action(source, cells, ["e", "g"])
target = bowen_target(labels, perms, weights)
print("join cells and masses:", target)  # two cells of mass 1/2: (a,b) and (b,a)

# pair up neighbours in the model: sigma(g) = (1 2)(3 4)(5 6)...
def swaps(r):
    return tuple(x + 1 if x % 2 else x - 1 for x in range(1, r + 1))

rs = [4, 6, 8, 10]
sofic = SoficMap(("e", "g"), {("g", r): swaps(r) for r in rs})
res = run_bowen(source, cells, ["e", "g"], sofic, rs, [Fraction(1, 10)])
for row in res.table.rows:
    print(f"r = {row.r}: {row.n_raw} partitions, normalized {row.normalized:.4f}")
print("oracle at r = 10:", round(res.reference, 4), res.provenance)

# the brute-force oracle recounts r = 4 from the definition
print("r = 4 oracle:", bowen_oracle(target, [0, 1], [(1, 2, 3, 4), swaps(4)], 4, Fraction(1, 10)))

# with the trivial group the same machinery is the Shannon count
trivial = run_bowen(source, cells, ["e"], SoficMap(("e", "g"), {}), rs, [Fraction(1, 10)])
plain = run_shannon([Fraction(1, 2)] * 2, rs, [Fraction(1, 10)])
print("trivial window matches Shannon table:", trivial.table.to_csv() == plain.table.to_csv())
