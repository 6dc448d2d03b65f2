"""Microstates of Z/2 in symmetric groups: images of the generator must be
fixed-point-free involutions, which exist only on an even number of points."""
from fractions import Fraction
from math import factorial, log

from microentropy import MicrostateSpec, build_sym, cyclic_group, enumerate_microstates, run_sofic_dim
from microentropy.structures import GROUP_SIGNATURE

Z2 = cyclic_group(2)
e, g = Z2.index("e"), Z2.index("g")

# depth-one terms (one, mult, inv) plus the trace, matched exactly
spec = MicrostateSpec.from_depth(GROUP_SIGNATURE, (e, g), 1, ("tau",), 0)
for r in range(2, 7):
    S = build_sym(r)
    ms = enumerate_microstates(spec, Z2, S)
    # (r-1)!! perfect matchings when r is even, none when odd
    expected = factorial(r) // (2 ** (r // 2) * factorial(r // 2)) if r % 2 == 0 else 0
    print(f"r = {r}: {len(ms)} microstates (matchings: {expected})",
          [S.elements[m[g]] for m in ms][:4])

# loosening delta lets near-involutions in too
loose = MicrostateSpec.from_depth(GROUP_SIGNATURE, (e, g), 1, ("tau",), Fraction(1, 3))
print("r = 3, delta = 1/3:", len(enumerate_microstates(loose, Z2, build_sym(3))))

# dimension normalization N(r) = r log r, L = 1
res = run_sofic_dim(Z2, ["g"], [2, 4, 6], [0], [Fraction(1, 2)])
print("sequence:", [round(v, 4) for v in res.estimate.sequence])
print("r = 6 by hand:", round(log(15) / (6 * log(6)), 4), "| oracle:", res.provenance)
