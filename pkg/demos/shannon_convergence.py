"""Counting label maps whose empirical distribution is close to p, and
watching log(count)/r climb toward -sum p log p."""
from fractions import Fraction

import numpy as np

from microentropy import count_partition_microstates, run_shannon
from microentropy.experiments import shannon_entropy

p = [Fraction(1, 4), Fraction(3, 4)]
H = shannon_entropy(p)  # about 0.5623 nats

# exact counts are big integers; the type-class sum never lists the maps
n = count_partition_microstates(p, 64, Fraction(1, 20))
print("count at r = 64:", n, f"({len(str(n))} digits)")

rs = [2 ** k for k in range(3, 12)]
res = run_shannon(p, rs, [Fraction(1, 20), Fraction(1, 100)])
for d in (Fraction(1, 20), Fraction(1, 100)):
    seq = np.array([row.normalized for row in res.table.at(delta=d)])
    print(f"delta = {d}:", np.round(seq, 4))

# the estimate is the smaller delta's last value, an upper reading
print("estimate", round(res.estimate.value, 4), "reference", round(H, 4))

# a larger delta admits more maps at every r
wide = [row.n_raw for row in res.table.at(delta=Fraction(1, 20))]
narrow = [row.n_raw for row in res.table.at(delta=Fraction(1, 100))]
print("wider window never counts fewer:", all(a >= b for a, b in zip(wide, narrow)))
