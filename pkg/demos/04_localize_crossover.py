"""
Bracketing a crossover
======================

Solve the same markers on the graphs of the IBD left and right of a
suspected crossover. The wrong graph fails on its side, so the last failure
of the right-hand graph and the first failure of the left-hand graph
enclose the event.
"""

import numpy as np

from ecvc.localize import SuspectedEvent, format_localization_report, localize_single, orchestrate_multi
from ecvc.sim import Crossover, SimConfig, nuclear, simulate, three_generation

n = 1000
ts = simulate(SimConfig(pedigree=nuclear(4), n_markers=n, crossovers=[Crossover("C2", "m", 437)], seed=5))
left, right = ts.ibd_at(1), ts.ibd_at(n)
print("C2 maternal label:", left["C2"][1], "->", right["C2"][1])

res = localize_single(ts.pedigree, left, right, ts.observed)
print(res.status.value, "bracket", (res.a, res.b), "true crossover after", 437, "|E| =", len(res.ambiguity))
print("left-graph failures from", np.flatnonzero(res.fail_left)[:3] + 1)
print("right-graph failures up to", np.flatnonzero(res.fail_right)[-3:] + 1)

win = localize_single(ts.pedigree, left, right, ts.observed, policy="windowed", window=10, tau=0.5)
print("windowed:", (win.a, win.b))

# two events in one range, handled by partitioning the range
ped = three_generation((2, 2), 2)
ts = simulate(SimConfig(pedigree=ped, n_markers=2000,
                        crossovers=[Crossover("A1", "p", 500), Crossover("B2", "m", 1400)], seed=6))
i0, i1, i2 = ts.ibd_at(1), ts.ibd_at(1000), ts.ibd_at(2000)
events = [SuspectedEvent("first", i0, i1, (450, 550)), SuspectedEvent("second", i1, i2, (1350, 1450))]
out = orchestrate_multi(ped, ts.observed, events, "hybrid")
print(format_localization_report(out, ts.observed), end="")
