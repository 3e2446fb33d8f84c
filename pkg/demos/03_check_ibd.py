"""
Testing an IBD assignment against genotypes
===========================================

A wrong haplotype label on one individual makes many heterozygous markers
unsolvable; genotyping errors alone make few of them unsolvable.
"""

import numpy as np

from ecvc.phase import check_ibd
from ecvc.sim import SimConfig, simulate, swap_label, three_generation

ped = three_generation((2, 2), 2)
ts = simulate(SimConfig(pedigree=ped, n_markers=5000, seed=3))
ibd = ts.ibd_at(1)

good = check_ibd(ped, ibd, ts.observed)
print("correct IBD:", good.verdict.value, round(good.heterozygous_failure_rate, 3), "betti", good.betti)

bad_ibd = swap_label(ped, ibd, "A1")
print("A1:", ibd["A1"], "->", bad_ibd["A1"])
bad = check_ibd(ped, bad_ibd, ts.observed)
print("swapped label:", bad.verdict.value, round(bad.heterozygous_failure_rate, 3))

# per-call errors: every marker has many calls, so the per-marker rate is
# much larger than the per-call rate on a family this size
for rate in (0.001, 0.01):
    noisy = simulate(SimConfig(pedigree=ped, n_markers=5000, error_rate=rate, seed=3))
    rep = check_ibd(ped, ibd, noisy.observed)
    expected = 1 - (1 - rate) ** len(ped.sequenced)
    print(f"error {rate}: {rep.verdict.value} het failure {rep.heterozygous_failure_rate:.3f} "
          f"(markers with any error {expected:.3f}, heterozygous share {rep.heterozygous.mean():.2f})")
print("failing markers:", np.flatnonzero(bad.failed)[:10] + 1)
