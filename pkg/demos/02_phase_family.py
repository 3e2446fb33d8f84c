"""
Phasing a simulated three-generation family
===========================================

Simulate a family, phase one recombination-free interval, and compare the
reconstructed founder haplotypes and imputed genotypes with the truth.
"""

import numpy as np

from ecvc.phase import MarkerStatus, impute, phase_interval
from ecvc.sim import SimConfig, simulate, three_generation

ped = three_generation((2, 2), 2, unsequenced=("GF1",))
ts = simulate(SimConfig(pedigree=ped, n_markers=5000, missing_rate=0.02, seed=1))
ibd = ts.ibd_at(1)
print("sequenced:", len(ped.sequenced), "markers:", ts.n_markers)

ph = phase_interval(ped, ibd, ts.observed)
print(ph.counts())
print("graph:", ph.graph.n_vertices, "haplotype labels,", ph.graph.n_edges, "edges")
print("missingness patterns:", len(ph.groups))

# determined alleles against the simulated founder haplotypes
table = np.array(ph.allele_table)
truth = np.array(ts.alleles)
wrong = 0
for lab in ph.labels:
    got = ph.allele_codes(lab)
    known = got >= 0
    wrong += int((table[got[known]] != truth[ts.haplotype(lab)[known]]).sum())
print("wrong alleles:", wrong)

# the unsequenced grandfather is imputed wherever both his labels are colored
res = [ph.result(k) for k in range(1, 51)]
full = [r for r in res if r.status is MarkerStatus.SOLVED]
imp = impute(full[0], ped, ibd)["GF1"]
print("GF1 at marker", full[0].index, imp.genotype,
      "truth", tuple(sorted(str(a) for a in truth[ts.true_genotypes("GF1")[full[0].index - 1]])))

# haplotype rows use '.' wherever the marker was not Solved
haps = ph.haplotypes()
print("GM1.p:", "".join(haps["GM1.p"][:60]))
