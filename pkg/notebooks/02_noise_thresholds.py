"""
Noise thresholds of the full-entanglement certificate
=====================================================

Sweeps preparation, readout and entangling-step noise and reports where
every check of the certification schedule rises above 1.  Writes CSV files
next to this script.
"""

from pathlib import Path

from swapchain.noise import certification_threshold, crossing, figure_sweep, subset_label

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

for fig in ("fig5a", "fig5b", "fig5c"):
    res = figure_sweep(fig, n=10)
    res.write_csv(out / f"{fig}.csv")
    res.write_sidecar(out / f"{fig}.csv.json")
    print(f"{fig} ({res.param}): certification threshold {certification_threshold(res):.4f}")

# %% Which subsystem limits the threshold?  Larger subsets decay faster.
res = figure_sweep("fig5c", n=10)
# a crossing of None means the curve stays below 1 over the whole range
for s in res.subsets:
    c = crossing(res.grid, res.values[s])
    print(f"{subset_label(s):>22}: {'never' if c is None else round(c, 4)}")
