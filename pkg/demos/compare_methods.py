"""
Learning curves for baseline, shield and guide
==============================================

A reduced version of the default comparison (fewer episodes and seeds) so it
runs in well under a minute.  Use ``lnnrl compare`` for the full experiment.
"""

from dataclasses import replace

from lnnrl.harness import METHODS, RunConfig, compare, report_text

base = RunConfig(length=10, distractors=2, episodes=80)
configs = {m: replace(base, method=m) for m in METHODS}
records, report = compare(configs, seeds=2)
print(report_text(report))

###############################################################################
# Mean moving-average reward every 10 episodes.
from lnnrl.harness import curve_summary

for method, s in curve_summary(records).items():
    print(f"{method:<9}", " ".join(f"{x:.2f}" for x in s["mean"][::10]))
