"""The statistics behind a paper-versus-assistant comparison study.

Ten synthetic participants complete the task under both conditions; the
toolkit computes the paired t-test, the effect size, within-subject
confidence intervals, and the questionnaire scores.
"""

import numpy as np

from bladecas import (
    PairedSample,
    TlxResponse,
    UmuxResponse,
    cohens_dz,
    paired_t_test,
    rtlx,
    umux_lite,
    within_subject_ci,
)

rng = np.random.default_rng(10)
n = 10

# completion times (s): the assisted condition is faster on average
subject_speed = rng.normal(1.0, 0.15, size=n)
paper_tct = 466.0 * subject_speed + rng.normal(0, 40, size=n)
assisted_tct = 367.0 * subject_speed + rng.normal(0, 35, size=n)

sample = PairedSample(tuple(paper_tct), tuple(assisted_tct))
t, df, p = paired_t_test(sample)
dz = cohens_dz(sample)
print("task completion time (paper vs assisted):")
print(f"  means: {np.mean(paper_tct):.1f} s vs {np.mean(assisted_tct):.1f} s")
print(f"  paired t({df}) = {t:.2f}, two-tailed p = {p:.4f}")
print(f"  effect size dz = {dz:.3f}  (identity check: t/sqrt(n) = "
      f"{t / np.sqrt(n):.3f})")

matrix = np.column_stack([paper_tct, assisted_tct])
(paper_mean, paper_half), (cas_mean, cas_half) = within_subject_ci(matrix, 0.95)
print("\nwithin-subject 95% confidence intervals (subject offsets removed):")
print(f"  paper:    {paper_mean:.1f} +- {paper_half:.1f} s")
print(f"  assisted: {cas_mean:.1f} +- {cas_half:.1f} s")

print("\nworkload (six-subscale mean, 0-100):")
paper_tlx = TlxResponse(60, 35, 55, 45, 65, 50)
cas_tlx = TlxResponse(40, 30, 35, 30, 45, 25)
print(f"  paper:    {rtlx(paper_tlx):.1f}")
print(f"  assisted: {rtlx(cas_tlx):.1f}")

print("\nusability (two items, 1-7, rescaled to 0-100):")
print(f"  paper:    {umux_lite(UmuxResponse(3.9, 4.8)):.1f}")
print(f"  assisted: {umux_lite(UmuxResponse(6.2, 6.1)):.1f}")
