"""Summarization metrics and the relative-performance statistic
=============================================================

ROUGE-1 and ROUGE-L from first principles on hand-checkable strings, then
the single-number summary used to compare a candidate model against a
reference across a battery of tasks.

Run with: python3 demos/metrics_walkthrough.py
"""

from specmix import TaskMetricPair, relative_performance, rouge1_f, rougeL_f

# unigram overlap: 4 shared tokens, hyp length 5, ref length 5
hyp = "the cat sat on mat"
ref = "the cat sat on the"
r1 = rouge1_f(hyp, ref)
print(f"rouge1  P={r1.precision:.4f} R={r1.recall:.4f} F={r1.fmeasure:.4f}")

# longest common subsequence need not be contiguous
hyp = "police kill the gunman"
ref = "police killed the gunman"
rl = rougeL_f(hyp, ref)
print(f"rougeL  P={rl.precision:.4f} R={rl.recall:.4f} F={rl.fmeasure:.4f}")

# word order matters for rougeL but not rouge1
swapped = "gunman the kill police"
print(f"swapped hyp: rouge1 F={rouge1_f(swapped, ref).fmeasure:.4f}  "
      f"rougeL F={rougeL_f(swapped, ref).fmeasure:.4f}")

# relative performance: mean over tasks of candidate/reference, in percent
# here: published micro-f1 per task for a Fourier-mixing encoder (candidate)
# against its attention baseline (reference) on seven benchmark tasks
baseline = [71.2, 79.7, 68.3, 71.4, 87.6, 95.6, 70.8]
fourier = [57.1, 65.7, 60.5, 65.2, 85.6, 95.3, 50.9]
pairs = [TaskMetricPair(task=f"task{i}", candidate=c, reference=b)
         for i, (c, b) in enumerate(zip(fourier, baseline))]
p = relative_performance(pairs)
print(f"\nrelative performance: {100.0 * p:.1f} "
      f"(the candidate keeps {100.0 * p:.1f}% of the reference scores on average)")
