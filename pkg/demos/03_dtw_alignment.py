"""Dynamic time warping: aligning sequences that move at different paces.

Plain step-by-step comparison assumes both sequences tick in lockstep.
Warping relaxes that: it finds the monotone pairing of indices with the
least accumulated squared distance, so a fast replay of the same route
still aligns cheaply.
"""
import numpy as np

from sigrec import accumulated_cost_matrix, dtw_exact, dtw_fast, first_occurrence_map

# the same 1-D profile, once at normal speed and once sampled twice as fast
slow = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
fast = slow[::2]  # [0, 2, 4, 6]

path = dtw_exact(fast, slow)
print("optimal warping path (1-based pairs):")
print(" ", path.pairs)
print("  total cost:", path.total_cost)

# lockstep comparison of the truncated prefixes is much worse
lockstep = float(np.sum((fast - slow[: len(fast)]) ** 2))
print("  lockstep squared distance over the prefix:", lockstep)

# the accumulated cost matrix behind the path
matrix = accumulated_cost_matrix(fast, slow)
print("cost matrix corner equals the path cost:",
      matrix[-1, -1] == path.total_cost)

# one aligned partner per query index: keep the first occurrence
first = first_occurrence_map(path)
print("first aligned index per query step:", first)

# the windowed variant trades exactness for linear work; a generous
# radius reproduces the exact answer, radius 1 stays close on benign data
rng = np.random.default_rng(4)
a = rng.normal(size=(400, 2)).cumsum(axis=0)
b = a[::2] + rng.normal(scale=0.02, size=(200, 2))
exact = dtw_exact(a, b)
approx = dtw_fast(a, b, radius=1)
print(f"exact cost {exact.total_cost:.4f} vs radius-1 cost {approx.total_cost:.4f}")
print("approximation never beats the optimum:",
      approx.total_cost >= exact.total_cost)
