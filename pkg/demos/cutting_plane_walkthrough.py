"""One cutting-plane iteration at a time, by hand.

The convex route never fixes a labeling.  It relaxes the label matrix
Y = y y^T into a weighted mixture over candidate labelings and minimizes the
worst-case SVM dual over the mixture weights.  The active set of candidates
grows one labeling per iteration: each new cut is the proportion-feasible
labeling that the current dual variables violate the most.

This script drives find_violated_labeling / solve_mkl directly so every
intermediate quantity is visible, then hands the same problem to train_conv
and checks both routes agree.
"""

import numpy as np

from propsvm import (
    BagPartition,
    ConvParams,
    Dataset,
    center_features,
    compute_proportions,
    find_violated_labeling,
    raw_features,
    solve_mkl,
    train_conv,
)

rng = np.random.default_rng(3)

n = 24
x = rng.normal(size=(n, 2))
y_true = np.where(x[:, 0] + 0.4 * x[:, 1] > 0, 1.0, -1.0)
bags = tuple(np.arange(i, i + 6) for i in range(0, n, 6))
props = tuple(float((y_true[list(b)] > 0).mean()) for b in bags)
part = BagPartition(bags, props, n)

feats = center_features(raw_features(x))
khat = feats.vectors @ feats.vectors.T
C, eps = 1.0, 0.0

alpha = np.full(n, 1.0 / n)  # uniform dual start, as the trainer uses
active = []
obj = np.inf
print("iter  cuts  objective   weights")
for it in range(10):
    cand = find_violated_labeling(alpha, feats, part, eps)
    if any(np.array_equal(cand, seen) for seen in active):
        print(f"{it:4d}  duplicate cut came back -> stop")
        break
    active.append(cand)
    mu, alpha, new_obj = solve_mkl(np.array(active), khat, C)
    w = " ".join(f"{m:.2f}" for m in mu)
    print(f"{it:4d}  {len(active):4d}  {new_obj:9.4f}   [{w}]")
    if obj - new_obj < 1e-4:
        print("      improvement under threshold -> stop")
        break
    obj = new_obj

# every candidate respects the bag proportions up to eps
for t, lab in enumerate(active):
    gap = np.abs(compute_proportions(lab, part.bags) - np.array(props)).max()
    assert gap <= eps + 1e-12, (t, gap)
print(f"\nall {len(active)} cuts are proportion-feasible")

model = train_conv(Dataset(x), part, ConvParams(C=C, eps=eps))
print(f"train_conv objective: {model.objective:.4f}  "
      f"cuts: {len(model.cut_objectives)}")
acc = (model.predict(x) == y_true).mean()
print(f"instance accuracy against the hidden labels: {100 * acc:.0f}%")
