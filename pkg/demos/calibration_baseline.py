"""What the calibration baseline actually fits.

Inverse calibration compresses each bag into a single super-instance (the
bag's kernel mean) and regresses the log-odds of the bag proportion onto it
with an eps-insensitive tube.  When proportions line up with geometry this
is hard to beat; when they don't, there is nothing the method can do, since
it never looks below the bag level.

Part 1 reproduces the textbook picture: two clean bags at p=0.9 / p=0.1 on
mirrored points give decision values of exactly +-log 9.  Part 2 removes the
information (every proportion equals 0.5) and the fit collapses to zero.
"""

import numpy as np

from propsvm import (
    BagPartition,
    Dataset,
    InvCalParams,
    invcal_targets,
    train_invcal,
)

# ---- part 1: two informative bags --------------------------------------
x = np.concatenate([np.ones((10, 1)), -np.ones((10, 1))])
part = BagPartition((np.arange(10), np.arange(10, 20)), (0.9, 0.1), 20)

z = invcal_targets(part.proportions, part.bag_sizes())
print("bag proportions:", [float(p) for p in part.proportions])
print("regression targets (clamped log-odds):", np.round(z, 4))
print("log(9) =", round(float(np.log(9.0)), 4))

model = train_invcal(
    Dataset(x), part, InvCalParams(Cp=100.0, eps=0.0, svm_tol=1e-6)
)
f = model.decision_function(np.array([[1.0], [-1.0]]))
print(f"fitted decision values at x=+1 / x=-1: {f[0]:+.4f} / {f[1]:+.4f}")
print(f"bias: {model.bias:+.2e}\n")

# ---- part 2: uninformative proportions ----------------------------------
rng = np.random.default_rng(11)
x2 = rng.normal(size=(24, 3))
bags = tuple(np.arange(i, i + 6) for i in range(0, 24, 6))
flat = BagPartition(bags, (0.5,) * 4, 24)

flat_model = train_invcal(Dataset(x2), flat, InvCalParams(Cp=10.0, eps=0.0))
print("with every proportion at 0.5 the targets are all zero,")
print("so the regression has nothing to chase:")
print("  max |coefficient| =", np.abs(flat_model.coefficients).max())
print("  bias =", flat_model.bias)
print("  predictions:", np.unique(flat_model.predict(x2)))
