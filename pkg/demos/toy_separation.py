"""Two bags whose means point the wrong way.

Bag 1 is 60% positive but its instances average to the negative side of the
true boundary; bag 2 is 40% positive and averages to the positive side.  Any
method that summarizes a bag by its mean gets every instance backwards, while
methods that assign labels instance-by-instance can separate the classes
perfectly.  This script trains all three trainers on the same supervision
(bag proportions only) and prints what each one believes.
"""

import numpy as np

from propsvm import (
    AlterParams,
    ConvParams,
    InvCalParams,
    bag_error,
    make_toy_dataset,
    train_alter,
    train_conv,
    train_invcal,
)

data, part = make_toy_dataset()
hidden = data.labels  # kept aside: the trainers never see these

print("bag 1: proportion %.1f, mean x1 = %+.1f" % (
    part.proportions[0], data.features[part.bags[0], 0].mean()))
print("bag 2: proportion %.1f, mean x1 = %+.1f" % (
    part.proportions[1], data.features[part.bags[1], 0].mean()))
print()

models = {
    "alternating": train_alter(
        data.without_labels(), part, AlterParams(C=1.0, Cp=10.0, seed=0)
    ),
    "cutting-plane": train_conv(
        data.without_labels(), part, ConvParams(C=1.0, eps=0.0)
    ),
    "calibration": train_invcal(
        data.without_labels(), part, InvCalParams(Cp=1.0, eps=0.0)
    ),
}

for name, model in models.items():
    pred = model.predict(data.features)
    acc = (pred == hidden).mean()
    print(f"{name:14s} accuracy {100 * acc:5.1f}%  "
          f"bag error {bag_error(pred, part):.3f}  "
          f"objective {model.objective:.4f}")

print()
print("x1 of the training points, with each method's vote:")
order = np.argsort(data.features[:, 0])
row = lambda vals: " ".join("+" if v > 0 else "-" for v in vals)
print("  truth        ", row(hidden[order]))
for name, model in models.items():
    print(f"  {name:14s}", row(model.predict(data.features)[order]))
print()
print("the calibration baseline follows the bag means, so it inverts")
print("everything; the other two recover the instance-level boundary.")
