# The two distillation signals, seen up close.
#
# Score level: teacher and student probabilities are each normalized over
# the mini-batch, and the student's distribution is pulled onto the
# teacher's by cross-entropy. Because the normalization cancels any
# rescaling of the student's scores, ranking knowledge transfers without
# fighting the student's own calibration (the BCE term owns that).
#
# Representation level: plain MSE between the branches' final hidden
# vectors.

import numpy as np

from elec.siamese import (NetworkOutputs, TrainConfig, bce_loss, clid_loss,
                          listwise_distribution, rep_loss, total_loss)

p_teacher = np.array([0.5, 0.5])
p_student = np.array([0.25, 0.75])

print("teacher batch distribution:", listwise_distribution(p_teacher))
print("student batch distribution:", listwise_distribution(p_student))
print(f"score distillation loss:   {clid_loss(p_teacher, p_student):.7f}")

# %% The loss is minimized exactly when the student's *distribution*
# matches the teacher's - any positive rescaling of the student is free.
q = listwise_distribution(p_teacher)
floor = float(-(q * np.log(q)).sum() / q.size)
print(f"\nentropy floor:             {floor:.7f}")
print(f"student == teacher:        {clid_loss(p_teacher, p_teacher):.7f}")
print(f"student == 0.4 * teacher:  {clid_loss(p_teacher, 0.4 * p_teacher):.7f}")

rng = np.random.default_rng(0)
for c in (1.0, 0.5, 0.1):
    loss = clid_loss(p_teacher, c * p_student)
    print(f"student scaled by {c:<4}-> loss {loss:.12f}")

# %% Representation loss: squared distance averaged over the batch.
h_teacher = np.array([[0.0, 0.0]])
h_student = np.array([[1.0, 2.0]])
print(f"\nrepresentation loss for (1,2) vs (0,0): {rep_loss(h_teacher, h_student)}")

# %% The combined objective is a straight sum; alpha scales only the
# representation term.
outputs = NetworkOutputs(
    p_g=rng.uniform(0.1, 0.9, size=8),
    p_v=rng.uniform(0.1, 0.9, size=8),
    h_g=rng.normal(size=(8, 4)),
    h_v=rng.normal(size=(8, 4)),
)
y = rng.integers(0, 2, size=8)
for alpha in (0.0, 0.5, 1.0):
    lb = total_loss(outputs, y, TrainConfig(alpha=alpha))
    print(f"alpha={alpha}: gain={lb.l_gain:.4f} van={lb.l_van:.4f} "
          f"score={lb.l_score:.4f} rep={lb.l_rep:.4f} total={lb.l_total:.4f}")

print(f"\nplain BCE sanity check: {bce_loss(np.array([0.9, 0.1]), np.array([1, 0])):.7f}"
      " (labels fully predicted at 0.9/0.1)")
