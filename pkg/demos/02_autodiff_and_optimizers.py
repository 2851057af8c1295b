"""The tensor core: record a graph, differentiate it, check it, optimize.

Everything downstream (tree cells, ordered memory, the parser policy) runs
on this same tape machinery.
"""

import numpy as np

from treebench.numcore import (
    Tensor, backward, grad_check, make_optimizer, matmul, mul, recording,
    sigmoid, sum_, tanh, tensor,
)

# -- record and differentiate -------------------------------------------------
x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
w = Tensor(np.full((3, 3), 0.1), requires_grad=True)

with recording() as tape:
    hidden = tanh(matmul(w, x))
    loss = sum_(mul(hidden, hidden))
print(f"recorded {len(tape)} primitive applications, loss={loss.item():.6f}")

backward(tape, loss)
print("d loss / d x =", np.round(x.grad, 6))

# -- gradient checking ---------------------------------------------------------
probe = tensor(np.random.default_rng(0).uniform(-1, 1, 8))
err = grad_check(lambda t: sum_(sigmoid(t)), probe)
print(f"grad_check(sigmoid-sum): max relative error {err:.2e}")

# -- the three optimizers on a quadratic bowl ----------------------------------
for kind in ("sgd", "adam", "adadelta"):
    p = Tensor(np.array([4.0]), requires_grad=True)
    opt = make_optimizer(kind, [p])
    for _ in range(200):
        with recording() as tape:
            loss = mul(p, p)
        backward(tape, sum_(loss))
        opt.step()
        opt.zero_grad()
    print(f"{kind:9s} 200 steps: p = {p.data[0]: .5f}")
