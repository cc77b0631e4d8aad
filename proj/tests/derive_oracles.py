"""Independent high-precision values frozen into the C++ tests.

Run with `python3 tests/derive_oracles.py`; needs mpmath and numpy.
"""
import numpy as np
from mpmath import mp, mpf, sqrt, findroot, cbrt

mp.dps = 40


def show(name, value):
    print(f"{name:<36} {mp.nstr(value, 20)}")


# 1-D instance A=1, b=2, lambda=1, p=1/2: F(t) = (t-2)^2 + sqrt|t|.
dF = lambda t: 2 * (t - 2) + mpf(1) / (2 * sqrt(t))
t_star = findroot(dF, 1.8)
t_max = findroot(dF, (mpf('0.001'), mpf('0.1')), solver='anderson')
show("t_star", t_star)
show("min_eig(t_star) = 2 - t^-1.5/4", 2 - t_star ** mpf(-1.5) / 4)
show("t_local_max", t_max)
show("F''(t_local_max)", 2 - t_max ** mpf(-1.5) / 4)
show("F(t_star)", (t_star - 2) ** 2 + sqrt(t_star))

# Growth ratio (F(t)-F(t*))/(t-t*)^2 over [t*-0.05, t*+0.05].
F = lambda t: (t - 2) ** 2 + sqrt(abs(t))
ts = [t_star + mpf(k) / 20000 for k in range(-1000, 1001) if k != 0]
show("min growth ratio on t*+-0.05", min((F(t) - F(t_star)) / (t - t_star) ** 2 for t in ts))

# Scalar prox g(t) = lambda|t|^p + (t-z)^2/(2v) at z=10, v=1, lambda=1, p=1/2.
root = findroot(lambda t: t - 10 + 1 / (2 * sqrt(t)), 9.8)
show("prox(10,1,1,1/2) argmin", root)
show("prox(10,1,1,1/2) value", sqrt(root) + (root - 10) ** 2 / 2)
# p = 1/2 threshold: nonzero output iff |z| > (54^(1/3)/4)(2 v lambda)^(2/3).
show("half threshold v=lambda=1", cbrt(54) / 4 * cbrt(2) ** 2)
show("nonzero lower bound v=lambda=1,p=1/2", mpf("0.25") ** (mpf(2) / 3))

# z = 0.5 gives 0: g(t) > g(0) on a 1e6 grid over (0, 0.5].
grid = np.linspace(0.0, 0.5, 1_000_001)[1:]
g = np.sqrt(grid) + (grid - 0.5) ** 2 / 2
print(f"{'prox(0.5) min over t>0 minus g(0)':<36} {g.min() - 0.125:.6g}")

# ||A||^2 for A = [[1,1],[0,1]].
show("(3+sqrt5)/2", (3 + sqrt(5)) / 2)

# Objective example A=diag(1,2), b=(1,2), lambda=2, p=1/2, x=(1,0).
show("F example", (1 - 1) ** 2 + (0 - 2) ** 2 + 2 * sqrt(1))

# Zero point as global minimum: A below, b below, lambda = 20 ||A^T b||.
A = np.array([[1.0, 0.5], [-0.3, 2.0], [0.7, -1.1]])
b = np.array([1.0, -2.0, 0.5])
lam = 20 * np.linalg.norm(A.T @ b)
print(f"{'zero-min instance lambda':<36} {float(lam)!r}")
u = np.linspace(-0.1, 0.1, 2001)
U1, U2 = np.meshgrid(u, u)
R = A[:, :1, None] * U1 + A[:, 1:, None] * U2 - b[:, None, None]
Fg = (R ** 2).sum(axis=0) + lam * (np.sqrt(np.abs(U1)) + np.sqrt(np.abs(U2)))
print(f"{'zero-min grid: min F - F(0)':<36} {Fg.min() - (b @ b):.6g}")
