"""Independent reference values for the bundled two-stock, two-regime model.

Uses scipy only (expm, DOP853, bounded quasi-Newton) and shares no code with
the C++ library. The printed numbers are frozen into the C++ unit tests.
"""
import numpy as np
from scipy.linalg import expm
from scipy.integrate import solve_ivp
from scipy.optimize import minimize, minimize_scalar

gamma, T = 0.5, 1.0
Q = np.array([[-0.5, 0.5], [1.0, -1.0]])
r = np.array([0.1, 0.06])
mu = np.array([[1.0, 0.55], [1.4, 0.8]])
sigma = [np.diag([0.7, 1.0]), np.diag([1.0, 1.5])]
p = np.array([0.8, 0.5])
c = np.array([0.1, 0.05])
phi = [np.array([0.4, 0.8]), np.array([0.7, 1.2])]
phibar = np.array([0.3, 0.6])
g = np.array([0.2, 0.1])
# states keyed by (z1, z2)
h = {(0, 0): np.array([[0.5, 0.75], [0.75, 1.1]]),   # [regime][stock]
     (0, 1): np.array([[0.7, 0.0], [1.0, 0.0]]),
     (1, 0): np.array([[0.0, 0.9], [0.0, 1.3]])}
nu = {(0, 0): [2, 3], (1, 0): [2.5, 4], (0, 1): [2.3, 3.7], (1, 1): [2.6, 5]}


def H_terminal(l, i):
    s = phi[i] @ phi[i] + phibar[i] ** 2
    return (gamma * (p[i] - c[i]) * l + 0.5 * gamma * (gamma - 1) * l * l * s
            + ((max(1 - l * g[i], 0.0)) ** gamma - 1) * nu[(1, 1)][i])


term = []
for i in range(2):
    res = minimize_scalar(lambda l: -H_terminal(l, i), bounds=(0, 1 / g[i]),
                          method='bounded', options={'xatol': 1e-13})
    term.append((res.x, -res.fun))
    print(f"terminal regime {i+1}: l* = {res.x:.15g}  supH = {-res.fun:.15g}")

An = np.diag([gamma * r[i] + term[i][1] for i in range(2)]) + Q
print("A_terminal =", An.tolist())
phi_e = lambda t: expm(An * (T - t)) @ np.ones(2) / gamma
print("phi(0,e_n) =", phi_e(0.0).tolist())
print("phi(0.5,e_n) =", phi_e(0.5).tolist())


def objective(v, i, z, x, wnext):
    alive = [j for j in range(2) if z[j] == 0]
    pi = np.zeros(2)
    for a, j in enumerate(alive):
        pi[j] = v[a]
    l = v[-1]
    theta = mu[i] - r[i] + h[z][i]
    S = sigma[i] @ sigma[i].T
    cross = sigma[i] @ phi[i]
    quad = pi @ S @ pi + l * l * (phi[i] @ phi[i] + phibar[i] ** 2) - 2 * l * pi @ cross
    H = (gamma * (pi @ theta + (p[i] - c[i]) * l) + 0.5 * gamma * (gamma - 1) * quad
         + (max(1 - l * g[i], 0.0) ** gamma - 1) * nu[z][i])
    jump = sum(max(1 - pi[j], 0.0) ** gamma * h[z][i][j] * wnext[j] for j in alive)
    return jump + H * x


def G(i, z, x, wnext, start):
    alive = [j for j in range(2) if z[j] == 0]
    bounds = [(-20, 1)] * len(alive) + [(0, 1 / g[i])]
    res = minimize(lambda v: -objective(v, i, z, x, wnext), start, method='L-BFGS-B',
                   bounds=bounds, options={'ftol': 1e-15, 'gtol': 1e-12, 'maxiter': 2000})
    return -res.fun, res.x


sol = {(1, 1): lambda t: phi_e(t)}


def solve_state(z):
    alive = [j for j in range(2) if z[j] == 0]
    nbrs = {j: sol[tuple(1 if k == j else z[k] for k in range(2))] for j in alive}
    A = np.diag([gamma * r[i] - sum(h[z][i][j] for j in alive) for i in range(2)]) + Q
    starts = [np.array([0.0] * len(alive) + [0.5]) for _ in range(2)]

    def rhs(t, y):
        out = -A @ y
        for i in range(2):
            wnext = np.zeros(2)
            for j in alive:
                wnext[j] = nbrs[j](t)[i]
            val, arg = G(i, z, y[i], wnext, starts[i])
            starts[i] = np.clip(arg, [-20] * len(alive) + [0], [0.999] * len(alive) + [1 / g[i]])
            out[i] -= val
        return out

    s = solve_ivp(rhs, (T, 0.0), np.ones(2) / gamma, method='DOP853', rtol=1e-12,
                  atol=1e-13, dense_output=True)
    return lambda t: s.sol(t)


for z in [(0, 1), (1, 0)]:
    sol[z] = solve_state(z)
sol[(0, 0)] = solve_state((0, 0))
for z in [(0, 0), (1, 0), (0, 1), (1, 1)]:
    print(f"phi(0,.,{z}) =", [f"{v:.12g}" for v in sol[z](0.0)],
          " phi(0.5,.,z) =", [f"{v:.12g}" for v in sol[z](0.5)])

# optimal policy at t=0.5, regime 2, z=(0,1)
z = (0, 1)
x = sol[z](0.5)[1]
wn = np.array([sol[(1, 1)](0.5)[1], 0.0])
val, arg = G(1, z, x, wn, np.array([0.0, 0.5]))
print("policy t=0.5 regime 2 z=(0,1): pi1 = %.12g l = %.12g value = %.12g x = %.12g next = %.12g"
      % (arg[0], arg[1], val, x, wn[0]))
