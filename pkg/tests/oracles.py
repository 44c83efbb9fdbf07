"""Reference computations that do not go through the package's own formulas."""

from fractions import Fraction as F

import numpy as np
from scipy.integrate import solve_ivp

PUBLISHED = dict(r=F(3, 2), gamma=F(12), omega=F(15), e=F(2, 5), m1=F(3, 20), m2=F(1, 100))


def exact_drift(x, y, alpha, xi, r, gamma, omega, e, m1, m2):
    """Drift pair in exact rational arithmetic, written straight from the model equations."""
    x, y, alpha, xi = F(x), F(y), F(alpha), F(xi)
    den = (1 + alpha * xi) * (omega * x ** 2 + 1) + x
    dx = r * x * (1 - x / gamma) - x * y / den
    dy = y * (e * (x + xi * (omega * x ** 2 + 1)) / den - m1 - m2 * y)
    return dx, dy


def exact_hamiltonian(x, y, alpha, xi, p1, p2, q1=0, q4=0, r1=0, r2=0,
                      sigma1=F(1, 50), sigma2=F(1, 50), lam=1, jump1=1, jump2=1, **params):
    dx, dy = exact_drift(x, y, alpha, xi, **params)
    x, y = F(x), F(y)
    return (1 + dx * F(p1) + dy * F(p2) + F(sigma1) * x * F(q1) + F(sigma2) * y * F(q4)
            + F(lam) * (F(jump1) * x * F(r1) + F(jump2) * y * F(r2)))


def ode_rhs(mp, alpha, xi):
    g_inv = 0.0 if np.isinf(mp.gamma) else 1.0 / mp.gamma

    def rhs(t, z):
        x, y = z
        g = mp.omega * x ** 2 + 1
        den = (1 + alpha * xi) * g + x
        return [mp.r * x * (1 - x * g_inv) - x * y / den,
                y * (mp.e * (x + xi * g) / den - mp.m1 - mp.m2 * y)]

    return rhs


def rk_solution(mp, x0, y0, horizon, alpha, xi, t_eval=None):
    """Adaptive Runge-Kutta 4(5) solution with tight tolerances and dense output."""
    return solve_ivp(ode_rhs(mp, alpha, xi), (0.0, horizon), [x0, y0], method="RK45",
                     rtol=1e-11, atol=1e-13, t_eval=t_eval, dense_output=True)


def costate_solution(mp, sol, horizon, alpha, xi, grad_cost):
    """Backward costate ODE ``dp/dt = -(J^T p + grad L)`` along a dense state solution.

    The Jacobian is taken by complex-step differentiation of ``ode_rhs`` so the
    oracle shares no derivative code with the package.
    """
    rhs = ode_rhs(mp, alpha, xi)

    def jac(z):
        J = np.empty((2, 2))
        h = 1e-30
        for j in range(2):
            zc = np.array(z, dtype=complex)
            zc[j] += 1j * h
            J[:, j] = np.imag(rhs(0.0, zc)) / h
        return J

    def back(t, p):
        z = sol.sol(t)
        gx, gy = grad_cost(z[0], z[1])
        return -(jac(z).T @ p + np.array([gx, gy]))

    return solve_ivp(back, (horizon, 0.0), [0.0, 0.0], method="RK45", rtol=1e-11, atol=1e-13,
                     dense_output=True)
