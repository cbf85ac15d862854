"""Polar-form nodal injections and their first/second derivatives.

Everything is built from the single complex matrix

    T[i, j] = Vc_i * conj(Y_ij * Vc_j),   Vc = V * exp(j*theta),

whose real part is V_i V_j (G_ij cos t_ij + B_ij sin t_ij) and imaginary
part V_i V_j (G_ij sin t_ij - B_ij cos t_ij) with t_ij = theta_i - theta_j.
Row sums give the bus injections P and Q; the same entries assemble the
Jacobian and the multiplier-weighted Hessian in closed form.
"""

from __future__ import annotations

import numpy as np


class InjectionModel:
    """Injection evaluator bound to one admittance matrix (dense, p.u.)."""

    def __init__(self, g: np.ndarray, b: np.ndarray):
        self.g = np.asarray(g, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.n = self.g.shape[0]
        self._y = self.g + 1j * self.b

    def _t(self, v, theta) -> np.ndarray:
        vc = v * np.exp(1j * theta)
        return vc[:, None] * np.conj(self._y * vc[None, :])

    def injections(self, v, theta):
        """Bus injections (p, q) in p.u. at voltage magnitudes/angles."""
        t = self._t(v, theta)
        return t.real.sum(axis=1), t.imag.sum(axis=1)

    def losses(self, v, theta) -> float:
        """Total active-power loss = sum of bus active injections."""
        return float(self._t(v, theta).real.sum())

    def jacobian(self, v, theta):
        """Partial derivative blocks (dp_dth, dp_dv, dq_dth, dq_dv), each (n, n)
        with [i, k] = d(injection at i)/d(variable at k)."""
        t = self._t(v, theta)
        tr, ti = t.real, t.imag
        p = tr.sum(axis=1)
        q = ti.sum(axis=1)
        rd = np.diag(tr)
        sd = np.diag(ti)

        dp_dth = ti.copy()
        np.fill_diagonal(dp_dth, -q + sd)
        dq_dth = -tr
        np.fill_diagonal(dq_dth, p - rd)
        dp_dv = tr / v[None, :]
        np.fill_diagonal(dp_dv, (p + rd) / v)
        dq_dv = ti / v[None, :]
        np.fill_diagonal(dq_dv, (q + sd) / v)
        return dp_dth, dp_dv, dq_dth, dq_dv

    def hessian_weighted(self, v, theta, mu, nu):
        """Hessian of sum_i (mu_i * P_i + nu_i * Q_i) over (theta, V).

        Returns (h_thth, h_vth, h_vv); h_vth[k, l] = d2/dV_k dtheta_l. The
        full symmetric Hessian in (theta, V) ordering is
        [[h_thth, h_vth.T], [h_vth, h_vv]].
        """
        t = self._t(v, theta)
        tr, ti = t.real.copy(), t.imag.copy()
        rd = np.diag(tr).copy()
        sd = np.diag(ti).copy()
        np.fill_diagonal(tr, 0.0)
        np.fill_diagonal(ti, 0.0)
        mu = np.asarray(mu, dtype=float)
        nu = np.asarray(nu, dtype=float)

        a = mu[:, None] * tr + nu[:, None] * ti
        a_sym = a + a.T
        h_thth = a_sym - np.diag(a_sym.sum(axis=1))

        h_vv = (a_sym + 2.0 * np.diag(mu * rd + nu * sd)) / np.outer(v, v)

        c = mu[:, None] * ti - nu[:, None] * tr
        m = c - c.T
        h_vth = (m - np.diag(m.sum(axis=1))) / v[:, None]
        return h_thth, h_vth, h_vv
