"""Method of moving asymptotes for ``min f0(x) s.t. f_i(x) <= 0``.

Classic MMA sub-problem (Svanberg, 1987; 2002 version of the asymptote
update) solved with a primal-dual interior-point method. Problem form::

    minimise   f0(x) + a0 z + sum_i (c_i y_i + d_i y_i^2 / 2)
    subject to f_i(x) - a_i z - y_i <= 0,   xmin <= x <= xmax,  y, z >= 0

With ``a0 = 1``, ``a_i = 1`` and ``f0 = 0`` the problem becomes the bound
(min-max) formulation ``min z s.t. f_i(x) <= z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MMA:
    """Stateful MMA optimiser (keeps the two previous iterates and asymptotes)."""

    n: int
    m: int
    a0: float = 1.0
    a: np.ndarray | None = None
    c: np.ndarray | None = None
    d: np.ndarray | None = None
    asyinit: float = 0.5
    asyincr: float = 1.2
    asydecr: float = 0.7
    albefa: float = 0.1
    move: float = 0.5
    raa0: float = 1e-5
    iteration: int = 0
    xold1: np.ndarray | None = field(default=None, repr=False)
    xold2: np.ndarray | None = field(default=None, repr=False)
    low: np.ndarray | None = field(default=None, repr=False)
    upp: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.a = np.zeros(self.m) if self.a is None else np.asarray(self.a, float)
        self.c = np.full(self.m, 1000.0) if self.c is None else np.asarray(self.c, float)
        self.d = np.ones(self.m) if self.d is None else np.asarray(self.d, float)

    def update(self, x, f0val, df0dx, fval, dfdx, xmin, xmax):
        """One MMA step. ``dfdx`` has shape ``(m, n)``. Returns the new ``x``."""
        x = np.asarray(x, float)
        if x.shape != (self.n,) or np.shape(fval) != (self.m,):
            raise ValueError(f"expected {self.n} variables and {self.m} constraints")
        xmin = np.broadcast_to(np.asarray(xmin, float), x.shape)
        xmax = np.broadcast_to(np.asarray(xmax, float), x.shape)
        self.iteration += 1
        if self.xold1 is None:
            self.xold1 = x.copy()
            self.xold2 = x.copy()
        span = xmax - xmin

        # asymptotes
        if self.iteration <= 2:
            low = x - self.asyinit * span
            upp = x + self.asyinit * span
        else:
            sign = (x - self.xold1) * (self.xold1 - self.xold2)
            factor = np.ones_like(x)
            factor[sign > 0] = self.asyincr
            factor[sign < 0] = self.asydecr
            low = x - factor * (self.xold1 - self.low)
            upp = x + factor * (self.upp - self.xold1)
            low = np.clip(low, x - 10 * span, x - 0.01 * span)
            upp = np.clip(upp, x + 0.01 * span, x + 10 * span)

        # move limits
        alpha = np.maximum.reduce([low + self.albefa * (x - low), x - self.move * span, xmin])
        beta = np.minimum.reduce([upp - self.albefa * (upp - x), x + self.move * span, xmax])

        ux1 = upp - x
        xl1 = x - low
        ux2, xl2 = ux1 * ux1, xl1 * xl1
        inv_span = 1.0 / np.maximum(span, 1e-5)

        dfp = np.maximum(df0dx, 0.0)
        dfm = np.maximum(-df0dx, 0.0)
        p0 = (1.001 * dfp + 0.001 * dfm + self.raa0 * inv_span) * ux2
        q0 = (0.001 * dfp + 1.001 * dfm + self.raa0 * inv_span) * xl2

        dfdx = np.atleast_2d(dfdx)
        dp = np.maximum(dfdx, 0.0)
        dm = np.maximum(-dfdx, 0.0)
        P = (1.001 * dp + 0.001 * dm + self.raa0 * inv_span) * ux2
        Q = (0.001 * dp + 1.001 * dm + self.raa0 * inv_span) * xl2
        b = P @ (1.0 / ux1) + Q @ (1.0 / xl1) - np.asarray(fval, float)

        xnew = _subsolv(self.m, self.n, low, upp, alpha, beta, p0, q0, P, Q,
                        self.a0, self.a, b, self.c, self.d)
        self.xold2, self.xold1 = self.xold1, x.copy()
        self.low, self.upp = low, upp
        return xnew


def _subsolv(m, n, low, upp, alfa, beta, p0, q0, P, Q, a0, a, b, c, d, epsimin=1e-7):
    """Primal-dual Newton solve of the convex MMA sub-problem; returns ``x``."""
    een = np.ones(n)
    eem = np.ones(m)
    epsi = 1.0
    x = 0.5 * (alfa + beta)
    y = eem.copy()
    z = 1.0
    lam = eem.copy()
    xsi = np.maximum(1.0 / (x - alfa), een)
    eta = np.maximum(1.0 / (beta - x), een)
    mu = np.maximum(eem, 0.5 * c)
    zet = 1.0
    s = eem.copy()

    while epsi > epsimin:
        epsvecn = epsi * een
        epsvecm = epsi * eem
        for _ in range(200):
            ux1 = upp - x
            xl1 = x - low
            ux2, xl2 = ux1 * ux1, xl1 * xl1
            ux3, xl3 = ux1 * ux2, xl1 * xl2
            uxinv1, xlinv1 = 1.0 / ux1, 1.0 / xl1
            uxinv2, xlinv2 = 1.0 / ux2, 1.0 / xl2
            plam = p0 + lam @ P
            qlam = q0 + lam @ Q
            gvec = P @ uxinv1 + Q @ xlinv1
            dpsidx = plam * uxinv2 - qlam * xlinv2

            rex = dpsidx - xsi + eta
            rey = c + d * y - mu - lam
            rez = a0 - zet - a @ lam
            relam = gvec - a * z - y + s - b
            rexsi = xsi * (x - alfa) - epsvecn
            reeta = eta * (beta - x) - epsvecn
            remu = mu * y - epsvecm
            rezet = zet * z - epsi
            res = lam * s - epsvecm
            residu = np.concatenate([rex, rey, [rez], relam, rexsi, reeta, remu, [rezet], res])
            residunorm = np.sqrt(residu @ residu)
            residumax = np.max(np.abs(residu))
            if residumax <= 0.9 * epsi:
                break

            GG = P * uxinv2 - Q * xlinv2  # (m, n)
            delx = dpsidx - epsvecn / (x - alfa) + epsvecn / (beta - x)
            dely = c + d * y - lam - epsvecm / y
            delz = a0 - a @ lam - epsi / z
            dellam = gvec - a * z - y - b + epsvecm / lam
            diagx = 2 * (plam / ux3 + qlam / xl3) + xsi / (x - alfa) + eta / (beta - x)
            diagxinv = 1.0 / diagx
            diagy = d + mu / y
            diagyinv = 1.0 / diagy
            diaglam = s / lam
            diaglamyi = diaglam + diagyinv

            blam = dellam + dely / diagy - GG @ (delx / diagx)
            bb = np.concatenate([blam, [delz]])
            Alam = np.diag(diaglamyi) + (GG * diagxinv) @ GG.T
            AA = np.block([[Alam, a[:, None]], [a[None, :], np.array([[-zet / z]])]])
            sol = np.linalg.solve(AA, bb)
            dlam = sol[:m]
            dz = sol[m]
            dx = -delx / diagx - (GG.T @ dlam) / diagx

            dy = -dely / diagy + dlam / diagy
            dxsi = -xsi + epsvecn / (x - alfa) - (xsi * dx) / (x - alfa)
            deta = -eta + epsvecn / (beta - x) + (eta * dx) / (beta - x)
            dmu = -mu + epsvecm / y - (mu * dy) / y
            dzet = -zet + epsi / z - zet * dz / z
            ds = -s + epsvecm / lam - (s * dlam) / lam

            xx = np.concatenate([y, [z], lam, xsi, eta, mu, [zet], s])
            dxx = np.concatenate([dy, [dz], dlam, dxsi, deta, dmu, [dzet], ds])
            stepxx = -1.01 * dxx / xx
            stmxx = np.max(stepxx)
            stepalfa = -1.01 * dx / (x - alfa)
            stepbeta = 1.01 * dx / (beta - x)
            stmalbe = max(np.max(stepalfa), np.max(stepbeta))
            steg = 1.0 / max(stmalbe, stmxx, 1.0)

            xold, yold, zold = x, y, z
            lamold, xsiold, etaold = lam, xsi, eta
            muold, zetold, sold = mu, zet, s
            for _ in range(50):
                x = xold + steg * dx
                y = yold + steg * dy
                z = zold + steg * dz
                lam = lamold + steg * dlam
                xsi = xsiold + steg * dxsi
                eta = etaold + steg * deta
                mu = muold + steg * dmu
                zet = zetold + steg * dzet
                s = sold + steg * ds
                ux1 = upp - x
                xl1 = x - low
                plam = p0 + lam @ P
                qlam = q0 + lam @ Q
                gvec = P @ (1.0 / ux1) + Q @ (1.0 / xl1)
                dpsidx = plam / (ux1 * ux1) - qlam / (xl1 * xl1)
                rex = dpsidx - xsi + eta
                rey = c + d * y - mu - lam
                rez = a0 - zet - a @ lam
                relam = gvec - a * z - y + s - b
                rexsi = xsi * (x - alfa) - epsvecn
                reeta = eta * (beta - x) - epsvecn
                remu = mu * y - epsvecm
                rezet = zet * z - epsi
                res = lam * s - epsvecm
                residu = np.concatenate(
                    [rex, rey, [rez], relam, rexsi, reeta, remu, [rezet], res])
                resinew = np.sqrt(residu @ residu)
                if resinew <= residunorm:
                    break
                steg *= 0.5
            residunorm = resinew
        epsi *= 0.1
    return x
