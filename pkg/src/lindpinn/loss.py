"""Loss terms for training against data and the Lindblad equation.

All terms work on basis coefficients ``c`` (the network outputs). For a
density matrix rho = (I + sum_j c_j s_j) / d, orthogonality of the Pauli
basis gives

    ||delta rho||_F^2 = ||delta c||^2 / d,

which is how the physics residual is measured without forming complex
matrices. The positivity penalty is the one place states are built
explicitly.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .errors import LabelUnknown
from .linalg import adjoint
from .quantum import reconstruct_density
from .seeding import COLLOCATION, stream

DEGENERACY_GAP = 1e-10


@dataclass
class LossWeights:
    w_d: float = 1.0
    w_p: float = 10.0
    w_ic: float = 1.0
    w_constr: float = 1.0


@dataclass
class CollocationPlan:
    n_points: int = 200
    scheme: str = "resampled-uniform"  # or "fixed-grid"
    seed: int = 0
    t_end: float = 5.0

    def points(self, epoch=0):
        if self.scheme == "fixed-grid":
            return np.linspace(0.0, self.t_end, self.n_points)
        if self.scheme == "resampled-uniform":
            return stream(self.seed, COLLOCATION, epoch).uniform(0.0, self.t_end, self.n_points)
        raise ValueError(f"unknown collocation scheme {self.scheme!r}")


def label_columns(labels, basis):
    try:
        return np.array([basis.index(lab) for lab in labels])
    except LabelUnknown:
        raise
    except ValueError as exc:
        raise LabelUnknown(str(exc)) from exc


def data_loss(pred, values, columns):
    """Mean squared error over every (time, observable) cell.

    ``pred`` holds all basis coefficients at the data times; ``columns``
    picks the measured observables.
    """
    picked = ad.take(ad.primal(ad.as_tensor(pred)), np.asarray(columns), axis=1)
    return ad.mean(ad.square(picked - np.asarray(values)))


def physics_loss(coeffs, rates, generator):
    """Mean over collocation points of ||d rho/dt - L(rho)||_F^2.

    ``coeffs`` must carry a time tangent; ``rates`` is (N, K) or (1, K).
    """
    c = ad.as_tensor(coeffs)
    if c.tangent is None:
        raise ValueError("physics_loss needs coefficients with a time tangent")
    cp = ad.primal(c)
    drift = ad.matmul(cp, generator.hamiltonian.T)
    for k in range(generator.channels.shape[0]):
        term = ad.matmul(cp, generator.channels[k].T) + generator.offsets[k]
        drift = drift + ad.take(rates, slice(k, k + 1), axis=1) * term
    resid = c.tangent - drift
    return ad.mean(ad.sum(ad.square(resid), axis=1)) * (1.0 / generator.dim)


def ic_loss(pred0, rho0_coeffs):
    pred0 = ad.primal(ad.as_tensor(pred0))
    target = np.asarray(rho0_coeffs, dtype=np.float64).reshape(pred0.shape)
    return ad.mean(ad.square(pred0 - target))


def _eig_jacobian(w, v, basis):
    # d lambda_j / d c_k = Re Tr(s_k v_j v_j^H) / d
    n, d = w.shape
    proj = np.einsum("nij,nlj->njli", v, np.conj(v)).reshape(n * d, d * d)
    ops = basis.operators.reshape(basis.size, d * d)
    jac = (proj @ ops.T).real.reshape(n, d, basis.size) / basis.dim
    gaps = np.diff(w, axis=1) < DEGENERACY_GAP
    for i in np.nonzero(gaps.any(axis=1))[0]:
        start = 0
        for j in range(1, d + 1):
            if j == d or not gaps[i, j - 1]:
                if j - start > 1:
                    jac[i, start:j] = jac[i, start:j].mean(axis=0)
                start = j
    return jac


def density_eigenvalues(coeffs, basis):
    """Ascending eigenvalues of the reconstructed states, as a taped primitive.

    The backward pass uses the spectral derivative v_j v_j^H; inside a
    degenerate cluster (gap < 1e-10) the cluster-mean derivative is used.
    No time tangent is propagated.
    """
    c = ad.primal(ad.as_tensor(coeffs))
    rho = reconstruct_density(c.value, basis)
    rho = 0.5 * (rho + adjoint(rho))
    w, v = kernels.eigh_batch(rho)

    def vjp(g):
        out = np.zeros(c.shape)
        rows = np.nonzero(np.any(g != 0, axis=1))[0]
        if rows.size:
            jac = _eig_jacobian(w[rows], v[rows], basis)
            out[rows] = np.einsum("nj,njk->nk", g[rows], jac)
        return (out,)

    return ad.custom(w, (c,), vjp)


def positivity_loss(coeffs, basis):
    """Mean over points and eigenvalues of relu(-lambda)."""
    lam = density_eigenvalues(coeffs, basis)
    return ad.mean(ad.relu(ad.neg(lam)))


def total_loss(terms, weights):
    """Weighted sum of the ``data``, ``phys``, ``ic`` and ``constr`` entries of ``terms``."""
    return (
        terms["data"] * weights.w_d
        + terms["phys"] * weights.w_p
        + terms["ic"] * weights.w_ic
        + terms["constr"] * weights.w_constr
    )
