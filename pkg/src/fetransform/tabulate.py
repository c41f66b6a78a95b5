"""Reference tabulation and the mapping pathways.

Values, gradients and second derivatives of the reference basis are
tabulated once at reference quadrature points.  A physical basis is obtained
either point by point (``push_*``), or, for bilinear forms, by transforming a
reference-basis matrix by congruence with ``M``.
"""

from dataclasses import dataclass

import numpy as np

from .quadrature import triangle_rule
from .transform import theta_matrix

POISSON_RATIO = 0.5


@dataclass(frozen=True, eq=False)
class BasisTable:
    """``values[i, q]``, ``grads[i, q, :]`` and ``hess[i, q, :]`` (xx, xy, yy)."""

    values: np.ndarray
    grads: np.ndarray = None
    hess: np.ndarray = None

    @property
    def nu(self):
        return self.values.shape[0]

    @property
    def npoints(self):
        return self.values.shape[1]


def tabulate_reference(basis, points, max_deriv=2):
    """Tabulate a nodal basis (anything with ``tabulate``) at reference points."""
    if not 0 <= max_deriv <= 2:
        raise ValueError("max_deriv must be 0, 1 or 2")
    if hasattr(points, "points"):
        points = points.points
    tabs = basis.tabulate(np.asarray(points, dtype=float), max_deriv)
    return BasisTable(*tabs)


def push_values(M, table):
    return M @ table.values


def push_gradients(M, J, table, order="M-first"):
    """Physical gradients ``J^T grad(M psihat)``; the two orders are equivalent."""
    if order == "M-first":
        g = np.tensordot(M, table.grads, axes=(1, 0))
        return g @ J
    if order == "J-first":
        g = table.grads @ J
        return np.tensordot(M, g, axes=(1, 0))
    raise ValueError(f"unknown contraction order {order!r}")


def push_second_derivs(M, J, table, order="M-first"):
    """Physical (xx, xy, yy) second derivatives, ``Theta`` applied to reference triples."""
    theta = theta_matrix(J)
    if order == "M-first":
        return np.tensordot(M, table.hess, axes=(1, 0)) @ theta.T
    if order == "J-first":
        return np.tensordot(M, table.hess @ theta.T, axes=(1, 0))
    raise ValueError(f"unknown contraction order {order!r}")


def plate_weight(nu=POISSON_RATIO):
    """Pointwise plate form on (xx, xy, yy) triples.

    ``u_xx v_xx + u_yy v_yy + (2 nu - 1)(u_xx v_yy + u_yy v_xx) + 4 (1 - nu) u_xy v_xy``.
    """
    c = 1.0 - 2.0 * (1.0 - nu)
    return np.array([[1.0, 0.0, c], [0.0, 4.0 * (1.0 - nu), 0.0], [c, 0.0, 1.0]])


def _form_degree(form, degree):
    return {"mass": 2 * degree, "stiffness": 2 * max(degree - 1, 0),
            "plate": 2 * max(degree - 2, 0)}[form]


def local_matrix(basis, map_, form="mass", M=None, rule=None, nu=POISSON_RATIO):
    """Element matrix of the physical basis ``M F^*(psihat)`` by direct quadrature.

    Physical weights are ``w_q |det J|^{-1}`` since ``J`` maps onto the reference cell.
    """
    if form not in ("mass", "stiffness", "plate"):
        raise ValueError(f"unknown form {form!r}")
    rule = triangle_rule(_form_degree(form, basis.element.degree)) if rule is None else rule
    J = map_.J
    if M is None:
        M = np.eye(len(basis))
    tab = tabulate_reference(basis, rule.points, {"mass": 0, "stiffness": 1, "plate": 2}[form])
    w = rule.weights / abs(map_.detJ)
    if form == "mass":
        v = push_values(M, tab)
        return (v * w) @ v.T
    if form == "stiffness":
        g = push_gradients(M, J, tab)
        return np.einsum("iqa,q,jqa->ij", g, w, g)
    h = push_second_derivs(M, J, tab)
    return np.einsum("iqa,ab,q,jqb->ij", h, plate_weight(nu), w, h)


def congruence_transform(M, A):
    return M @ A @ M.T


def transform_coefficients(V, c):
    """Coefficients on the pulled-back reference basis: ``u = sum_k (V c)_k F^* psihat_k``."""
    return V @ np.asarray(c, dtype=float)


@dataclass(frozen=True, eq=False)
class ReferenceTensors:
    """Form tensors of the reference basis, for batched affine assembly.

    ``mass[i, j] = int psihat_i psihat_j``,
    ``stiffness[a, b, i, j] = int d_a psihat_i d_b psihat_j``,
    ``plate[a, b, i, j] = int D2_a psihat_i D2_b psihat_j`` over the reference cell.
    """

    mass: np.ndarray
    stiffness: np.ndarray
    plate: np.ndarray

    def cell_matrices(self, form, J, detJ, nu=POISSON_RATIO):
        """Reference-basis matrices ``Atilde`` for a stack of Jacobians."""
        J = np.asarray(J, dtype=float).reshape(-1, 2, 2)
        scale = 1.0 / np.abs(np.asarray(detJ, dtype=float).reshape(-1))
        if form == "mass":
            return scale[:, None, None] * self.mass[None]
        if form == "stiffness":
            coef = np.einsum("cak,cbk->cab", J, J)  # J J^T
            return np.einsum("c,cab,abij->cij", scale, coef, self.stiffness)
        if form == "plate":
            theta = np.array([theta_matrix(j) for j in J])
            coef = np.einsum("cka,kl,clb->cab", theta, plate_weight(nu), theta)
            return np.einsum("c,cab,abij->cij", scale, coef, self.plate)
        raise ValueError(f"unknown form {form!r}")


def reference_tensors(basis):
    rule = triangle_rule(2 * basis.element.degree)
    tab = tabulate_reference(basis, rule.points, 2)
    w = rule.weights
    mass = (tab.values * w) @ tab.values.T
    stiff = np.einsum("iqa,q,jqb->abij", tab.grads, w, tab.grads)
    plate = np.einsum("iqa,q,jqb->abij", tab.hess, w, tab.hess)
    return ReferenceTensors(mass, stiff, plate)
