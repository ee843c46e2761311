"""Concrete operators and the composed update operators built on top of them.

An operator is a map F: R^d -> R^d evaluated with ``op(x)``.  Affine
operators carry their matrix and offset explicitly so that composition
stays in closed form; nonlinear composites evaluate lazily.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import (
    BadParameters,
    DimensionMismatch,
    NoAnalyticJacobian,
    NoConvergence,
    NotAffine,
    OffTable,
    SingularMatrix,
)


@dataclass(frozen=True)
class Constants:
    """Declared operator constants: Lipschitz L, Jacobian-Lipschitz, cocoercivity."""

    lipschitz: float | None = None
    jac_lipschitz: float | None = None
    cocoercivity: float | None = None

    def __post_init__(self):
        if self.lipschitz is not None and self.lipschitz <= 0.0:
            raise BadParameters("declared Lipschitz constant must be positive")
        if self.cocoercivity is not None and self.cocoercivity <= 0.0:
            raise BadParameters("declared cocoercivity constant must be positive")

    def to_json(self) -> dict:
        out = {}
        if self.lipschitz is not None:
            out["L"] = self.lipschitz
        if self.jac_lipschitz is not None:
            out["Lambda"] = self.jac_lipschitz
        if self.cocoercivity is not None:
            out["ell"] = self.cocoercivity
        return out

    @staticmethod
    def from_json(d: dict | None) -> "Constants":
        d = d or {}
        return Constants(
            lipschitz=d.get("L"),
            jac_lipschitz=d.get("Lambda"),
            cocoercivity=d.get("ell"),
        )


class Operator:
    kind = "abstract"
    dim: int = 0
    constants: Constants = Constants()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NoAnalyticJacobian(f"{self.kind} operator has no analytic Jacobian")

    def root(self) -> np.ndarray | None:
        """A point x* with F(x*) = 0, when one is known; None otherwise."""
        return None

    def _checked(self, x) -> np.ndarray:
        v = numerics.as_vector(x)
        if v.size != self.dim:
            raise DimensionMismatch(f"operator dim {self.dim}, point dim {v.size}")
        return v


class Affine(Operator):
    """F(x) = A x + b with stored square matrix and offset."""

    def __init__(self, matrix, offset=None, kind: str = "affine",
                 constants: Constants | None = None, root=None):
        A = numerics.as_matrix(matrix, square=True).copy()
        b = np.zeros(A.shape[0]) if offset is None else numerics.as_vector(offset).copy()
        if b.size != A.shape[0]:
            raise DimensionMismatch("offset length does not match matrix")
        A.setflags(write=False)
        b.setflags(write=False)
        self.matrix = A
        self.offset = b
        self.kind = kind
        self.dim = A.shape[0]
        self.constants = constants or Constants()
        self._root = None if root is None else numerics.as_vector(root).copy()
        self._root_computed = root is not None

    def __call__(self, x):
        return self.matrix @ self._checked(x) + self.offset

    def jacobian(self, x=None):
        return self.matrix

    def root(self):
        if not self._root_computed:
            self._root_computed = True
            try:
                self._root = numerics.lu_solve(self.matrix, -self.offset)
            except SingularMatrix:
                self._root = np.zeros(self.dim) if not self.offset.any() else None
        return None if self._root is None else self._root.copy()


def rotation(scale: float = 1.0) -> Affine:
    """The canonical 2-d monotone non-cocoercive map x -> (scale) * (x2, -x1)."""
    s = float(scale)
    if s <= 0.0:
        raise BadParameters("scale must be positive")
    A = np.array([[0.0, s], [-s, 0.0]])
    return Affine(A, kind="rotation", constants=Constants(lipschitz=s), root=np.zeros(2))


def scaled_identity(c: float, dim: int) -> Affine:
    c = float(c)
    return Affine(
        c * np.eye(int(dim)),
        kind="scaled-identity",
        constants=Constants(lipschitz=abs(c) if c != 0.0 else None,
                            cocoercivity=c if c > 0 else None),
        root=np.zeros(int(dim)) if c != 0.0 else None,
    )


def bilinear_game(coupling, offset_x=None, offset_y=None) -> Affine:
    """Saddle operator of (x, y) -> x^T B y: F(x, y) = (B y, -B^T x) plus offsets."""
    B = numerics.as_matrix(coupling)
    p, q = B.shape
    A = np.block([[np.zeros((p, p)), B], [-B.T, np.zeros((q, q))]])
    bx = np.zeros(p) if offset_x is None else numerics.as_vector(offset_x)
    by = np.zeros(q) if offset_y is None else numerics.as_vector(offset_y)
    L = numerics.spectral_norm(B)
    return Affine(A, np.concatenate([bx, by]), kind="bilinear-game",
                  constants=Constants(lipschitz=L))


def _sigmoid(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + np.exp(-t))
    z = np.exp(t)
    return z / (1.0 + z)


class LogisticGrad(Operator):
    """Gradient of the regularized scalar logistic loss: a*sigma(a x) + delta*x."""

    kind = "logistic-grad"
    dim = 1

    def __init__(self, a: float = 1.0, delta: float = 0.01):
        if a == 0.0:
            raise BadParameters("slope a must be nonzero")
        if delta < 0.0:
            raise BadParameters("regularizer delta must be nonnegative")
        self.a = float(a)
        self.delta = float(delta)
        L = a * a / 4.0 + delta
        self.constants = Constants(lipschitz=L, jac_lipschitz=abs(a) ** 3 / 4.0,
                                   cocoercivity=L)
        self._root = None
        self._root_computed = False

    def __call__(self, x):
        x = self._checked(x)
        t = self.a * x[0]
        return np.array([self.a * _sigmoid(t) + self.delta * x[0]])

    def jacobian(self, x):
        x = self._checked(x)
        s = _sigmoid(self.a * x[0])
        return np.array([[self.a * self.a * s * (1.0 - s) + self.delta]])

    def second_derivative(self, x0: float) -> float:
        s = _sigmoid(self.a * float(x0))
        return self.a ** 3 * s * (1.0 - s) * (1.0 - 2.0 * s)

    def root(self):
        if self.delta == 0.0:
            return None
        if not self._root_computed:
            lo = -(abs(self.a) + 1.0) / self.delta
            hi = (abs(self.a) + 1.0) / self.delta
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if self(np.array([mid]))[0] > 0.0:
                    hi = mid
                else:
                    lo = mid
            self._root = np.array([0.5 * (lo + hi)])
            self._root_computed = True
        return self._root.copy()


class CustomTable(Operator):
    """Finite table of (x, F(x)) pairs; evaluation off the table raises OffTable."""

    kind = "custom-table"

    def __init__(self, points):
        stored = []
        dim = None
        for x, fx in points:
            xv = numerics.as_vector(x)
            fv = numerics.as_vector(fx)
            if dim is None:
                dim = xv.size
            if xv.size != dim or fv.size != dim:
                raise DimensionMismatch("table entries have inconsistent dimensions")
            stored.append((xv, fv))
        if dim is None:
            raise BadParameters("table must contain at least one point")
        self.points = tuple(stored)
        self.dim = dim

    def __call__(self, x):
        x = self._checked(x)
        for px, pf in self.points:
            if np.abs(x - px).max(initial=0.0) <= 1e-12 * (1.0 + np.abs(px).max(initial=0.0)):
                return pf.copy()
        raise OffTable("point is not in the stored table")


# ---------------------------------------------------------------------------
# Composite operators
# ---------------------------------------------------------------------------

class ExtrapolatedComposite(Operator):
    """x -> F(x - gamma*F(x)) for a nonlinear inner operator."""

    kind = "eg-composite"

    def __init__(self, inner: Operator, gamma: float):
        if gamma <= 0.0:
            raise BadParameters("gamma must be positive")
        self.inner = inner
        self.gamma = float(gamma)
        self.dim = inner.dim
        self.constants = Constants()

    def __call__(self, x):
        x = self._checked(x)
        return self.inner(x - self.gamma * self.inner(x))

    def jacobian(self, x):
        x = self._checked(x)
        Ji = self.inner.jacobian(x)
        mid = x - self.gamma * self.inner(x)
        return self.inner.jacobian(mid) @ (np.eye(self.dim) - self.gamma * Ji)

    def root(self):
        return self.inner.root()


def eg_operator(op: Operator, gamma: float) -> Operator:
    """Extragradient update operator x -> F(x - gamma*F(x)).

    For affine F = Ax + b the result is affine with matrix A(I - gamma*A)
    and offset b - gamma*A b.
    """
    if gamma <= 0.0:
        raise BadParameters("gamma must be positive")
    if isinstance(op, Affine):
        A, b = op.matrix, op.offset
        eye = np.eye(op.dim)
        return Affine(A @ (eye - gamma * A), b - gamma * (A @ b), root=op.root())
    return ExtrapolatedComposite(op, gamma)


def og_operator(op: Operator, gamma: float) -> Affine:
    """Optimistic-gradient block operator on R^{2d}, states z = (current, previous).

    Blocks [[2A, -A], [-I/gamma, I/gamma]] with offset (b, 0); only defined
    for affine operators.
    """
    if gamma <= 0.0:
        raise BadParameters("gamma must be positive")
    if not isinstance(op, Affine):
        raise NotAffine("optimistic-gradient matrix form needs an affine operator")
    A, b = op.matrix, op.offset
    eye = np.eye(op.dim)
    big = np.block([[2.0 * A, -A], [-eye / gamma, eye / gamma]])
    offset = np.concatenate([b, np.zeros(op.dim)])
    xstar = op.root()
    root = None if xstar is None else np.concatenate([xstar, xstar])
    return Affine(big, offset, root=root)


def eftp_operator(op: Operator, gamma: float) -> Affine:
    """Extrapolation-from-the-past block operator on R^{2d}, states z = (x, x_tilde).

    z -> (F(x - gamma*F(y)), (y - x)/gamma + F(y)); affine inputs only.
    """
    if gamma <= 0.0:
        raise BadParameters("gamma must be positive")
    if not isinstance(op, Affine):
        raise NotAffine("extrapolation-from-the-past matrix form needs an affine operator")
    A, b = op.matrix, op.offset
    eye = np.eye(op.dim)
    big = np.block([[A, -gamma * (A @ A)], [-eye / gamma, eye / gamma + A]])
    offset = np.concatenate([b - gamma * (A @ b), b])
    xstar = op.root()
    root = None if xstar is None else np.concatenate([xstar, xstar])
    return Affine(big, offset, root=root)


class ImplicitComposite(Operator):
    """x -> F(y) with y solving y = x - gamma*F(y), by damped fixed-point iteration."""

    kind = "pp-composite"
    max_iters = 100_000
    tol = 1e-12

    def __init__(self, inner: Operator, gamma: float):
        if gamma <= 0.0:
            raise BadParameters("gamma must be positive")
        L = inner.constants.lipschitz
        if L is not None and gamma * L >= 1.0:
            raise BadParameters(f"gamma*L = {gamma * L:.3g} >= 1 breaks the inner contraction")
        self.inner = inner
        self.gamma = float(gamma)
        self.dim = inner.dim
        self.constants = Constants()
        self._theta = 1.0 if L is None or gamma * L <= 0.9 else 1.0 / (1.0 + gamma * L)

    def inner_point(self, x) -> np.ndarray:
        x = self._checked(x)
        y = x.copy()
        for _ in range(self.max_iters):
            target = x - self.gamma * self.inner(y)
            if float(np.sqrt(((y - target) ** 2).sum())) <= self.tol:
                return y
            y = y + self._theta * (target - y)
        raise NoConvergence("implicit-step fixed point did not reach tolerance")

    def __call__(self, x):
        return self.inner(self.inner_point(x))

    def root(self):
        return self.inner.root()


def pp_operator(op: Operator, gamma: float) -> Operator:
    """Implicit-step update operator: x -> F(y) where y = x - gamma*F(y).

    Affine inputs are resolved exactly by a linear solve; nonlinear inputs
    use a fixed-point iteration with residual tolerance 1e-12.
    """
    if gamma <= 0.0:
        raise BadParameters("gamma must be positive")
    if isinstance(op, Affine):
        A, b = op.matrix, op.offset
        eye = np.eye(op.dim)
        inv = numerics.lu_solve(eye + gamma * A, eye)
        M = A @ inv
        return Affine(M, b - gamma * (M @ b), root=op.root())
    return ImplicitComposite(op, gamma)


class HamiltonianComposite(Operator):
    """x -> J_F(x)^T F(x), the gradient of 0.5*||F(x)||^2."""

    kind = "hamiltonian-composite"

    def __init__(self, inner: Operator):
        self.inner = inner
        self.dim = inner.dim
        self.constants = Constants()

    def __call__(self, x):
        x = self._checked(x)
        return self.inner.jacobian(x).T @ self.inner(x)

    def root(self):
        return self.inner.root()


def hamiltonian_operator(op: Operator) -> Operator:
    """Steepest-descent operator of the residual energy 0.5*||F(x)||^2."""
    if isinstance(op, Affine):
        A, b = op.matrix, op.offset
        return Affine(A.T @ A, A.T @ b, root=op.root())
    return HamiltonianComposite(op)


def hamiltonian_value(op: Operator, x) -> float:
    """0.5*||F(x)||^2 at x."""
    fx = op(x)
    return 0.5 * float(fx @ fx)


# ---------------------------------------------------------------------------
# JSON serialization (bit-exact float64 round trip via repr-based encoding)
# ---------------------------------------------------------------------------

_AFFINE_KINDS = {"affine", "rotation", "scaled-identity", "bilinear-game"}


def operator_to_json(op: Operator) -> dict:
    out: dict = {"kind": op.kind}
    if isinstance(op, Affine):
        out["A"] = op.matrix.tolist()
        out["b"] = op.offset.tolist()
    elif isinstance(op, LogisticGrad):
        out["a"] = op.a
        out["delta"] = op.delta
    elif isinstance(op, CustomTable):
        out["points"] = [[x.tolist(), fx.tolist()] for x, fx in op.points]
    else:
        raise BadParameters(f"operator kind {op.kind!r} is not serializable")
    constants = op.constants.to_json()
    if constants:
        out["constants"] = constants
    return out


def operator_from_json(d: dict) -> Operator:
    kind = d.get("kind")
    constants = Constants.from_json(d.get("constants"))
    if kind in _AFFINE_KINDS:
        return Affine(d["A"], d.get("b"), kind=kind, constants=constants)
    if kind == "logistic-grad":
        return LogisticGrad(d.get("a", 1.0), d.get("delta", 0.01))
    if kind == "custom-table":
        return CustomTable([(x, fx) for x, fx in d["points"]])
    raise BadParameters(f"unknown operator kind {kind!r}")


def save_operator(op: Operator, path) -> None:
    with open(path, "w") as fh:
        json.dump(operator_to_json(op), fh, indent=2)
        fh.write("\n")


def load_operator(path) -> Operator:
    with open(path) as fh:
        return operator_from_json(json.load(fh))
