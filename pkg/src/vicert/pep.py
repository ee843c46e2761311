"""Worst-case analysis problems in Gram-matrix form.

Assembles the expansiveness and norm-decay SDPs over a basis of abstract
vectors, exports SDPA sparse files for external solvers, embeds concrete
point systems as feasible Gram matrices, and searches for feasible points
(certified lower bounds) by low-rank factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import (
    BadParameters,
    LabelMismatch,
    NoFeasiblePointFound,
    NotPSD,
)


# ---------------------------------------------------------------------------
# Formal linear combinations over a named basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GramExpr:
    """A formal linear combination of basis vectors; inner products of two
    expressions are bilinear forms over the Gram matrix of the basis."""

    basis: tuple[str, ...]
    coeffs: np.ndarray

    def _like(self, coeffs) -> "GramExpr":
        return GramExpr(self.basis, coeffs)

    def __add__(self, other: "GramExpr") -> "GramExpr":
        self._check(other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other: "GramExpr") -> "GramExpr":
        self._check(other)
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self) -> "GramExpr":
        return self._like(-self.coeffs)

    def __mul__(self, scalar: float) -> "GramExpr":
        return self._like(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def _check(self, other: "GramExpr") -> None:
        if self.basis != other.basis:
            raise LabelMismatch("expressions live over different bases")


def basis_exprs(labels) -> dict[str, GramExpr]:
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        raise BadParameters("basis labels must be unique")
    eye = np.eye(len(labels))
    return {lab: GramExpr(labels, eye[i]) for i, lab in enumerate(labels)}


def zero_expr(labels) -> GramExpr:
    labels = tuple(labels)
    return GramExpr(labels, np.zeros(len(labels)))


def inner_matrix(u: GramExpr, v: GramExpr) -> np.ndarray:
    """Symmetric M with <u, v> = Tr(M G) for the basis Gram matrix G."""
    u._check(v)
    return 0.5 * (np.outer(u.coeffs, v.coeffs) + np.outer(v.coeffs, u.coeffs))


def sq_matrix(u: GramExpr) -> np.ndarray:
    return np.outer(u.coeffs, u.coeffs)


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GramProblem:
    """max Tr(objective . G) over PSD G subject to Tr(M_i G) >= rhs_i and
    Tr(E_j G) = rhs_j, all matrices symmetric over the named basis."""

    name: str
    basis: tuple[str, ...]
    objective: np.ndarray
    inequalities: tuple[tuple[str, np.ndarray, float], ...]
    equalities: tuple[tuple[str, np.ndarray, float], ...]
    metadata: dict = field(default_factory=dict)
    interior: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.basis)
        for mat in [self.objective] + [m for _, m, _ in self.inequalities] \
                + [m for _, m, _ in self.equalities]:
            if mat.shape != (n, n):
                raise BadParameters("constraint matrix shape does not match basis")
            if np.abs(mat - mat.T).max(initial=0.0) > 1e-14 * (1.0 + np.abs(mat).max(initial=0.0)):
                raise BadParameters("constraint matrices must be symmetric")

    @property
    def n(self) -> int:
        return len(self.basis)

    def inequality_values(self, G) -> np.ndarray:
        return np.array([float(np.sum(m * G)) - rhs for _, m, rhs in self.inequalities])

    def equality_residuals(self, G) -> np.ndarray:
        return np.array([float(np.sum(m * G)) - rhs for _, m, rhs in self.equalities])

    def objective_value(self, G) -> float:
        return float(np.sum(self.objective * G))


@dataclass
class FeasiblePoint:
    """A PSD Gram matrix with its objective value and constraint residuals."""

    G: np.ndarray
    objective: float
    min_eig: float
    inequality_values: np.ndarray
    equality_residuals: np.ndarray

    @property
    def max_violation(self) -> float:
        worst = 0.0
        if self.inequality_values.size:
            worst = max(worst, float(np.maximum(0.0, -self.inequality_values).max()))
        if self.equality_residuals.size:
            worst = max(worst, float(np.abs(self.equality_residuals).max()))
        return worst

    def feasible(self, tol: float = 1e-9) -> bool:
        return self.min_eig >= -tol and self.max_violation <= tol

    def to_json(self) -> dict:
        return {
            "objective": self.objective,
            "min_eig": self.min_eig,
            "max_violation": self.max_violation,
            "inequality_values": self.inequality_values.tolist(),
            "equality_residuals": self.equality_residuals.tolist(),
            "G": self.G.tolist(),
        }


def verify_point(prob: GramProblem, G) -> FeasiblePoint:
    G = numerics.as_matrix(G, square=True)
    w = numerics.sym_eigs(0.5 * (G + G.T))
    return FeasiblePoint(
        G=G,
        objective=prob.objective_value(G),
        min_eig=float(w[0]) if w.size else 0.0,
        inequality_values=prob.inequality_values(G),
        equality_residuals=prob.equality_residuals(G),
    )


# ---------------------------------------------------------------------------
# Expansiveness problem for the two-stepsize extrapolated update
# ---------------------------------------------------------------------------

_EXP_BASIS = ("x", "y", "xF1", "yF1", "xF2", "yF2")


def build_expansiveness_matrices(ell: float, gamma1: float, gamma2: float) -> GramProblem:
    """The six-point expansiveness SDP with hand-coded constraint matrices.

    Basis order (x, y, xF1, yF1, xF2, yF2); objective is the squared
    expansion of the update, six interpolation inequalities, and the unit
    separation equality.
    """
    if min(ell, gamma1, gamma2) <= 0.0:
        raise BadParameters("ell, gamma1, gamma2 must be positive")
    l, g, g2 = ell, gamma1, gamma2

    M0 = np.zeros((6, 6))
    M0[0, 0] = M0[1, 1] = 1.0
    M0[0, 1] = M0[1, 0] = -1.0
    M0[0, 4] = M0[4, 0] = -g2
    M0[0, 5] = M0[5, 0] = g2
    M0[1, 4] = M0[4, 1] = g2
    M0[1, 5] = M0[5, 1] = -g2
    M0[4, 4] = M0[5, 5] = g2 * g2
    M0[4, 5] = M0[5, 4] = -g2 * g2

    M1 = np.zeros((6, 6))
    M1[2, 2] = l * g - 1.0
    M1[2, 4] = M1[4, 2] = 1.0 - l * g / 2.0
    M1[4, 4] = -1.0

    M2 = np.zeros((6, 6))
    M2[0, 2] = M2[2, 0] = l / 2.0
    M2[0, 3] = M2[3, 0] = -l / 2.0
    M2[1, 2] = M2[2, 1] = -l / 2.0
    M2[1, 3] = M2[3, 1] = l / 2.0
    M2[2, 2] = M2[3, 3] = -1.0
    M2[2, 3] = M2[3, 2] = 1.0

    M3 = np.zeros((6, 6))
    M3[0, 2] = M3[2, 0] = l / 2.0
    M3[0, 5] = M3[5, 0] = -l / 2.0
    M3[1, 2] = M3[2, 1] = -l / 2.0
    M3[1, 5] = M3[5, 1] = l / 2.0
    M3[2, 2] = -1.0
    M3[2, 3] = M3[3, 2] = l * g / 2.0
    M3[2, 5] = M3[5, 2] = 1.0
    M3[3, 5] = M3[5, 3] = -l * g / 2.0
    M3[5, 5] = -1.0

    M4 = np.zeros((6, 6))
    M4[0, 3] = M4[3, 0] = -l / 2.0
    M4[0, 4] = M4[4, 0] = l / 2.0
    M4[1, 3] = M4[3, 1] = l / 2.0
    M4[1, 4] = M4[4, 1] = -l / 2.0
    M4[2, 3] = M4[3, 2] = l * g / 2.0
    M4[2, 4] = M4[4, 2] = -l * g / 2.0
    M4[3, 3] = M4[4, 4] = -1.0
    M4[3, 4] = M4[4, 3] = 1.0

    M5 = np.zeros((6, 6))
    M5[0, 4] = M5[4, 0] = l / 2.0
    M5[0, 5] = M5[5, 0] = -l / 2.0
    M5[1, 4] = M5[4, 1] = -l / 2.0
    M5[1, 5] = M5[5, 1] = l / 2.0
    M5[2, 4] = M5[4, 2] = -l * g / 2.0
    M5[2, 5] = M5[5, 2] = l * g / 2.0
    M5[3, 4] = M5[4, 3] = l * g / 2.0
    M5[3, 5] = M5[5, 3] = -l * g / 2.0
    M5[4, 4] = M5[5, 5] = -1.0
    M5[4, 5] = M5[5, 4] = 1.0

    M6 = np.zeros((6, 6))
    M6[3, 3] = l * g - 1.0
    M6[3, 5] = M6[5, 3] = 1.0 - l * g / 2.0
    M6[5, 5] = -1.0

    M7 = np.zeros((6, 6))
    M7[0, 0] = M7[1, 1] = 1.0
    M7[0, 1] = M7[1, 0] = -1.0

    names = ("x|x_mid", "x|y", "x|y_mid", "x_mid|y", "x_mid|y_mid", "y|y_mid")
    return GramProblem(
        name="eg-expansiveness",
        basis=_EXP_BASIS,
        objective=M0,
        inequalities=tuple((nm, M, 0.0) for nm, M in zip(names, (M1, M2, M3, M4, M5, M6))),
        equalities=(("unit-separation", M7, 1.0),),
        metadata={"ell": ell, "gamma1": gamma1, "gamma2": gamma2,
                  "logdet_delta": 1e-6},
        interior=_expansiveness_interior(ell, gamma1),
    )


def expansiveness_from_interpolation(ell: float, gamma1: float, gamma2: float) -> GramProblem:
    """Same problem assembled symbolically from the pairwise interpolation
    inequalities; the independent cross-check for the hand-coded matrices."""
    e = basis_exprs(_EXP_BASIS)
    x, y, xf1, yf1, xf2, yf2 = (e[k] for k in _EXP_BASIS)
    points = [
        ("x", x, xf1),
        ("y", y, yf1),
        ("x_mid", x - gamma1 * xf1, xf2),
        ("y_mid", y - gamma1 * yf1, yf2),
    ]
    ineqs = []
    order = [(0, 2), (0, 1), (0, 3), (2, 1), (2, 3), (1, 3)]
    for i, j in order:
        li, pi, vi = points[i]
        lj, pj, vj = points[j]
        dv = vi - vj
        dp = pi - pj
        slack = ell * inner_matrix(dv, dp) - sq_matrix(dv)
        ineqs.append((f"{li}|{lj}", slack, 0.0))
    objective = sq_matrix(x - gamma2 * xf2 - y + gamma2 * yf2)
    return GramProblem(
        name="eg-expansiveness",
        basis=_EXP_BASIS,
        objective=objective,
        inequalities=tuple(ineqs),
        equalities=(("unit-separation", sq_matrix(x - y), 1.0),),
        metadata={"ell": ell, "gamma1": gamma1, "gamma2": gamma2,
                  "logdet_delta": 1e-6},
        interior=_expansiveness_interior(ell, gamma1),
    )


def _expansiveness_interior(ell: float, gamma1: float) -> np.ndarray:
    """Strictly feasible Gram point from the concrete map F = (ell/2) * Id."""
    c = ell / 2.0
    x = np.array([-0.5, 0.0])
    y = np.array([0.5, 0.0])
    vecs = [x, y, c * x, c * y, c * (1.0 - gamma1 * c) * x, c * (1.0 - gamma1 * c) * y]
    U = np.array(vecs)
    return U @ U.T


def counterexample_vectors(inst) -> dict[str, np.ndarray]:
    """Label the six explicit vectors of an expansive instance by the basis."""
    return {
        "x": inst.x, "y": inst.y, "xF1": inst.x_f1, "yF1": inst.y_f1,
        "xF2": inst.x_f2, "yF2": inst.y_f2,
    }


# ---------------------------------------------------------------------------
# Norm-decay worst-case problems for the two-stepsize update
# ---------------------------------------------------------------------------

def build_norm_pep(L: float, gamma1: float, gamma2: float, K: int,
                   operator_class: str = "monotone-lipschitz",
                   objective: str = "last-norm",
                   distance_as_equality: bool = True) -> GramProblem:
    """Worst-case ||F(x^K)||^2 after K two-stepsize extrapolated steps.

    Gram basis {x0 - xstar} + {F(x^k)} + {F(xt^k)} with xt^k the extrapolated
    point of step k; pairwise interpolation constraints over all points
    including the solution; ||x0 - xstar||^2 = 1 (the scale-extremal form;
    set ``distance_as_equality=False`` for the <= 1 relaxation).
    """
    if K < 1:
        raise BadParameters("K must be at least 1")
    if min(L, gamma1, gamma2) <= 0.0:
        raise BadParameters("L, gamma1, gamma2 must be positive")
    if operator_class not in ("monotone-lipschitz", "cocoercive"):
        raise BadParameters(f"unknown operator class {operator_class!r}")
    labels = ["dx0"] + [f"Fx{k}" for k in range(K + 1)] + [f"Fxt{k}" for k in range(K + 1)]
    e = basis_exprs(labels)
    zero = zero_expr(labels)

    pos_x = []  # x^k - xstar as expressions
    cur = e["dx0"]
    for k in range(K + 1):
        pos_x.append(cur)
        cur = cur - gamma2 * e[f"Fxt{k}"]
    points = [("xstar", zero, zero)]
    for k in range(K + 1):
        points.append((f"x{k}", pos_x[k], e[f"Fx{k}"]))
    for k in range(K + 1):
        points.append((f"xt{k}", pos_x[k] - gamma1 * e[f"Fx{k}"], e[f"Fxt{k}"]))

    ineqs = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            li, pi, vi = points[i]
            lj, pj, vj = points[j]
            dv = vi - vj
            dp = pi - pj
            if operator_class == "monotone-lipschitz":
                ineqs.append((f"mono:{li}|{lj}", inner_matrix(dv, dp), 0.0))
                ineqs.append((f"lip:{li}|{lj}",
                              L ** 2 * sq_matrix(dp) - sq_matrix(dv), 0.0))
            else:
                ineqs.append((f"coco:{li}|{lj}",
                              L * inner_matrix(dv, dp) - sq_matrix(dv), 0.0))

    if objective == "last-norm":
        obj = sq_matrix(e[f"Fx{K}"])
    elif objective == "delta-f":
        obj = sq_matrix(e["Fx1"]) - sq_matrix(e["Fx0"])
    elif objective == "delta-composite":
        obj = sq_matrix(e["Fxt1"]) - sq_matrix(e["Fxt0"])
    else:
        raise BadParameters(f"unknown objective {objective!r}")

    dist = sq_matrix(e["dx0"])
    if distance_as_equality:
        eqs = (("unit-start", dist, 1.0),)
    else:
        ineqs.append(("start-in-ball", -dist, -1.0))
        eqs = ()

    return GramProblem(
        name=f"eg-norm-pep-K{K}" if objective == "last-norm" else f"eg-{objective}",
        basis=tuple(labels),
        objective=obj,
        inequalities=tuple(ineqs),
        equalities=eqs,
        metadata={"L": L, "gamma1": gamma1, "gamma2": gamma2, "K": K,
                  "operator_class": operator_class, "objective": objective,
                  "logdet_delta": 1e-6},
        interior=_norm_pep_interior(L, gamma1, gamma2, K, labels)
        if distance_as_equality else None,
    )


def build_delta_pep(L: float, gamma1: float, gamma2: float,
                    operator_class: str = "monotone-lipschitz",
                    measure: str = "f") -> GramProblem:
    """One-step norm-change problem: worst case of ||F(x^1)||^2 - ||F(x^0)||^2
    (measure 'f') or of the composite-update norms (measure 'f-eg')."""
    objective = "delta-f" if measure == "f" else "delta-composite"
    prob = build_norm_pep(L, gamma1, gamma2, K=1, operator_class=operator_class,
                          objective=objective)
    meta = dict(prob.metadata)
    # certificate weights observed to reproduce the norm non-increase proof
    meta["certificate_weights"] = (2.0, 0.5, 1.5)
    return GramProblem(prob.name, prob.basis, prob.objective, prob.inequalities,
                       prob.equalities, meta, prob.interior)


def _norm_pep_interior(L, gamma1, gamma2, K, labels):
    """Feasible Gram point from a 1-d run of F = c*Id, c chosen so all points
    stay distinct (strict interpolation slacks)."""
    for c in (L / 2.0, L / 3.0, 2.0 * L / 5.0, L / 7.0):
        xs = [1.0]
        for _ in range(K):
            xs.append(xs[-1] * (1.0 - gamma2 * c * (1.0 - gamma1 * c)))
        pts = [0.0] + xs + [(1.0 - gamma1 * c) * x for x in xs]
        spread = sorted(pts)
        min_gap = min(b - a for a, b in zip(spread, spread[1:]))
        if min_gap > 1e-6:
            vec = {"dx0": 1.0}
            for k, x in enumerate(xs):
                vec[f"Fx{k}"] = c * x
                vec[f"Fxt{k}"] = c * (1.0 - gamma1 * c) * x
            u = np.array([vec[lab] for lab in labels])
            return np.outer(u, u)
    return None


# ---------------------------------------------------------------------------
# Embedding concrete vectors and recovering points from Gram matrices
# ---------------------------------------------------------------------------

def embed_points(prob: GramProblem, vectors: dict[str, np.ndarray]) -> FeasiblePoint:
    """Gram matrix of labeled concrete vectors, with residuals against the
    problem's constraints."""
    if set(vectors) != set(prob.basis):
        missing = set(prob.basis) - set(vectors)
        extra = set(vectors) - set(prob.basis)
        raise LabelMismatch(f"missing labels {sorted(missing)}, extra {sorted(extra)}")
    U = np.array([numerics.as_vector(vectors[lab]) for lab in prob.basis])
    return verify_point(prob, U @ U.T)


def gram_to_points(G, clip_rel: float = 1e-9, psd_tol: float = 1e-9) -> list[np.ndarray]:
    """Factor a PSD matrix into vectors of dimension rank(G); negative
    eigenvalues within ``psd_tol`` are clipped, below it :class:`NotPSD`."""
    G = numerics.as_matrix(G, square=True)
    w, V = numerics.sym_eig(0.5 * (G + G.T))
    if w.size and w[0] < -psd_tol:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e}")
    clip = clip_rel * max(float(np.trace(G)), 0.0)
    keep = w > clip
    scale = np.sqrt(w[keep])
    U = V[:, keep] * scale
    return [U[i].copy() for i in range(G.shape[0])]


# ---------------------------------------------------------------------------
# Low-rank feasible-point search (certified lower bounds)
# ---------------------------------------------------------------------------

def lower_bound_search(prob: GramProblem, rank: int = 6, restarts: int = 32,
                       seed: int = 0, ascent_steps: int = 5000, rounds: int = 5,
                       penalty0: float = 10.0, penalty_growth: float = 10.0,
                       init_scale: float = 4.0, tol: float = 1e-9) -> FeasiblePoint:
    """Maximize the objective over feasible Gram matrices via G = V^T V.

    Batched gradient ascent with augmented-Lagrangian penalties, one V per
    restart; starts are drawn at ``init_scale`` times the equality's natural
    scale, which keeps the low-rank iterates clear of the degenerate rank-one
    critical point at the equality's own Gram matrix.  Every candidate is
    repaired (exact rescaling onto the homogeneous equality, then a minimal
    mix toward the stored interior point) and re-verified; the best verified
    objective is a certified lower bound on the problem value.  Deterministic
    for a fixed seed.
    """
    if rank < 1 or restarts < 1:
        raise BadParameters("rank and restarts must be at least 1")
    n = prob.n
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((restarts, rank, n))

    Mi = np.array([m for _, m, _ in prob.inequalities]).reshape(-1, n, n)
    ri = np.array([rhs for _, _, rhs in prob.inequalities])
    Me = np.array([m for _, m, _ in prob.equalities]).reshape(-1, n, n)
    re = np.array([rhs for _, _, rhs in prob.equalities])
    M0 = prob.objective

    G = np.einsum("bri,brj->bij", V, V)
    if Me.shape[0]:
        t0 = np.einsum("bij,ij->b", G, Me[0])
        target = re[0] if re[0] > 0 else 1.0
        V *= (init_scale * np.sqrt(target / np.maximum(np.abs(t0), 1e-12)))[:, None, None]

    lam_i = np.zeros((restarts, Mi.shape[0]))
    lam_e = np.zeros((restarts, Me.shape[0]))

    for rnd in range(rounds):
        mu = penalty0 * penalty_growth**rnd
        for it in range(ascent_steps):
            G = np.einsum("bri,brj->bij", V, V)
            ti = np.einsum("bij,qij->bq", G, Mi) - ri
            te = np.einsum("bij,qij->bq", G, Me) - re
            wi = np.maximum(0.0, lam_i - mu * ti)
            comb = M0 + np.einsum("bq,qij->bij", wi, Mi) \
                - np.einsum("bq,qij->bij", lam_e + mu * te, Me)
            grad = 2.0 * np.matmul(V, comb)
            gn = np.sqrt(np.einsum("bri,bri->b", grad, grad))
            vn = np.sqrt(np.einsum("bri,bri->b", V, V))
            step = 0.1 * vn / (gn + 1e-30) / (1.0 + it / 50.0)
            V = V + step[:, None, None] * grad
        G = np.einsum("bri,brj->bij", V, V)
        lam_i = np.maximum(0.0, lam_i - mu * (np.einsum("bij,qij->bq", G, Mi) - ri))
        lam_e = lam_e + mu * (np.einsum("bij,qij->bq", G, Me) - re)

    best: FeasiblePoint | None = None
    for b in range(restarts):
        point = _repair_and_verify(prob, G[b], tol)
        if point is None:
            continue
        if best is None or point.objective > best.objective:
            best = point
    if best is None:
        raise NoFeasiblePointFound(
            f"no restart produced a feasible point within tolerance {tol}")
    return best


def _repair_and_verify(prob: GramProblem, G: np.ndarray, tol: float) -> FeasiblePoint | None:
    G = 0.5 * (G + G.T)
    homogeneous = all(rhs == 0.0 for _, _, rhs in prob.inequalities)
    if homogeneous and len(prob.equalities) == 1 and prob.equalities[0][2] > 0:
        _, Meq, rhs = prob.equalities[0]
        t = float(np.sum(Meq * G))
        if t <= 1e-12:
            return None
        G = G * (rhs / t)
    if prob.interior is not None and homogeneous:
        vals = prob.inequality_values(G)
        violation = float(np.maximum(0.0, -vals).max(initial=0.0))
        if violation > 0.0:
            s_int = prob.inequality_values(prob.interior)
            s_min = float(s_int.min(initial=np.inf))
            if s_min > 0.0:
                theta = min(1.0, 1.02 * violation / (violation + s_min))
                for _ in range(4):
                    cand = (1.0 - theta) * G + theta * prob.interior
                    if prob.inequality_values(cand).min(initial=0.0) >= 0.0:
                        G = cand
                        break
                    theta = min(1.0, 2.0 * theta)
                else:
                    return None
    point = verify_point(prob, G)
    return point if point.feasible(tol) else None


# ---------------------------------------------------------------------------
# SDPA sparse export and re-parse
# ---------------------------------------------------------------------------

def export_sdpa(prob: GramProblem, path) -> None:
    """Write SDPA sparse format: block 1 is the Gram block, block 2 a diagonal
    slack block (one entry per inequality, absent when there are none).

    Constraint i reads Tr(M_i G) - s_i = rhs_i for inequalities, then the
    equalities follow with their right-hand sides; the dual of the exported
    problem maximizes Tr(M_0 G) over the same feasible set.
    """
    q = len(prob.inequalities)
    m = q + len(prob.equalities)
    n = prob.n
    lines = [f'"{prob.name}"', str(m), "2" if q else "1",
             f"{n} -{q}" if q else f"{n}"]
    rhs = [rhs for _, _, rhs in prob.inequalities] + [rhs for _, _, rhs in prob.equalities]
    lines.append(" ".join(_fmt17(v) for v in rhs))

    def emit(matno: int, blk: int, mat_or_entries):
        if blk == 1:
            mat = mat_or_entries
            for i in range(n):
                for j in range(i, n):
                    if mat[i, j] != 0.0:
                        lines.append(f"{matno} 1 {i + 1} {j + 1} {_fmt17(mat[i, j])}")
        else:
            i, val = mat_or_entries
            lines.append(f"{matno} 2 {i + 1} {i + 1} {_fmt17(val)}")

    emit(0, 1, prob.objective)
    for idx, (_, mat, _) in enumerate(prob.inequalities):
        emit(idx + 1, 1, mat)
        emit(idx + 1, 2, (idx, -1.0))
    for jdx, (_, mat, _) in enumerate(prob.equalities):
        emit(q + jdx + 1, 1, mat)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_sdpa(path) -> dict:
    """Re-read an exported file; returns the constraint count, block sizes,
    right-hand sides, and dense per-block matrices keyed by matrix number."""
    with open(path) as fh:
        raw = [ln.strip() for ln in fh if ln.strip()]
    idx = 0
    name = None
    if raw[idx].startswith('"') or raw[idx].startswith("*"):
        name = raw[idx].strip('"')
        idx += 1
    m = int(raw[idx]); idx += 1
    nblocks = int(raw[idx]); idx += 1
    sizes = [int(tok) for tok in raw[idx].split()]; idx += 1
    if len(sizes) != nblocks:
        raise BadParameters("block size line does not match block count")
    rhs = np.array([float(tok) for tok in raw[idx].split()]); idx += 1
    blocks = {}
    for mk in range(m + 1):
        blocks[mk] = [np.zeros((abs(s), abs(s))) for s in sizes]
    for ln in raw[idx:]:
        mk, blk, i, j, val = ln.split()
        mk, blk, i, j = int(mk), int(blk), int(i), int(j)
        val = float(val)
        blocks[mk][blk - 1][i - 1, j - 1] = val
        blocks[mk][blk - 1][j - 1, i - 1] = val
    return {"name": name, "m": m, "block_sizes": sizes, "rhs": rhs, "blocks": blocks}


def _fmt17(x: float) -> str:
    return f"{float(x):.17g}"
