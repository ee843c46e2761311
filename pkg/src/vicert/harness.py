"""Bound checks for every convergence guarantee, a fixed operator suite,
and deterministic machine-readable reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import BadParameters, PreconditionViolated
from .operators import (
    Affine,
    LogisticGrad,
    Operator,
    bilinear_game,
    eg_operator,
    pp_operator,
    rotation,
    scaled_identity,
)
from .solvers import SolverConfig, Trace, average_sq_norm, run

_SQRT2 = float(np.sqrt(2.0))
_SQRT10 = float(np.sqrt(10.0))


@dataclass
class BoundCheck:
    """Observed-versus-bound rows for one guarantee along a run.

    ``passed`` is None when the run sits outside the guaranteed stepsize
    regime and the margins are reported without being asserted.
    """

    check_id: str
    params: dict
    ks: np.ndarray
    observed: np.ndarray
    bound: np.ndarray
    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    guaranteed: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def margins(self) -> np.ndarray:
        return self.bound - self.observed

    @property
    def worst_margin(self) -> float:
        return float(self.margins.min())

    @property
    def passed(self) -> bool | None:
        if not self.guaranteed:
            return None
        allow = self.rel_tol * np.abs(self.bound) + self.abs_tol
        return bool(np.all(self.margins >= -allow))

    def to_json(self) -> dict:
        worst = int(np.argmin(self.margins))
        return {
            "id": self.check_id,
            "params": _jsonable(self.params),
            "rows": len(self.ks),
            "final_observed": float(self.observed[-1]),
            "final_bound": float(self.bound[-1]),
            "worst_k": int(self.ks[worst]),
            "observed": float(self.observed[worst]),
            "bound": float(self.bound[worst]),
            "margin": self.worst_margin,
            "pass": self.passed,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _resolve_root(op: Operator, x_star) -> np.ndarray:
    if x_star is not None:
        return numerics.as_vector(x_star)
    root = op.root()
    if root is None:
        raise PreconditionViolated("this check needs a known solution point")
    return root


def _running_average(values: np.ndarray) -> np.ndarray:
    return np.cumsum(values) / np.arange(1, values.size + 1)


# ---------------------------------------------------------------------------
# Individual bound checks
# ---------------------------------------------------------------------------

def check_gd_bounds(op: Operator, ell: float, gamma: float, iters: int, x0,
                    x_star=None) -> tuple[BoundCheck, BoundCheck]:
    """Averaged and last-iterate residual bounds for plain gradient steps on a
    cocoercive operator: both are ell*||x0-x*||^2 / (gamma*(K+1))."""
    if ell <= 0.0 or not 0.0 < gamma <= 1.0 / ell + 1e-12:
        raise PreconditionViolated("need 0 < gamma <= 1/ell")
    star = _resolve_root(op, x_star)
    x0 = numerics.as_vector(x0)
    trace = run(op, SolverConfig("gd", gamma=gamma, iters=iters, x0=x0), x_star=star)
    ks = np.arange(len(trace))
    d0 = float(np.sum((x0 - star) ** 2))
    bound = ell * d0 / (gamma * (ks + 1.0))
    params = {"ell": ell, "gamma": gamma, "iters": iters}
    avg = BoundCheck("gd-average", params, ks, _running_average(trace.fx_sq), bound)
    last = BoundCheck("gd-last", params, ks, trace.fx_sq, bound)
    return avg, last


def check_pp_bound(op: Operator, ell: float, gamma: float, iters: int, x0,
                   x_star=None) -> BoundCheck:
    """Residual bound for explicit steps on the implicit-step composite with
    inner stepsize 2/ell: averaged (and last) value of ||F_pp(x^k)||^2 stays
    below ell*||x0-x*||^2 / (gamma*(K+1))."""
    if ell <= 0.0 or not 0.0 < gamma <= 1.0 / ell + 1e-12:
        raise PreconditionViolated("need 0 < gamma <= 1/ell")
    star = _resolve_root(op, x_star)
    x0 = numerics.as_vector(x0)
    composite = pp_operator(op, 2.0 / ell)
    trace = run(composite, SolverConfig("gd", gamma=gamma, iters=iters, x0=x0),
                x_star=star)
    ks = np.arange(len(trace))
    d0 = float(np.sum((x0 - star) ** 2))
    bound = ell * d0 / (gamma * (ks + 1.0))
    check = BoundCheck("pp-average", {"ell": ell, "gamma": gamma, "iters": iters},
                       ks, _running_average(trace.fx_sq), bound)
    check.extras["last_resolved_sq"] = float(trace.fx_sq[-1])
    check.extras["last_bound"] = float(bound[-1])
    return check


def check_eg_random_bound(op: Operator, L: float, gamma1: float, gamma2: float,
                          iters: int, x0, x_star=None) -> BoundCheck:
    """Averaged residual of the extrapolated update under the two-stepsize
    scheme: bound 2*||x0-x*||^2 / (gamma1*gamma2*(K+1))."""
    if L <= 0.0 or not 0.0 < gamma1 <= 1.0 / L + 1e-12:
        raise PreconditionViolated("need 0 < gamma1 <= 1/L")
    if not 0.0 < gamma2 <= gamma1 / 2.0 + 1e-12:
        raise PreconditionViolated("need 0 < gamma2 <= gamma1/2")
    star = _resolve_root(op, x_star)
    x0 = numerics.as_vector(x0)
    composite = eg_operator(op, gamma1)
    trace = run(composite, SolverConfig("gd", gamma=gamma2, iters=iters, x0=x0),
                x_star=star)
    ks = np.arange(len(trace))
    d0 = float(np.sum((x0 - star) ** 2))
    bound = 2.0 * d0 / (gamma1 * gamma2 * (ks + 1.0))
    return BoundCheck("eg-random", {"L": L, "gamma1": gamma1, "gamma2": gamma2,
                                    "iters": iters},
                      ks, _running_average(trace.fx_sq), bound)


def check_eg_last_bounds(op: Operator, L: float, gamma: float, iters: int, x0,
                         x_star=None) -> tuple[BoundCheck, BoundCheck]:
    """Last-iterate residual and gap-surrogate bounds for the extragradient
    method.

    Guaranteed regime is gamma <= 1/(sqrt(2)*L); for gamma in
    (1/(sqrt(2)L), 1/L] the margins are reported but not asserted.  The
    reference curve 16*L^2*||x0-x*||^2/k rides along in the extras.
    """
    if L <= 0.0 or not 0.0 < gamma <= 1.0 / L + 1e-12:
        raise PreconditionViolated("need 0 < gamma <= 1/L")
    guaranteed = gamma <= 1.0 / (_SQRT2 * L) + 1e-12
    star = _resolve_root(op, x_star)
    x0 = numerics.as_vector(x0)
    trace = run(op, SolverConfig("eg", gamma=gamma, iters=iters, x0=x0), x_star=star)
    ks = np.arange(len(trace))
    d0 = float(np.sum((x0 - star) ** 2))
    denom = gamma**2 * (1.0 - L**2 * gamma**2)
    params = {"L": L, "gamma": gamma, "iters": iters}
    norm_bound = d0 / (denom * (ks + 1.0))
    norm_check = BoundCheck("eg-last", params, ks, trace.fx_sq, norm_bound,
                            guaranteed=guaranteed)
    norm_check.extras["reference_bound"] = (
        16.0 * L**2 * d0 / np.maximum(ks, 1.0)).tolist()
    gap_surrogate = 2.0 * np.sqrt(trace.fx_sq) * np.sqrt(d0)
    gap_bound = 2.0 * d0 / (gamma * np.sqrt(1.0 - L**2 * gamma**2) * np.sqrt(ks + 1.0))
    gap_check = BoundCheck("eg-gap", params, ks, gap_surrogate, gap_bound,
                           guaranteed=guaranteed)
    return norm_check, gap_check


def check_eftp_bound(op: Operator, L: float, gamma: float, iters: int, x0,
                     x_star=None) -> BoundCheck:
    """Averaged residual over the auxiliary sequence of the past-extrapolation
    method: bound ||x0-x*||^2 / (gamma^2*(1-10*gamma^2*L^2)*(K+1))."""
    if L <= 0.0 or not 0.0 < gamma < 1.0 / (_SQRT10 * L):
        raise PreconditionViolated("need 0 < gamma < 1/(sqrt(10)*L)")
    star = _resolve_root(op, x_star)
    x0 = numerics.as_vector(x0)
    trace = run(op, SolverConfig("eftp", gamma=gamma, iters=iters, x0=x0), x_star=star)
    ks = np.arange(len(trace))
    d0 = float(np.sum((x0 - star) ** 2))
    denom = gamma**2 * (1.0 - 10.0 * gamma**2 * L**2)
    bound = d0 / (denom * (ks + 1.0))
    observed = _running_average(trace.extras["tilde_sq"])
    return BoundCheck("eftp-random", {"L": L, "gamma": gamma, "iters": iters},
                      ks, observed, bound)


def check_hgm_bounds(op: Operator, L: float, jac_lipschitz: float, gamma: float,
                     iters: int, x0) -> tuple[BoundCheck, BoundCheck]:
    """Best-iterate bound on the residual-energy gradient and the residual
    norm monotonicity of the energy-descent method."""
    x0 = numerics.as_vector(x0)
    f0 = float(np.sqrt(np.sum(np.asarray(op(x0)) ** 2)))
    cap = L**2 + jac_lipschitz * f0
    if not 0.0 < gamma <= 2.0 / cap + 1e-12:
        raise PreconditionViolated("need 0 < gamma <= 2/(L^2 + Lambda*||F(x0)||)")
    trace = run(op, SolverConfig("hgm", gamma=gamma, iters=iters, x0=x0))
    ks = np.arange(len(trace))
    best = np.minimum.accumulate(trace.extras["grad_h_sq"])
    bound = f0**2 / (gamma * (2.0 - gamma * cap) * (ks + 1.0))
    params = {"L": L, "Lambda": jac_lipschitz, "gamma": gamma, "iters": iters}
    best_check = BoundCheck("hgm-best", params, ks, best, bound)
    norms = np.sqrt(trace.fx_sq)
    mono = BoundCheck("hgm-monotone", params, ks[1:], norms[1:], norms[:-1],
                      rel_tol=0.0, abs_tol=1e-12)
    return best_check, mono


def check_hgm_affine_contraction(op: Affine, iters: int, x0) -> BoundCheck:
    """Per-step distance contraction of the energy-descent method on an affine
    operator at stepsize 1/sigma_max^2, with factor (1-kappa)/(1+kappa)."""
    if not isinstance(op, Affine):
        raise BadParameters("affine contraction check needs an affine operator")
    x0 = numerics.as_vector(x0)
    A = op.matrix
    svals = numerics.singular_values(A)
    nonzero = svals[svals > 1e-12 * max(svals.max(initial=0.0), 1.0)]
    if nonzero.size == 0:
        raise BadParameters("zero matrix has no contraction factor")
    smax2 = float(nonzero.max() ** 2)
    smin2 = float(nonzero.min() ** 2)
    kappa = smin2 / smax2
    rho = (1.0 - kappa) / (1.0 + kappa)
    gamma = 1.0 / smax2
    # projection of the start onto the least-squares solution set; the
    # null-space component of the iterates never moves
    S = A.T @ A
    grad0 = S @ x0 + A.T @ op.offset
    x_star = x0 - numerics.sym_pseudo_solve(S, grad0, rtol=1e-10)
    trace = run(op, SolverConfig("hgm", gamma=gamma, iters=iters, x0=x0),
                x_star=x_star)
    ks = np.arange(len(trace) - 1)
    observed = trace.dist_sq[1:]
    bound = rho * trace.dist_sq[:-1]
    check = BoundCheck("hgm-affine-contraction",
                       {"gamma": gamma, "kappa": kappa, "rho": rho, "iters": iters},
                       ks, observed, bound, rel_tol=1e-12, abs_tol=1e-12)
    return check


# ---------------------------------------------------------------------------
# Norm-increase search across stepsize regimes
# ---------------------------------------------------------------------------

def check_eg_norm_violation_regimes(seed: int = 0, num_ops: int = 12,
                                    num_starts: int = 8,
                                    gamma1_fracs=(0.25, 0.5, 1.0),
                                    gamma2_fracs=(0.25, 0.5, 1.0)) -> dict:
    """Search cocoercive affine instances for one-step norm increases.

    Looks for (a) increases of the composite-update residual with matched
    stepsizes, (b) increases of the plain residual with gamma2 < gamma1.
    Search-based: found instances are reported as witnesses, absence is not
    asserted.
    """
    rng = np.random.default_rng(seed)
    ops: list[tuple[str, Affine, float]] = []
    for i in range(num_ops):
        if i % 3 == 0:
            # boundary-cocoercive rotation-scaling block
            ell = float(rng.uniform(0.5, 4.0))
            a = ell / 2.0
            A = np.array([[a, a], [-a, a]])
            ops.append((f"boundary-{i}", Affine(A), ell))
        else:
            d = int(rng.integers(2, 5))
            M = rng.standard_normal((d, d))
            S = M @ M.T / d + 0.2 * np.eye(d)
            ops.append((f"spd-{i}", Affine(S), float(np.linalg.eigvalsh(S).max())))
    composite_witnesses = []
    plain_witnesses = []
    searched = 0
    for name, op, ell in ops:
        for f1 in gamma1_fracs:
            g1 = f1 / ell
            comp = eg_operator(op, g1)
            for f2 in gamma2_fracs:
                g2 = f2 * g1
                for _ in range(num_starts):
                    x0 = rng.standard_normal(op.dim)
                    searched += 1
                    x1 = x0 - g2 * comp(x0)
                    c0 = float(np.sum(comp(x0) ** 2))
                    c1 = float(np.sum(comp(x1) ** 2))
                    if c1 > c0 + 1e-12:
                        composite_witnesses.append(
                            {"op": name, "ell": ell, "gamma1": g1, "gamma2": g2,
                             "x0": x0.tolist(), "increase": c1 - c0})
                    if g2 < g1:
                        p0 = float(np.sum(op(x0) ** 2))
                        p1 = float(np.sum(op(x1) ** 2))
                        if p1 > p0 + 1e-12:
                            plain_witnesses.append(
                                {"op": name, "ell": ell, "gamma1": g1, "gamma2": g2,
                                 "x0": x0.tolist(), "increase": p1 - p0})
    return {
        "seed": seed,
        "searched": searched,
        "composite_norm_increases": composite_witnesses,
        "plain_norm_increases": plain_witnesses,
    }


# ---------------------------------------------------------------------------
# Standard operator suite
# ---------------------------------------------------------------------------

@dataclass
class SuiteEntry:
    name: str
    op: Operator
    x0: np.ndarray
    x_star: np.ndarray | None
    L: float
    ell: float | None          # cocoercivity constant when the operator has one
    jac_lipschitz: float | None


def standard_suite(seed: int = 20240406) -> list[SuiteEntry]:
    """Fixed deterministic operator suite used by the full report."""
    rng = np.random.default_rng(seed)
    entries = [
        SuiteEntry("rotation", rotation(), np.array([1.0, 0.0]), np.zeros(2),
                   L=1.0, ell=None, jac_lipschitz=0.0),
        SuiteEntry("identity", scaled_identity(1.0, 3),
                   np.array([1.0, -2.0, 0.5]), np.zeros(3),
                   L=1.0, ell=1.0, jac_lipschitz=0.0),
        SuiteEntry("diag12", Affine(np.diag([1.0, 2.0]), kind="affine"),
                   np.array([1.0, 1.0]), np.zeros(2),
                   L=2.0, ell=2.0, jac_lipschitz=0.0),
    ]
    for d in (2, 10, 50):
        G = rng.standard_normal((d, d))
        shift = max(0.0, -float(numerics.sym_eigs(0.5 * (G + G.T))[0])) + 0.25
        A = G + shift * np.eye(d)
        x0 = rng.standard_normal(d)
        entries.append(SuiteEntry(f"monotone-{d}d", Affine(A), x0, np.zeros(d),
                                  L=numerics.spectral_norm(A), ell=None,
                                  jac_lipschitz=0.0))
    M = rng.standard_normal((5, 5))
    S = M @ M.T / 5.0 + 0.2 * np.eye(5)
    entries.append(SuiteEntry("spd-5d", Affine(S), rng.standard_normal(5),
                              np.zeros(5), L=float(numerics.sym_eigs(S)[-1]),
                              ell=float(numerics.sym_eigs(S)[-1]),
                              jac_lipschitz=0.0))
    B = rng.standard_normal((2, 2))
    entries.append(SuiteEntry("bilinear-4d", bilinear_game(B),
                              rng.standard_normal(4), np.zeros(4),
                              L=numerics.spectral_norm(B), ell=None,
                              jac_lipschitz=0.0))
    logistic = LogisticGrad(1.0, 0.01)
    entries.append(SuiteEntry("logistic", logistic, np.array([2.0]),
                              logistic.root(), L=0.26, ell=0.26,
                              jac_lipschitz=0.25))
    return entries


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------

def run_report(seed: int = 20240406, iters: int = 300) -> dict:
    """Run every applicable bound check on the standard suite.

    Deterministic for fixed (seed, iters); overall status is in ``all_pass``.
    """
    checks: list[BoundCheck] = []
    for entry in standard_suite(seed):
        op, L = entry.op, entry.L
        x0, star = entry.x0, entry.x_star
        fresh: list[BoundCheck] = []
        if entry.ell is not None:
            fresh.extend(check_gd_bounds(op, entry.ell, 1.0 / entry.ell, iters,
                                         x0, star))
        pp_ell = entry.ell if entry.ell is not None else max(1.0, 2.5 * L)
        if isinstance(op, Affine) or 2.0 * L / pp_ell < 1.0:
            fresh.append(check_pp_bound(op, pp_ell, 1.0 / pp_ell, iters, x0, star))
        fresh.append(check_eg_random_bound(op, L, 1.0 / L, 0.5 / L, iters, x0, star))
        fresh.extend(check_eg_last_bounds(op, L, 1.0 / (_SQRT2 * L), iters, x0, star))
        fresh.append(check_eftp_bound(op, L, 0.9 / (_SQRT10 * L), iters, x0, star))
        if entry.jac_lipschitz is not None:
            f0 = float(np.sqrt(np.sum(np.asarray(op(x0)) ** 2)))
            cap = L**2 + entry.jac_lipschitz * f0
            fresh.extend(check_hgm_bounds(op, L, entry.jac_lipschitz,
                                          1.0 / cap, iters, x0))
        if isinstance(op, Affine):
            fresh.append(check_hgm_affine_contraction(op, iters, x0))
        for check in fresh:
            check.params["op"] = entry.name
        checks.extend(fresh)
    return {
        "version": "0.1.0",
        "seed": seed,
        "iters": iters,
        "checks": [c.to_json() for c in checks],
        "violation_search": check_eg_norm_violation_regimes(seed=seed),
        "all_pass": all(c.passed is not False for c in checks),
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
