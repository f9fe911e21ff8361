"""Solvers for dY = f0(t, Y) dt + f(t, Y) dX driven by a level-2 rough path.

Two solvers share one contract: an explicit one-step scheme whose local model
matches the second-order expansion of the integral (the production path), and
a fixed-point iteration that mirrors the existence proof (slower, used as an
independent cross-check).  The fixed-point solver works window by window and
concatenates: a solution on [0, T] restricted to a subinterval solves the
equation restarted from the subinterval's left state.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .controlled import ControlledPath, FunctionModel, validate_function_model
from .errors import GridError, NumericalBlowup, ShapeError
from .grids import SampledPath
from .integrate import drift_integral_path
from .rough import RoughPath

__all__ = [
    "RDEProblem",
    "RDESolution",
    "solve_step_scheme",
    "solve_picard",
    "residual_check",
    "apriori_bound_check",
    "gbm_coefficients",
    "linear_drift_coefficients",
    "sine_diffusion_coefficients",
    "ou_coefficients",
    "make_preset_problem",
    "solution_to_json_dict",
    "save_solution_json",
    "PRESETS",
]


@dataclass
class RDEProblem:
    """Driver, coefficients and initial state; validated at construction."""

    driver: RoughPath
    drift: FunctionModel | None
    diffusion: FunctionModel | None
    xi: np.ndarray
    validate: bool = True

    def __post_init__(self):
        self.xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        p = self.xi.shape[0]
        d = self.driver.dim
        if self.drift is not None:
            if self.drift.dim_in != p or self.drift.out_shape != (p,):
                raise ShapeError("drift must map R^%d -> R^%d" % (p, p))
        if self.diffusion is not None:
            if self.diffusion.dim_in != p or self.diffusion.out_shape != (p, d):
                raise ShapeError("diffusion must map R^%d -> R^{%dx%d}" % (p, p, d))
            if self.diffusion.df is None:
                raise ShapeError("diffusion needs a declared spatial derivative")
        if self.validate:
            t_range = (float(self.driver.times[0]), float(self.driver.times[-1]))
            for fm in (self.drift, self.diffusion):
                if fm is not None:
                    validate_function_model(fm, t_range=t_range)

    @property
    def state_dim(self):
        return self.xi.shape[0]


@dataclass
class RDESolution:
    """Solution samples plus the coefficient-derivative field and diagnostics."""

    times: np.ndarray
    values: np.ndarray
    deriv: np.ndarray
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    def controlled(self):
        return ControlledPath(self.times, self.values, self.deriv)

    def terminal(self):
        return self.values[-1]


def _eval_coeffs(problem, t, y):
    p, d = problem.state_dim, problem.driver.dim
    f0 = problem.drift.eval(t, y) if problem.drift is not None else np.zeros(p)
    if problem.diffusion is not None:
        f = problem.diffusion.eval(t, y)
        df = problem.diffusion.jacobian(t, y)
    else:
        f = np.zeros((p, d))
        df = np.zeros((p, d, p))
    return f0, f, df


def _deriv_field(problem, times, values):
    p, d = problem.state_dim, problem.driver.dim
    out = np.zeros((times.shape[0], p, d))
    if problem.diffusion is not None:
        for k, (t, y) in enumerate(zip(times, values)):
            out[k] = problem.diffusion.eval(t, y)
    return out


def solve_step_scheme(problem):
    """Explicit one-pass scheme with the level-2 correction term:

    Y_{k+1} = Y_k + f0 dt + f dX + (second-order term contracted against the
    interval block).  On smooth drivers the block term makes the scheme
    second order; on Brownian drivers it is the classical strong-order-1
    correction.
    """
    R = problem.driver
    times = R.times
    n = R.n
    p = problem.state_dim
    y = np.array(problem.xi)
    values = np.empty((n + 1, p))
    values[0] = y
    for k in range(n):
        t = times[k]
        f0, f, df = _eval_coeffs(problem, t, y)
        dt = times[k + 1] - times[k]
        dx = R.values[k + 1] - R.values[k]
        y = y + f0 * dt + f @ dx + np.einsum("ibc,ca,ab->i", df, f, R.blocks[k])
        if not np.all(np.isfinite(y)):
            raise NumericalBlowup(
                "non-finite state at t=%g (step %d)" % (times[k + 1], k + 1),
                t=float(times[k + 1]),
                state=y,
                index=k + 1,
            )
        values[k + 1] = y
    deriv = _deriv_field(problem, times, values)
    return RDESolution(np.array(times), values, deriv, diagnostics={"method": "step"})


def _window_boundaries(times, window):
    bounds = [0]
    target = times[0] + window
    for k in range(1, times.shape[0]):
        if times[k] >= target - 1e-12:
            bounds.append(k)
            target = times[k] + window
    if bounds[-1] != times.shape[0] - 1:
        bounds.append(times.shape[0] - 1)
    return bounds


def _picard_window(problem, a, b, xi_w, max_iter, tol):
    """Fixed-point iteration on grid nodes a..b; returns (values, iters) or None."""
    R = problem.driver
    times = times_w = R.times[a : b + 1]
    nw = b - a
    p, d = problem.state_dim, R.dim
    blocks = R.blocks[a:b]
    dx = np.diff(R.values[a : b + 1], axis=0)
    dt = np.diff(times_w)

    Y = np.tile(xi_w, (nw + 1, 1))
    if problem.diffusion is not None:
        Yp = np.tile(problem.diffusion.eval(times_w[0], xi_w), (nw + 1, 1, 1))
    else:
        Yp = np.zeros((nw + 1, p, d))

    for it in range(1, max_iter + 1):
        if problem.drift is not None:
            f0 = np.stack([problem.drift.eval(t, y) for t, y in zip(times_w, Y)])
            gamma = np.zeros((nw + 1, p))
            np.cumsum(0.5 * (f0[:-1] + f0[1:]) * dt[:, None], axis=0, out=gamma[1:])
        else:
            gamma = np.zeros((nw + 1, p))
        if problem.diffusion is not None:
            F = np.stack([problem.diffusion.eval(t, y) for t, y in zip(times_w, Y)])
            J = np.stack([problem.diffusion.jacobian(t, y) for t, y in zip(times_w, Y)])
            T = np.einsum("kqbc,kca->kqab", J, Yp)
            cells = np.einsum("kqa,ka->kq", F[:-1], dx) + np.einsum(
                "kqab,kab->kq", T[:-1], blocks
            )
            psi = np.zeros((nw + 1, p))
            np.cumsum(cells, axis=0, out=psi[1:])
        else:
            F = np.zeros((nw + 1, p, d))
            psi = np.zeros((nw + 1, p))
        Ynew = xi_w + gamma + psi
        if not np.all(np.isfinite(Ynew)):
            raise NumericalBlowup(
                "fixed-point iterate blew up on window starting t=%g" % times[0],
                t=float(times[0]),
            )
        dist = float(np.max(np.linalg.norm(Ynew - Y, axis=1)))
        Y, Yp = Ynew, F
        if dist <= tol:
            return Y, it
    return None


def solve_picard(problem, window=None, max_iter=60, tol=1e-10, max_halvings=6):
    """Window-by-window fixed-point solver.

    Each window is iterated from the constant extension of its initial value
    (derivative anchored at the coefficient there).  A window that fails to
    contract within ``max_iter`` is halved, up to ``max_halvings`` times; if
    the smallest window still fails, the partial solution is returned with
    ``converged=False`` and the failure position in the diagnostics.
    """
    R = problem.driver
    times = R.times
    n = R.n
    if window is None:
        window = (times[-1] - times[0]) / 8.0
    if window <= 0:
        raise GridError("window length must be positive")
    bounds = _window_boundaries(times, window)
    p = problem.state_dim
    values = np.empty((n + 1, p))
    values[0] = problem.xi
    iters_per_window = []
    converged = True
    failed_at = None

    for a, b in zip(bounds[:-1], bounds[1:]):
        xi_w = values[a]
        segments = [(a, b)]
        halvings = 0
        while segments:
            lo, hi = segments.pop(0)
            result = _picard_window(problem, lo, hi, xi_w, max_iter, tol)
            if result is None:
                if hi - lo > 1 and halvings < max_halvings:
                    halvings += 1
                    mid = (lo + hi) // 2
                    segments = [(lo, mid), (mid, hi)] + segments
                    continue
                converged = False
                failed_at = float(times[lo])
                values[lo : n + 1] = xi_w
                break
            seg_values, it = result
            iters_per_window.append(it)
            values[lo : hi + 1] = seg_values
            xi_w = seg_values[-1]
        if not converged:
            break

    deriv = _deriv_field(problem, times, values)
    diag = {
        "method": "picard",
        "window": float(window),
        "tol": float(tol),
        "iterations": iters_per_window,
        "windows": len(bounds) - 1,
        "controlled_seminorm": _solution_seminorm(times, values, deriv, R),
    }
    if failed_at is not None:
        diag["failed_at"] = failed_at
    return RDESolution(np.array(times), values, deriv, converged=converged, diagnostics=diag)


def _solution_seminorm(times, values, deriv, R, alpha=0.4):
    """Controlled seminorm of the solution pair at a diagnostic exponent."""
    from .controlled import ControlledPath, controlled_seminorm

    path = SampledPath(R.grid, np.array(R.values))
    return controlled_seminorm(ControlledPath(times, values, deriv), path, alpha)


def residual_check(solution, problem):
    """sup over nodes of |Y_k - xi - drift integral - rough integral|.

    Re-evaluates the right-hand side of the integral equation from the
    returned solution, so it measures how far the output is from being an
    exact fixed point of the discrete equation.
    """
    R = problem.driver
    times = solution.times
    Y = solution.values
    rhs = np.tile(problem.xi, (times.shape[0], 1))
    if problem.drift is not None:
        f0 = np.stack([problem.drift.eval(t, y) for t, y in zip(times, Y)])
        rhs = rhs + drift_integral_path(SampledPath(R.grid, f0))
    if problem.diffusion is not None:
        from .controlled import compose_function

        integrand = compose_function(problem.diffusion, solution.controlled())
        dx = np.diff(R.values, axis=0)
        cells = np.einsum("kqa,ka->kq", integrand.values[:-1], dx) + np.einsum(
            "kqab,kab->kq", integrand.deriv[:-1], R.blocks
        )
        psi = np.zeros_like(rhs)
        np.cumsum(cells, axis=0, out=psi[1:])
        rhs = rhs + psi
    return float(np.max(np.linalg.norm(Y - rhs, axis=1)))


def apriori_bound_check(solution, problem, K):
    """True iff sup_k |Y_k| <= K.  The admissible K is caller-supplied."""
    if K <= 0:
        raise GridError("bound K must be positive")
    return bool(np.max(np.linalg.norm(solution.values, axis=1)) <= K)


# ---------------------------------------------------------------------------
# coefficient presets (scalar state, scalar driver)


def gbm_coefficients(sigma=0.5):
    return None, FunctionModel(
        f=lambda t, y: sigma * y.reshape(1, 1),
        df=lambda t, y: np.full((1, 1, 1), sigma),
        dim_in=1,
        out_shape=(1, 1),
        bound=abs(sigma),
        name="gbm",
    )


def linear_drift_coefficients(rate=1.0):
    drift = FunctionModel(
        f=lambda t, y: rate * y,
        df=lambda t, y: np.full((1, 1), rate),
        dim_in=1,
        out_shape=(1,),
        lip=abs(rate),
        name="linear-drift",
    )
    return drift, None


def sine_diffusion_coefficients():
    return None, FunctionModel(
        f=lambda t, y: np.sin(y).reshape(1, 1),
        df=lambda t, y: np.cos(y).reshape(1, 1, 1),
        dim_in=1,
        out_shape=(1, 1),
        bound=1.0,
        name="sine-diffusion",
    )


def ou_coefficients(theta=1.0, mu=0.0, sigma=0.3):
    drift = FunctionModel(
        f=lambda t, y: theta * (mu - y),
        df=lambda t, y: np.full((1, 1), -theta),
        dim_in=1,
        out_shape=(1,),
        lip=abs(theta),
        name="ou-drift",
    )
    diffusion = FunctionModel(
        f=lambda t, y: np.full((1, 1), sigma),
        df=lambda t, y: np.zeros((1, 1, 1)),
        dim_in=1,
        out_shape=(1, 1),
        bound=abs(sigma),
        name="ou-diffusion",
    )
    return drift, diffusion


PRESETS = {
    "gbm": gbm_coefficients,
    "linear-drift": linear_drift_coefficients,
    "sine-diffusion": sine_diffusion_coefficients,
    "ou": ou_coefficients,
}


def make_preset_problem(name, driver, xi=1.0, validate=True, **params):
    if name not in PRESETS:
        raise GridError("unknown preset %r (choose from %s)" % (name, sorted(PRESETS)))
    drift, diffusion = PRESETS[name](**params)
    return RDEProblem(driver, drift, diffusion, np.atleast_1d(xi), validate=validate)


def solution_to_json_dict(solution, metadata=None):
    obj = {
        "t": solution.times.tolist(),
        "Y": solution.values.tolist(),
        "Yp": solution.deriv.tolist(),
        "residual": solution.diagnostics.get("residual"),
        "converged": solution.converged,
    }
    if metadata:
        obj["metadata"] = metadata
    return obj


def save_solution_json(solution, path, metadata=None):
    with open(path, "w") as fh:
        json.dump(solution_to_json_dict(solution, metadata), fh)
