"""Contour integration of composite kernels.

Evaluates the iterated integrals attached to a ``CompositeKernel``: the
external variables are held at a fixed point, every glue variable (plus
the final destination layer for eigenfunction plans) runs over a
horizontal line t + i*delta, |t| <= W.

Method selection by total dimension:

* dim 0  -- direct kernel evaluation;
* 1..3   -- "adaptive-nested": iterated trapezoid rule with step halving
            per level.  The integrands are entire in each variable and
            decay doubly exponentially on horizontal lines, so the plain
            trapezoid rule already converges geometrically (the usual
            Poisson-summation argument); no endpoint transform needed.
* >= 4   -- "qmc": scrambled Sobol sequence with a fixed seed, evaluated
            in fixed chunks whose partial sums are reduced in chunk
            order, so the result is bit-identical for any worker count.

A pre-flight scan on a coarse lattice rejects contours that hit a
binomial-base zero ( 1 + c e^L = 0 ) or fail to decay at the window
edge, before any budget is spent.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .exprs import KernelExpr, Variable
from .pairs import CompositeKernel

__all__ = [
    "Contour",
    "ContourError",
    "QuadResult",
    "integrate",
    "scalar_env",
]

_CHUNK = 8192
_EXP_CAP = 690.0  # log-integrand real part above this overflows float64


class ContourError(ValueError):
    """The chosen contour is unusable: base zero, growth, or overflow."""


@dataclass(frozen=True)
class Contour:
    """Per-variable horizontal integration lines t + i*delta, |t| <= window."""

    window: float = 30.0
    offset: float = 0.0
    offsets: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if not self.window > 0:
            raise ContourError(f"window must be positive, got {self.window}")

    @staticmethod
    def make(window: float = 30.0, offset: float = 0.0,
             **per_var: float) -> "Contour":
        return Contour(window, offset, tuple(sorted(per_var.items())))

    def offset_for(self, v: Variable | str) -> float:
        name = v if isinstance(v, str) else v.name()
        for k, d in self.offsets:
            if k == name:
                return d
        return self.offset

    def shifted(self, bump: float) -> "Contour":
        """Uniformly move every offset; used by the Cauchy sanity check."""
        return Contour(
            self.window,
            self.offset + bump,
            tuple((k, d + bump) for k, d in self.offsets),
        )


@dataclass(frozen=True)
class QuadResult:
    value: complex
    err_estimate: float
    method: str  # "adaptive-nested" | "qmc"
    evals: int
    seed: int | None = None
    converged: bool = True


def scalar_env(
    couplings: Mapping[str, float] | Mapping[int, float] | None = None,
    spectral: Sequence[float] | Mapping[str, float] | None = None,
) -> dict[str, complex]:
    """Numeric environment for the generator layer.

    Couplings may be keyed "g1" or plainly 1; the sigma generators are
    derived automatically (s_i = sqrt(g_i/2)).  A spectral sequence binds
    lam1, lam2, ...; a mapping may also bind "a".
    """
    env: dict[str, complex] = {}
    for k, v in (couplings or {}).items():
        name = f"g{k}" if isinstance(k, int) else str(k)
        env[name] = complex(v)
    if spectral is None:
        pass
    elif isinstance(spectral, Mapping):
        for k, v in spectral.items():
            env[str(k)] = complex(v)
    else:
        for i, v in enumerate(spectral, start=1):
            env[f"lam{i}"] = complex(v)
    return env


# ---------------------------------------------------------------------------
# compiled integrands


def _compile_kernel_log(
    kernel: KernelExpr, var_slot: Mapping[Variable, int], senv
) -> Callable[[list[complex]], complex]:
    """Specialize log(K/prefactor) to fixed scalars and variable slots."""
    phase = [
        (var_slot[v], complex(c.eval(senv))) for v, c in kernel.phase.items
    ]
    exps = []
    for t in kernel.expterms:
        items = [(var_slot[v], complex(c.eval(senv))) for v, c in t.form.items]
        exps.append((complex(t.coeff.eval(senv)), items))
    binos = []
    for b in kernel.binomials:
        items = [
            (var_slot[v], complex(c.eval(senv))) for v, c in b.base.arg.items
        ]
        binos.append(
            (complex(b.base.c.eval(senv)), items, complex(b.expo.eval(senv)))
        )

    def logf(vals: list[complex]) -> complex:
        tot = 0j
        for idx, c in phase:
            tot += c * vals[idx]
        for c, items in exps:
            e = 0j
            for idx, cc in items:
                e += cc * vals[idx]
            tot += c * cmath.exp(e)
        for c, items, p in binos:
            e = 0j
            for idx, cc in items:
                e += cc * vals[idx]
            tot += p * cmath.log(1.0 + c * cmath.exp(e))
        return tot

    return logf


def _compile_kernel_log_np(
    kernel: KernelExpr, var_slot: Mapping[Variable, int], senv
):
    """Vectorized twin of :func:`_compile_kernel_log` over point batches.

    Takes a complex matrix of shape (npoints, nslots); returns the
    per-point log values.  Same principal branches as the scalar path.
    """
    import numpy as np

    phase = [
        (var_slot[v], complex(c.eval(senv))) for v, c in kernel.phase.items
    ]
    exps = []
    for t in kernel.expterms:
        items = [(var_slot[v], complex(c.eval(senv))) for v, c in t.form.items]
        exps.append((complex(t.coeff.eval(senv)), items))
    binos = []
    for b in kernel.binomials:
        items = [
            (var_slot[v], complex(c.eval(senv))) for v, c in b.base.arg.items
        ]
        binos.append(
            (complex(b.base.c.eval(senv)), items, complex(b.expo.eval(senv)))
        )

    def logf(mat):
        tot = np.zeros(mat.shape[0], dtype=complex)
        for idx, c in phase:
            tot += c * mat[:, idx]
        for c, items in exps:
            e = np.zeros(mat.shape[0], dtype=complex)
            for idx, cc in items:
                e += cc * mat[:, idx]
            tot += c * np.exp(e)
        for c, items, p in binos:
            e = np.zeros(mat.shape[0], dtype=complex)
            for idx, cc in items:
                e += cc * mat[:, idx]
            tot += p * np.log(1.0 + c * np.exp(e))
        return tot

    return logf


def _as_var_point(point: Mapping, ext_vars: Sequence[Variable]) -> dict:
    by_name = {v.name(): v for v in ext_vars}
    out = {}
    for k, val in (point or {}).items():
        if isinstance(k, Variable):
            out[k] = complex(val)
        elif k in by_name:
            out[by_name[k]] = complex(val)
        else:
            raise KeyError(f"unknown external variable {k!r}")
    missing = [v.name() for v in ext_vars if v not in out]
    if missing:
        raise KeyError(f"external point misses {missing}")
    return out


class _Integrand:
    """Total integrand of a plan with externals frozen in."""

    def __init__(self, plan: CompositeKernel, external_point, senv):
        self.plan = plan
        self.senv = senv
        self.ext_vars = plan.external_vars()
        self.int_vars = plan.integration_vars()
        slots: dict[Variable, int] = {}
        for v in self.ext_vars:
            slots[v] = len(slots)
        for v in self.int_vars:
            if v in slots:
                raise ValueError(f"variable {v} is both external and glued")
            slots[v] = len(slots)
        self.slots = slots
        self.base_vals: list[complex] = [0j] * len(slots)
        ext = _as_var_point(external_point, self.ext_vars)
        for v, val in ext.items():
            self.base_vals[slots[v]] = val
        self.int_slots = [slots[v] for v in self.int_vars]
        self.logfs = [
            _compile_kernel_log(bp.kernel, slots, senv) for bp in plan.built
        ]
        pref = 1.0 + 0j
        for bp in plan.built:
            pref *= complex(bp.kernel.prefactor.eval(senv))
        self.prefactor = pref
        self.bases = [
            (b.base, bp)
            for bp in plan.built
            for b in bp.kernel.binomials
        ]
        self.evals = 0

    @property
    def dim(self) -> int:
        return len(self.int_slots)

    def __call__(self, tvals: Sequence[complex]) -> complex:
        self.evals += 1
        vals = list(self.base_vals)
        for slot, t in zip(self.int_slots, tvals):
            vals[slot] = t
        tot = 0j
        for logf in self.logfs:
            tot += logf(vals)
        if tot.real > _EXP_CAP:
            return complex(math.inf, 0.0)
        return cmath.exp(tot)


# ---------------------------------------------------------------------------
# pre-flight


@dataclass
class _ScanInfo:
    max_abs: float
    centers: list[float]
    widths: list[float]
    cov: list[list[float]] | None = None


def _preflight(fn: _Integrand, contour: Contour, senv) -> _ScanInfo:
    """Coarse-lattice scan: base zeros, boundedness, edge decay.

    Also measures per-axis |integrand|-weighted centers and widths; the
    qmc path uses them as an importance map.  Raises ContourError on any
    violation.
    """
    dim = fn.dim
    if dim == 0:
        return _ScanInfo(abs(fn(())), [], [])
    per_axis = max(5, min(17, int(round(50000 ** (1.0 / dim)))))
    W = contour.window
    deltas = [contour.offset_for(v) for v in fn.int_vars]
    grid = [
        -W + 2.0 * W * k / (per_axis - 1) for k in range(per_axis)
    ]
    max_abs = 0.0
    max_edge = 0.0
    w_sum = 0.0
    m1 = [0.0] * dim
    m2 = [[0.0] * dim for _ in range(dim)]
    idx = [0] * dim
    while True:
        tvals = [
            complex(grid[idx[j]], deltas[j]) for j in range(dim)
        ]
        val = fn(tvals)
        if cmath.isnan(val) or cmath.isinf(val):
            raise ContourError(
                "integrand unbounded on the contour lattice "
                f"(at {tvals}); move the offsets"
            )
        a = abs(val)
        max_abs = max(max_abs, a)
        if any(k in (0, per_axis - 1) for k in idx):
            max_edge = max(max_edge, a)
        w_sum += a
        for j in range(dim):
            tj = grid[idx[j]]
            m1[j] += a * tj
            for k in range(j, dim):
                m2[j][k] += a * tj * grid[idx[k]]
        # odometer
        j = 0
        while j < dim:
            idx[j] += 1
            if idx[j] < per_axis:
                break
            idx[j] = 0
            j += 1
        if j == dim:
            break
    if max_abs == 0.0:
        raise ContourError("integrand vanishes on the whole scan lattice")
    if max_edge > 1e-8 * max_abs:
        raise ContourError(
            f"integrand does not decay at the window edge "
            f"(edge/interior = {max_edge / max_abs:.2e}); widen the window"
        )
    _check_base_zeros(fn, contour, senv)
    centers = [m1[j] / w_sum for j in range(dim)]
    cov = [[0.0] * dim for _ in range(dim)]
    for j in range(dim):
        for k in range(j, dim):
            c = m2[j][k] / w_sum - centers[j] * centers[k]
            cov[j][k] = cov[k][j] = c
    widths = []
    for j in range(dim):
        w = max(0.5, math.sqrt(max(cov[j][j], 0.0)))
        widths.append(w)
        cov[j][j] = max(cov[j][j], w * w)
    return _ScanInfo(max_abs, centers, widths, cov)


def _check_base_zeros(fn: _Integrand, contour: Contour, senv) -> None:
    ext_env = dict(senv)
    for v, val in zip(fn.ext_vars, fn.base_vals):
        ext_env[v] = val
    W = contour.window
    for base, bp in fn.bases:
        line_vars = [v for v in base.arg.vars() if v in fn.int_vars]
        if not line_vars:
            continue
        for k in range(65):
            t = -W + 2.0 * W * k / 64
            env = dict(ext_env)
            for v in fn.int_vars:
                env[v] = complex(t, contour.offset_for(v))
            if abs(base.eval(env)) < 1e-9:
                raise ContourError(
                    f"binomial base {base.latex()} of {bp.name} vanishes "
                    f"on the contour near t={t:.3f}; shift the offset"
                )


# ---------------------------------------------------------------------------
# adaptive nested trapezoid (dim <= 3)


def _nested_trapezoid(
    fn: _Integrand, contour: Contour, rel_tol: float, budget: int
) -> QuadResult:
    W = contour.window
    deltas = [contour.offset_for(v) for v in fn.int_vars]
    dim = fn.dim
    state = {"exhausted": False, "outer_err": 0.0}

    def level(j: int, tvals: list[complex]) -> complex:
        if j == dim:
            return fn(tvals)

        def f(t: float) -> complex:
            tvals.append(complex(t, deltas[j]))
            try:
                return level(j + 1, tvals)
            finally:
                tvals.pop()

        npts = 32  # initial step W/16; halved until the estimate settles
        h = 2.0 * W / npts
        total = 0.5 * (f(-W) + f(W))
        for k in range(1, npts):
            total += f(-W + k * h)
        total *= h
        err = math.inf
        for halving in range(12):
            if fn.evals > budget:
                state["exhausted"] = True
                break
            h *= 0.5
            npts *= 2
            odd = 0j
            for k in range(1, npts, 2):
                odd += f(-W + k * h)
            new = 0.5 * total + h * odd
            err = abs(new - total)
            total = new
            # two consecutive tight levels guard against a lucky coarse grid
            if halving >= 1 and err <= rel_tol * max(abs(total), 1e-300):
                break
        else:
            state["exhausted"] = True
        if j == 0:
            state["outer_err"] = err
        return total

    value = level(0, [])
    if cmath.isinf(value) or cmath.isnan(value):
        raise ContourError("integrand overflowed during quadrature")
    return QuadResult(
        fn.prefactor * value,
        abs(fn.prefactor) * state["outer_err"],
        "adaptive-nested",
        fn.evals,
        None,
        not state["exhausted"],
    )


# ---------------------------------------------------------------------------
# scrambled-Sobol quasi Monte Carlo (dim >= 4)


def _qmc_sobol(
    fn: _Integrand, contour: Contour, scan: _ScanInfo,
    budget: int, seed: int, jobs: int,
) -> QuadResult:
    import numpy as np
    from scipy.special import ndtri
    from scipy.stats import qmc

    dim = fn.dim
    deltas = np.array(
        [contour.offset_for(v) for v in fn.int_vars], dtype=float
    )
    # importance map: a multivariate Gaussian fitted to the pre-flight
    # scan (full covariance, to follow diagonal ridges), inflated so the
    # Gaussian weight never out-runs the integrand's double-exponential
    # walls; the map depends only on the scan, so it is identical for
    # every worker count
    mu = np.array(scan.centers, dtype=float)
    cov = np.array(scan.cov, dtype=float) * 2.5 ** 2
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        L = np.diag(2.5 * np.array(scan.widths, dtype=float))
    log_norm = float(
        np.sum(np.log(np.abs(np.diag(L))))
        + 0.5 * dim * math.log(2.0 * math.pi)
    )

    # round the chunk count up to a power of two: Sobol points only
    # balance in blocks of 2^k, and partial blocks cost accuracy
    n_chunks = 2
    while n_chunks * _CHUNK < budget:
        n_chunks *= 2
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed)
    # the Sobol stream is drawn up front in chunk order, so worker count
    # cannot perturb which sample lands in which chunk
    chunks = [sob.random(_CHUNK) for _ in range(n_chunks)]
    logfs = [
        _compile_kernel_log_np(bp.kernel, fn.slots, fn.senv)
        for bp in fn.plan.built
    ]
    nslots = len(fn.base_vals)
    base_row = np.array(fn.base_vals, dtype=complex)
    tiny = 2.0 ** -32

    def eval_chunk(pts) -> complex:
        u = np.clip(pts, tiny, 1.0 - tiny)
        y = ndtri(u)  # (npts, dim) standard normal draws
        t = mu + y @ L.T  # real sample locations
        mat = np.broadcast_to(base_row, (pts.shape[0], nslots)).copy()
        for j, slot in enumerate(fn.int_slots):
            mat[:, slot] = t[:, j] + 1j * deltas[j]
        tot = np.zeros(pts.shape[0], dtype=complex)
        for logf in logfs:
            tot += logf(mat)
        # divide by the sampling density: + |y|^2/2 + log norm
        tot += np.sum(y * y, axis=1) * 0.5 + log_norm
        vals = np.exp(np.where(tot.real > _EXP_CAP, np.nan, tot))
        return complex(np.sum(vals))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            partials = list(ex.map(eval_chunk, chunks))
    else:
        partials = [eval_chunk(c) for c in chunks]
    fn.evals += n_chunks * _CHUNK

    n_total = n_chunks * _CHUNK
    value = sum(partials) / n_total
    half = n_chunks // 2
    v_half = sum(partials[:half]) / (half * _CHUNK)
    err = abs(value - v_half)
    if err == 0.0:
        err = 1e-12 * abs(value)
    if cmath.isinf(value) or cmath.isnan(value):
        raise ContourError("integrand overflowed during qmc sampling")
    return QuadResult(
        fn.prefactor * value,
        abs(fn.prefactor) * err,
        "qmc",
        n_total,
        seed,
        True,
    )


# ---------------------------------------------------------------------------
# entry point


def integrate(
    plan: CompositeKernel,
    external_point: Mapping,
    couplings: Mapping | None = None,
    spectral=None,
    contour: Contour | None = None,
    budget: int | None = None,
    *,
    rel_tol: float = 1e-10,
    seed: int = 12345,
    jobs: int = 1,
    method: str | None = None,
) -> QuadResult:
    """Iterated integral of the plan's kernel product at an external point."""
    contour = contour or Contour()
    senv = scalar_env(couplings, spectral)
    fn = _Integrand(plan, external_point, senv)
    if fn.dim > 8:
        raise ValueError(
            f"total integration dimension {fn.dim} exceeds the cap of 8"
        )
    if method is None:
        method = "adaptive-nested" if fn.dim <= 3 else "qmc"
    if fn.dim == 0:
        val = fn.prefactor * fn(())
        return QuadResult(val, 0.0, method, 1, None, True)
    scan = _preflight(fn, contour, senv)
    fn.evals = 0
    if method == "adaptive-nested":
        return _nested_trapezoid(
            fn, contour, rel_tol, budget or 200_000
        )
    if method == "qmc":
        return _qmc_sobol(
            fn, contour, scan, budget or 1_000_000, seed, jobs
        )
    raise ValueError(f"unknown method {method!r}")
