"""Eigenfunction evaluation on grids, with a JSON interchange format.

Ties together the composite integral plans and the quadrature layer:
pick the chain for a series, evaluate it at every point of a product
grid with a fixed seed (so the quadrature noise varies smoothly from
point to point and mostly cancels in finite differences), and save or
load the result as JSON for the residual checker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .scalars import lam
from .systems import SystemId, build_hamiltonian
from .pairs import CompositeKernel, recursion_plan
from .quadrature import Contour, integrate, scalar_env

SCHEMA = "wavegrid/1"

#: series with a ground-state integral chain at small rank
GROUND_SERIES = ("B", "C", "D", "BC")


class WaveError(ValueError):
    """Raised for unusable eigenfunction requests or grid files."""


def eigenfunction_plan(
    series: str, n: int, spectral_count: int = 0
) -> CompositeKernel:
    """Integral chain for the requested eigenfunction.

    Ground states exist for all series in GROUND_SERIES; spectral
    parameters are only wired up for the BC chain, where the recursion
    adds one parameter per level.
    """
    if spectral_count:
        if series != "BC":
            raise WaveError(
                f"spectral parameters are only supported for BC, not {series!r}"
            )
        if spectral_count != n:
            raise WaveError(
                f"BC at n={n} takes exactly {n} spectral parameters, "
                f"got {spectral_count}"
            )
        return recursion_plan("BCspec", n, [lam(i + 1) for i in range(n)])
    if series not in GROUND_SERIES:
        raise WaveError(
            f"no ground-state chain for series {series!r}; "
            f"choose one of {', '.join(GROUND_SERIES)}"
        )
    return recursion_plan(series, n)


def default_contour(plan: CompositeKernel) -> Contour:
    """W=30 always; imaginary offset only when branch factors are present.

    Pure exp-of-exp integrands decay on the real line, while kernels
    with (1 +- e^z)-type factors vanish somewhere on it, so those get
    pushed off by a fixed imaginary shift.
    """
    has_branch = any(bp.kernel.binomials for bp in plan.built)
    return Contour.make(window=30.0, offset=0.35 if has_branch else 0.0)


def parse_grid_spec(spec: str, var_names: Sequence[str]) -> dict:
    """CLI grid syntax -> axes mapping.

    ``lo:hi:step`` applies one range to every axis;
    ``name=lo:hi:step,name=...`` sets axes individually.
    """
    def one(txt):
        parts = txt.split(":")
        if len(parts) != 3:
            raise WaveError(f"grid range {txt!r} is not lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi <= lo:
            raise WaveError(f"grid range {txt!r} is empty or reversed")
        count = int(round((hi - lo) / step)) + 1
        return [lo + k * step for k in range(count)]

    if "=" not in spec:
        axis = one(spec)
        return {name: list(axis) for name in var_names}
    axes = {}
    for piece in spec.split(","):
        name, _, rng = piece.partition("=")
        if name not in var_names:
            raise WaveError(
                f"axis {name!r} does not name a variable "
                f"(expected {list(var_names)})"
            )
        axes[name] = one(rng)
    missing = [v for v in var_names if v not in axes]
    if missing:
        raise WaveError(f"grid spec misses axes for {missing}")
    return axes


@dataclass
class WaveGrid:
    """A sampled eigenfunction plus everything needed to re-check it."""

    series: str
    n: int
    couplings: dict
    spectral: tuple
    eigenvalue: complex
    axes: dict  # variable name -> list of floats, in operator order
    values: np.ndarray  # complex, shape = axis lengths
    err_estimates: np.ndarray
    config: dict = field(default_factory=dict)

    def operator(self):
        # C-series chains act on the z row; every other series on x
        fam = "z" if self.series == "C" else "x"
        return build_hamiltonian(SystemId(self.series, self.n), family=fam)

    def to_json(self) -> str:
        payload = {
            "schema": SCHEMA,
            "system": {"series": self.series, "n": self.n},
            "couplings": {str(k): v for k, v in self.couplings.items()},
            "spectral": list(self.spectral),
            "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
            "axes": {k: list(map(float, v)) for k, v in self.axes.items()},
            "values": {
                "re": self.values.real.tolist(),
                "im": self.values.imag.tolist(),
            },
            "errEstimates": self.err_estimates.tolist(),
            "config": self.config,
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "WaveGrid":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise WaveError(f"grid file is not valid JSON: {exc}") from exc
        if payload.get("schema") != SCHEMA:
            raise WaveError(
                f"grid file schema {payload.get('schema')!r} is not {SCHEMA!r}"
            )
        vals = np.array(payload["values"]["re"], dtype=float) + 1j * np.array(
            payload["values"]["im"], dtype=float
        )
        ev = payload["eigenvalue"]
        return cls(
            series=payload["system"]["series"],
            n=int(payload["system"]["n"]),
            couplings={int(k): v for k, v in payload["couplings"].items()},
            spectral=tuple(payload["spectral"]),
            eigenvalue=complex(ev[0], ev[1]),
            axes=payload["axes"],
            values=vals,
            err_estimates=np.array(payload["errEstimates"], dtype=float),
            config=payload.get("config", {}),
        )


def wavefunction_grid(
    series: str,
    n: int,
    couplings: Mapping,
    spectral: Sequence[float] = (),
    grid: str | Mapping = "-1:1:0.25",
    contour: Contour | None = None,
    seed: int = 12345,
    budget: int | None = None,
    jobs: int = 1,
) -> WaveGrid:
    """Evaluate the eigenfunction on a product grid, one integral per node.

    Every node reuses the same seed; the quadrature noise then drifts
    smoothly across the grid instead of jumping, which is what makes
    finite-difference residual checks of noisy data viable.
    """
    plan = eigenfunction_plan(series, n, len(spectral))
    if contour is None:
        contour = default_contour(plan)
    ext = [v.name() for v in plan.external_vars()]
    axes = (
        parse_grid_spec(grid, ext) if isinstance(grid, str)
        else {
            (k if isinstance(k, str) else k.name()): list(v)
            for k, v in grid.items()
        }
    )
    for name in ext:
        if name not in axes:
            raise WaveError(f"grid spec misses axis {name!r}")

    senv = scalar_env(couplings, list(spectral) if spectral else None)
    shift = plan.eigen_shift()
    eigenvalue = (
        complex(shift.eval(senv)) if hasattr(shift, "eval") else complex(shift)
    )

    shape = tuple(len(axes[name]) for name in ext)
    vals = np.empty(shape, dtype=complex)
    errs = np.empty(shape)
    method = None
    for idx in np.ndindex(shape):
        point = {name: axes[name][k] for name, k in zip(ext, idx)}
        r = integrate(
            plan, point, couplings=couplings,
            spectral=list(spectral) if spectral else None,
            contour=contour, budget=budget, seed=seed, jobs=jobs,
        )
        vals[idx] = r.value
        errs[idx] = r.err_estimate
        method = r.method
    config = {
        "contour": {
            "window": contour.window,
            "offset": contour.offset,
            "offsets": {k: v for k, v in contour.offsets},
        },
        "seed": seed,
        "budget": budget,
        "method": method,
        "grid": {name: axes[name] for name in ext},
    }
    return WaveGrid(
        series=series,
        n=n,
        couplings=dict(couplings),
        spectral=tuple(spectral),
        eigenvalue=eigenvalue,
        axes={name: axes[name] for name in ext},
        values=vals,
        err_estimates=errs,
        config=config,
    )


def residual_of_grid(wg: WaveGrid):
    """Eigen-residual check of a stored grid against its own operator."""
    from .eigen import eigen_residual

    op = wg.operator()
    return eigen_residual(
        op,
        {v: np.asarray(wg.axes[v.name()], dtype=float) for v in op.vars},
        wg.values,
        wg.eigenvalue,
        couplings=wg.couplings,
        spectral=list(wg.spectral) if wg.spectral else None,
    )
