"""Prebuilt check suites: certification, eigenfunctions, degenerations.

Each suite returns Records for the report layer.  Check parameters
(grids, couplings, tolerances) are pinned here so that a suite run is
reproducible from the package alone; the config only contributes
runtime knobs (seed, budget, worker count).
"""

from __future__ import annotations

import math
import time

import numpy as np

from .scalars import lam
from .bessel import bessel_k0
from .systems import SystemId, build_hamiltonian
from .pairs import CATALOG, QOP_TABLE, qop_plan, recursion_plan
from .verify import certify, certify_composite
from .quadrature import Contour, integrate
from .eigen import eigen_residual
from .wavefun import wavefunction_grid, residual_of_grid
from .degenerate import LIMITS, degeneration_check
from .report import Record, Report

SUITES = ("paper-verify", "paper-eigen", "paper-degenerate", "all")

#: recursion chains certified as composites, with their rank range
_RECURSIONS = (
    ("B", (1, 2, 3)),
    ("C", (1, 2, 3)),
    ("D", (2, 3)),
    ("BC", (1, 2, 3)),
    ("BCspec", (1, 2, 3)),
    ("I", (1, 2, 3)),
)


class SuiteError(ValueError):
    """Raised for unknown suite names."""


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def verify_records() -> list:
    """Certify every cataloged pair at every applicable rank, then the
    composite plans, chaining their elementary certificates."""
    records = []
    for name in sorted(CATALOG):
        entry = CATALOG[name]
        if not entry.certifiable:
            continue
        for n in entry.n_values():
            cert, dt = _timed(lambda: certify(name, n))
            records.append(Record(
                tag=entry.tags[0], pair=name, n=n, kind="certify",
                status=cert.status, metric=0.0, tolerance=0.0, elapsed=dt,
            ))
    for series, ranks in _RECURSIONS:
        for n in ranks:
            if series == "BCspec":
                plan = recursion_plan(
                    series, n, [lam(i + 1) for i in range(n)]
                )
            else:
                plan = recursion_plan(series, n)
            cc, dt = _timed(lambda: certify_composite(plan))
            records.append(Record(
                tag=plan.tag, pair=plan.name, n=n, kind="composite",
                status=cc.status, metric=0.0, tolerance=0.0, elapsed=dt,
            ))
    for series in sorted(QOP_TABLE):
        for n in (1, 2, 3):
            try:
                plan = qop_plan(series, n)
            except Exception:
                continue  # outside the series' catalogued rank range
            cc, dt = _timed(lambda: certify_composite(plan))
            records.append(Record(
                tag=plan.tag, pair=plan.name, n=n, kind="composite",
                status=cc.status, metric=0.0, tolerance=0.0, elapsed=dt,
            ))
    return records


def _oracle_records(jobs: int) -> list:
    """Closed-form cross-check: the rank-one chains against 2 K0."""
    records = []
    cont = Contour.make(window=30.0, offset=0.0)
    for series, arg in (
        ("B", lambda g, x: 2.0 * math.sqrt(2.0 * g) * math.exp(x / 2.0)),
        ("C", lambda g, z: 2.0 * math.sqrt(g) * math.exp(z)),
    ):
        plan = recursion_plan(series, 1)
        ext = plan.external_vars()[0].name()
        for g in (0.5, 1.0, 2.0):
            t0 = time.perf_counter()
            worst = 0.0
            for x in np.linspace(-2.0, 2.0, 21):
                r = integrate(
                    plan, {ext: float(x)}, couplings={1: g},
                    contour=cont, jobs=jobs,
                )
                oracle = 2.0 * bessel_k0(arg(g, float(x)))
                worst = max(worst, abs(r.value - oracle) / abs(oracle))
            records.append(Record(
                tag=f"Oracle-{series}1-g{g:g}", pair=plan.name, n=1,
                kind="oracle",
                status="pass" if worst < 1e-8 else "fail",
                metric=worst, tolerance=1e-8,
                elapsed=time.perf_counter() - t0,
            ))
    return records


def _residual_record(tag, series, n, couplings, spectral, grid, tol,
                     seed, budget, jobs) -> Record:
    t0 = time.perf_counter()
    wg = wavefunction_grid(
        series, n, couplings, spectral=spectral, grid=grid,
        seed=seed, budget=budget, jobs=jobs,
    )
    rep = residual_of_grid(wg)
    return Record(
        tag=tag, pair=f"psi-{series}{n}", n=n, kind="eigen",
        status="pass" if rep.metric <= tol else "fail",
        metric=rep.metric, tolerance=tol,
        elapsed=time.perf_counter() - t0,
    )


def eigen_records(seed: int = 12345, budget: int | None = None,
                  jobs: int = 1) -> list:
    """Finite-difference residual checks plus the Bessel oracles."""
    records = _oracle_records(jobs)
    records.append(_residual_record(
        "Eigen-C1", "C", 1, {1: 1.0}, (), "-1:1:0.05", 1e-6,
        seed, budget, jobs,
    ))
    records.append(_residual_record(
        "Eigen-B1", "B", 1, {1: 1.0}, (), "-2:2:0.05", 1e-6,
        seed, budget, jobs,
    ))
    for lv in (0.0, 0.5, 1.0):
        records.append(_residual_record(
            f"Eigen-BC1-lam{lv:g}", "BC", 1, {1: 1.0, 2: 1.0}, (lv,),
            "-1:1:0.05", 1e-4, seed, budget, jobs,
        ))
    # rank-two ground state: QMC noise is what limits this one, so the
    # grid sits where the potential is steep (curvature dominates noise)
    records.append(_residual_record(
        "Eigen-BC2", "BC", 2, {1: 1.0, 2: 1.0, 3: 1.0}, (),
        "x2_1=1.14:1.66:0.13,x2_2=0.84:1.36:0.13", 1e-3,
        seed, budget, jobs,
    ))
    return records


def degenerate_records(seed: int = 2024) -> list:
    """All coupling-limit statements at ranks 1..3."""
    tol = {"g1to0": 0.0, "g2to0": 1e-6, "affine": 1e-8}
    subject = {
        "g1to0": "BCn-IstarShiftn/Cn-Dn",
        "g2to0": "BCn-IstarShiftn/Bn-BCstarn",
        "affine": "glhat/gl-step",
    }
    records = []
    for limit in LIMITS:
        for n in (1, 2, 3):
            rep, dt = _timed(
                lambda: degeneration_check(limit, n, seed=seed)
            )
            worst = max((c.gap for c in rep.checks), default=0.0)
            records.append(Record(
                tag=f"Limit-{limit}", pair=subject[limit], n=n,
                kind="degenerate",
                status="pass" if rep.passed else "fail",
                metric=worst, tolerance=tol[limit], elapsed=dt,
            ))
    return records


def run_suite(name: str, seed: int = 12345, budget: int | None = None,
              jobs: int = 1) -> Report:
    if name == "paper-verify":
        recs = verify_records()
    elif name == "paper-eigen":
        recs = eigen_records(seed=seed, budget=budget, jobs=jobs)
    elif name == "paper-degenerate":
        recs = degenerate_records()
    elif name == "all":
        recs = (
            verify_records()
            + eigen_records(seed=seed, budget=budget, jobs=jobs)
            + degenerate_records()
        )
    else:
        raise SuiteError(
            f"unknown suite {name!r}; expected one of {', '.join(SUITES)}"
        )
    return Report.build(recs)
