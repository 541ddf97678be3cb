"""Heat flow on composite conductors, with spectral decay certificates.

The evolution is the implicit theta-scheme (backward Euler by default) for
``M du/dt + K u = 0`` on the Dirichlet-eliminated block, started from the
nodal source values so that the running time integral converges to the
elliptic equilibrium.  Step sizes follow a deterministic schedule: a uniform
warm-up resolving the initial transient, then geometric growth up to a cap.
Each distinct (dt, theta) factorization is computed once and reused.

The smallest generalized eigenvalue of (K, M) certifies exponential decay of
the mass norm and bounds the tail of the time integral after truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .fem2d import CircleSampler, FemSystem
from .symmetry_checks import ProbeStats, probe_deviation

__all__ = [
    "EigenResult",
    "Evolution",
    "DecayCheck",
    "smallest_eigenvalue",
    "evolve",
    "decay_certificate",
    "monotone_decay",
    "tail_bound",
    "v_error_vs_elliptic",
]


@dataclass(frozen=True)
class EigenResult:
    value: float
    iterations: int


def smallest_eigenvalue(system: FemSystem, tol: float = 1e-8, maxit: int = 300) -> EigenResult:
    """Smallest eigenvalue of K x = lambda M x on the free block.

    Inverse power iteration with one sparse LU of K, M-normalized iterates,
    the all-ones start vector, and a relative Rayleigh-quotient stopping
    test.  Everything is deterministic.
    """
    free = system.free
    Kff = system.stiffness[free][:, free].tocsc()
    Mff = system.mass[free][:, free].tocsr()
    lu = spla.splu(Kff)
    x = np.ones(len(free))
    lam_old = 0.0
    for it in range(1, maxit + 1):
        y = lu.solve(Mff @ x)
        y /= math.sqrt(y @ (Mff @ y))
        lam = float((y @ (Kff @ y)) / (y @ (Mff @ y)))
        if abs(lam - lam_old) <= tol * lam:
            return EigenResult(value=lam, iterations=it)
        lam_old = lam
        x = y
    raise RuntimeError("inverse power iteration did not converge")


@dataclass
class Evolution:
    """Recorded trajectory of one heat-flow run.

    ``v_field`` is the trapezoidal running time integral of the solution
    (a full nodal vector, zero on the boundary), ``u_final`` the state at
    the stopping time.  Probe arrays have one row per recorded time and one
    column per probe circle; deviation entries follow the sup-norm
    convention of :func:`phaselab.symmetry_checks.probe_deviation`.
    """

    times: np.ndarray
    mass_norms: np.ndarray
    probe_mean_u: np.ndarray
    probe_dev_u: np.ndarray
    probe_u_absolute: np.ndarray
    probe_mean_flux: np.ndarray
    probe_dev_flux: np.ndarray
    probe_flux_absolute: np.ndarray
    v_field: np.ndarray
    u_final: np.ndarray
    steps: int
    factorizations: int

    @property
    def initial_norm(self) -> float:
        return float(self.mass_norms[0])

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


def evolve(
    system: FemSystem,
    u0: np.ndarray | None = None,
    *,
    theta: float = 1.0,
    dt0: float = 5e-4,
    uniform_steps: int = 20,
    growth: float = 1.05,
    dt_max: float = 2e-3,
    eps: float = 1e-8,
    max_steps: int = 200_000,
    samplers: tuple[CircleSampler, ...] = (),
    resume: Evolution | None = None,
) -> Evolution:
    """Run the theta-scheme until the mass norm falls below ``eps``.

    ``u0`` defaults to the nodal source values of the system.  Passing a
    previous run as ``resume`` continues it (same schedule position, running
    integral carried over) with a smaller ``eps``; this is how a truncation
    time is extended to audit the certified tail bound.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    free = system.free
    nv = system.mesh.nv
    Kff = system.stiffness[free][:, free].tocsc()
    Mff = system.mass[free][:, free].tocsc()

    if resume is not None:
        u = resume.u_final[free].copy()
        V = resume.v_field[free].copy()
        t = resume.final_time
        k = resume.steps
        times = list(resume.times)
        norms = list(resume.mass_norms)
        stats: list[list[ProbeStats]] = [[] for _ in times]  # only new rows get probes
        prev = resume
    else:
        if u0 is None:
            u = system.g_vertex[free].astype(float).copy()
        else:
            u0 = np.asarray(u0, float)
            u = (u0[free] if u0.shape == (nv,) else u0).copy()
        V = np.zeros(len(free))
        t = 0.0
        k = 0
        times = [0.0]
        norms = [float(np.sqrt(u @ (Mff @ u)))]
        stats = [_probe_row(system, samplers, u)]
        prev = None

    lus: dict[tuple[float, float], spla.SuperLU] = {}
    nfact = 0
    dt = dt0
    while norms[-1] > eps:
        if k >= uniform_steps:
            dt = min(dt0 * growth ** (k - uniform_steps + 1), dt_max)
        key = (round(dt, 15), theta)
        if key not in lus:
            lus[key] = spla.splu((Mff + theta * dt * Kff).tocsc())
            nfact += 1
        rhs = Mff @ u if theta == 1.0 else (Mff @ u - (1.0 - theta) * dt * (Kff @ u))
        u_new = lus[key].solve(rhs)
        V += dt * (u + u_new) / 2.0
        u = u_new
        t += dt
        k += 1
        times.append(t)
        norms.append(float(np.sqrt(u @ (Mff @ u))))
        stats.append(_probe_row(system, samplers, u))
        if k - (prev.steps if prev else 0) > max_steps:
            raise RuntimeError("heat flow did not reach the stopping norm")

    n_probes = len(samplers)
    shape = (len(times), n_probes)
    mu = np.zeros(shape)
    du = np.zeros(shape)
    au = np.zeros(shape, dtype=bool)
    mf = np.zeros(shape)
    df = np.zeros(shape)
    af = np.zeros(shape, dtype=bool)
    for i, row in enumerate(stats):
        for j, ps in enumerate(row):
            mu[i, j], du[i, j], au[i, j] = ps.mean_u, ps.dev_u, ps.u_absolute
            mf[i, j], df[i, j], af[i, j] = ps.mean_flux, ps.dev_flux, ps.flux_absolute
    if prev is not None and n_probes:
        old = len(prev.times)
        mu[:old], du[:old], au[:old] = prev.probe_mean_u, prev.probe_dev_u, prev.probe_u_absolute
        mf[:old], df[:old], af[:old] = (
            prev.probe_mean_flux,
            prev.probe_dev_flux,
            prev.probe_flux_absolute,
        )

    u_full = np.zeros(nv)
    u_full[free] = u
    v_full = np.zeros(nv)
    v_full[free] = V
    return Evolution(
        times=np.array(times),
        mass_norms=np.array(norms),
        probe_mean_u=mu,
        probe_dev_u=du,
        probe_u_absolute=au,
        probe_mean_flux=mf,
        probe_dev_flux=df,
        probe_flux_absolute=af,
        v_field=v_full,
        u_final=u_full,
        steps=k,
        factorizations=(prev.factorizations if prev else 0) + nfact,
    )


def _probe_row(system: FemSystem, samplers, u_free: np.ndarray) -> list[ProbeStats]:
    if not samplers:
        return []
    z = np.zeros(system.mesh.nv)
    z[system.free] = u_free
    return [probe_deviation(s, z, system.sigma_e) for s in samplers]


@dataclass(frozen=True)
class DecayCheck:
    """Audit of the spectral decay bound along a recorded trajectory.

    ``max_ratio`` is the largest value of
    ``mass_norm(t) / (mass_norm(0) * exp(-lam * t))`` over the recorded
    times; the certificate holds when it stays within the slack.
    ``slope_ratio`` is the fitted log-norm slope over the second half of the
    run divided by ``-lam`` — near 1 when the trajectory has collapsed onto
    the lowest mode (backward Euler biases it slightly below 1, by about
    ``lam * dt / 2``).
    """

    ok: bool
    max_ratio: float
    lam: float
    slack: float
    slope_ratio: float


def decay_certificate(run: Evolution, lam: float, slack: float = 0.02) -> DecayCheck:
    bound = run.initial_norm * np.exp(-lam * run.times)
    ratio = float((run.mass_norms / bound).max())
    if run.times.size < 2:
        slope = math.nan
    else:
        tail = run.times >= 0.5 * run.final_time
        if tail.sum() < 2:
            tail[-2:] = True
        slope = np.polyfit(run.times[tail], np.log(run.mass_norms[tail]), 1)[0]
    return DecayCheck(
        ok=ratio <= 1.0 + slack,
        max_ratio=ratio,
        lam=lam,
        slack=slack,
        slope_ratio=float(slope / (-lam)),
    )


def monotone_decay(run: Evolution) -> bool:
    """Did the mass norm decrease (weakly) at every recorded step?"""
    return bool(np.all(np.diff(run.mass_norms) <= 0.0))


def tail_bound(norm0: float, lam: float, T: float) -> float:
    """Bound on the mass norm of the discarded tail of the time integral.

    From ``||u(t)|| <= norm0 * exp(-lam t)``:
    ``|| int_T^inf u dt || <= norm0 * exp(-lam T) / lam``.
    """
    return norm0 * math.exp(-lam * T) / lam


def v_error_vs_elliptic(system: FemSystem, run: Evolution, u_elliptic: np.ndarray) -> float:
    """Relative mass-norm distance between the time integral and the equilibrium."""
    free = system.free
    Mff = system.mass[free][:, free]
    diff = run.v_field[free] - u_elliptic[free]
    ref = u_elliptic[free]
    return float(
        np.sqrt(diff @ (Mff @ diff)) / max(np.sqrt(ref @ (Mff @ ref)), 1e-300)
    )
