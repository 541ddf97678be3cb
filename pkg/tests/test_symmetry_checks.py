"""Flux spread, angular spectra, transmission mismatch, probe deviations."""

import math

import numpy as np
import pytest

from phaselab.fem2d import (
    BoundaryFlux,
    CircleSampler,
    assemble_system,
    generate_mesh,
    recover_boundary_flux,
    solve_elliptic,
)
from phaselab.geometry import DomainSpec, PhaseConfig, PhaseRegion
from phaselab.radial_core import build_auxiliary_profile, solve_radial
from phaselab.symmetry_checks import (
    angular_spectrum,
    angular_spectrum_of,
    flux_residual,
    probe_deviation,
    radiality_verdict,
    spectrum_from_samples,
    transmission_residual,
)


def synthetic_flux(values, weights=None, component=None):
    values = np.asarray(values, float)
    n = len(values)
    w = np.ones(n) if weights is None else np.asarray(weights, float)
    comp = np.zeros(n, dtype=int) if component is None else np.asarray(component)
    return BoundaryFlux(
        vertex_ids=np.arange(n),
        values=values,
        weights=w,
        component=comp,
        total=float((w * values).sum()),
    )


def test_flux_residual_cosine_example():
    # flux 1 + 0.1 cos(theta): mean 1, weighted std 0.1/sqrt(2)
    th = 2 * np.pi * np.arange(720) / 720
    stats = flux_residual(synthetic_flux(1.0 + 0.1 * np.cos(th)))
    assert abs(stats.mean - 1.0) < 1e-12
    assert abs(stats.rel_deviation - 0.1 / math.sqrt(2)) < 1e-6
    assert not stats.absolute_fallback


def test_flux_residual_zero_mean_guard():
    th = 2 * np.pi * np.arange(64) / 64
    stats = flux_residual(synthetic_flux(0.3 * np.sin(th)))
    assert stats.absolute_fallback
    # reported value is the absolute spread, not a ratio against noise
    assert abs(stats.rel_deviation - 0.3 / math.sqrt(2)) < 1e-6


def test_flux_residual_per_component():
    # two loops with different constants: zero spread on each, despite the gap
    vals = np.concatenate([np.full(40, -0.23), np.full(40, -0.29)])
    comp = np.repeat([0, 1], 40)
    stats = flux_residual(synthetic_flux(vals, component=comp))
    assert stats.rel_deviation < 1e-14
    assert stats.component_means == pytest.approx((-0.23, -0.29), abs=1e-14)
    # the overall mean still averages both loops
    assert abs(stats.mean - (-0.26)) < 1e-15


def test_flux_residual_scale_invariant():
    rng = np.random.default_rng(11)
    vals = -0.5 + 0.01 * rng.standard_normal(100)
    s1 = flux_residual(synthetic_flux(vals))
    s2 = flux_residual(synthetic_flux(4 * vals))
    assert s1.rel_deviation == s2.rel_deviation


def test_spectrum_radial_field_is_silent():
    radii = [0.25, 0.5, 0.75]
    spec = angular_spectrum_of(lambda P: 1.0 - np.linalg.norm(P, axis=1) ** 2, radii)
    assert spec.perp_energy < 1e-24
    assert spec.nonradial_fraction < 1e-12
    assert radiality_verdict(spec)
    assert spec.dominant_mode in (0, *range(1, 17))  # irrelevant when silent


def test_spectrum_coordinate_field_is_pure_mode_one():
    radii = [0.3, 0.6]
    spec = angular_spectrum_of(lambda P: P[:, 0], radii)
    for i, r in enumerate(radii):
        assert abs(spec.cos_coeffs[i, 1] - r) < 1e-12
        assert abs(spec.sin_coeffs[i, 1]) < 1e-12
        others = np.concatenate([spec.cos_coeffs[i, 2:], spec.sin_coeffs[i, 2:]])
        assert np.max(np.abs(others)) < 1e-12
        assert abs(spec.cos_coeffs[i, 0]) < 1e-12  # zero mean
    assert spec.dominant_mode == 1
    assert not radiality_verdict(spec)
    # all energy is non-radial here
    assert abs(spec.nonradial_fraction - 1.0) < 1e-12


def test_spectrum_fraction_hand_computed():
    # f = 2 + cos(3 theta) on one circle of radius 1:
    # E_perp = 1, E_total = 2*4 + 1 = 9, fraction = 1/3
    th = 2 * np.pi * (np.arange(256) + 0.5) / 256
    spec = spectrum_from_samples([1.0], (2.0 + np.cos(3 * th))[None, :])
    assert abs(spec.perp_energy - 1.0) < 1e-12
    assert abs(spec.total_energy - 9.0) < 1e-12
    assert abs(spec.nonradial_fraction - 1.0 / 3.0) < 1e-12
    assert spec.dominant_mode == 3


def test_spectrum_parseval_bound():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        f = rng.standard_normal(256)
        spec = spectrum_from_samples([1.0], f[None, :])
        energy = float(
            (spec.cos_coeffs[0, 1:] ** 2 + spec.sin_coeffs[0, 1:] ** 2).sum()
        )
        assert energy <= 2.0 * float((f**2).mean()) + 1e-12


def test_spectrum_scale_invariance():
    th = 2 * np.pi * (np.arange(256) + 0.5) / 256
    f = 1.0 + 0.01 * np.cos(2 * th) + 0.003 * np.sin(5 * th)
    s1 = spectrum_from_samples([0.5], f[None, :])
    s2 = spectrum_from_samples([0.5], (2 * f)[None, :])
    assert s1.nonradial_fraction == s2.nonradial_fraction
    assert s1.dominant_mode == s2.dominant_mode


def test_spectrum_input_validation():
    with pytest.raises(ValueError):
        spectrum_from_samples([0.5, 0.75], np.ones((1, 64)))
    with pytest.raises(ValueError):
        spectrum_from_samples([0.5], np.ones((1, 16)), k_max=8)


def test_mesh_spectrum_concentric_vs_displaced():
    conc = PhaseConfig(
        domain=DomainSpec("ball"), phases=(PhaseRegion(shape="disk", sigma=2.0, radius=0.5),)
    )
    disp = PhaseConfig(
        domain=DomainSpec("ball"),
        phases=(PhaseRegion(shape="disk", sigma=2.0, center=(0.2, 0.0), radius=0.3),),
    )
    radii = [0.25, 0.5, 0.75]
    sys_c = assemble_system(generate_mesh(conc, 16), [1.0, 2.0], 1.0)
    spec_c = angular_spectrum(sys_c.mesh, solve_elliptic(sys_c).u, radii)
    assert spec_c.nonradial_fraction < 1e-3
    sys_d = assemble_system(generate_mesh(disp, 16), [1.0, 2.0], 1.0)
    spec_d = angular_spectrum(sys_d.mesh, solve_elliptic(sys_d).u, radii)
    assert spec_d.nonradial_fraction > 1e-2
    assert spec_d.dominant_mode == 1


def test_transmission_residual_concentric_small_displaced_large():
    g = [1.0]
    aux = build_auxiliary_profile(DomainSpec("ball"), g)
    conc = PhaseConfig(
        domain=DomainSpec("ball"), phases=(PhaseRegion(shape="disk", sigma=2.0, radius=0.5),)
    )
    sys_c = assemble_system(generate_mesh(conc, 16), [1.0, 2.0], 1.0)
    t_c = transmission_residual(sys_c, solve_elliptic(sys_c).u, aux)
    assert t_c.defined
    assert t_c.residual < 5e-3
    assert abs(t_c.core_area - math.pi * 0.25) < 1e-2

    disp = PhaseConfig(
        domain=DomainSpec("ball"),
        phases=(PhaseRegion(shape="disk", sigma=2.0, center=(0.2, 0.0), radius=0.3),),
    )
    sys_d = assemble_system(generate_mesh(disp, 16), [1.0, 2.0], 1.0)
    t_d = transmission_residual(sys_d, solve_elliptic(sys_d).u, aux)
    assert t_d.residual > 0.05


def test_transmission_residual_vacuous_without_inclusions():
    cfg = PhaseConfig(domain=DomainSpec("ball"))
    sys_ = assemble_system(generate_mesh(cfg, 8), [1.0], 1.0)
    t = transmission_residual(sys_, solve_elliptic(sys_).u, build_auxiliary_profile(cfg.domain, [1.0]))
    assert not t.defined
    assert t.residual == 0.0
    assert t.core_area == 0.0


def test_transmission_residual_scale_invariant():
    conc = PhaseConfig(
        domain=DomainSpec("ball"), phases=(PhaseRegion(shape="disk", sigma=2.0, radius=0.5),)
    )
    sys_ = assemble_system(generate_mesh(conc, 8), [1.0, 2.0], 1.0)
    u = solve_elliptic(sys_).u
    aux1 = build_auxiliary_profile(DomainSpec("ball"), [1.0])
    aux2 = build_auxiliary_profile(DomainSpec("ball"), [2.0])
    r1 = transmission_residual(sys_, u, aux1).residual
    r2 = transmission_residual(sys_, 2 * u, aux2).residual
    assert abs(r1 - r2) < 1e-13


def test_probe_deviation_radial_and_perturbed():
    conc = PhaseConfig(
        domain=DomainSpec("ball"), phases=(PhaseRegion(shape="disk", sigma=2.0, radius=0.5),)
    )
    mesh = generate_mesh(conc, 12)
    sys_ = assemble_system(mesh, [1.0, 2.0], 1.0)
    prof = solve_radial([0.0, 0.5, 1.0], [2.0, 1.0], [1.0])
    u = prof(np.linalg.norm(mesh.vertices, axis=1))
    s = CircleSampler(mesh, 0.75)
    ps = probe_deviation(s, u, sys_.sigma_e)
    assert ps.dev_u < 1e-12
    assert ps.dev_flux < 1e-10
    assert not ps.u_absolute and not ps.flux_absolute

    # sup-norm semantics: a mode-one perturbation of relative size eps shows
    # up as a deviation of about eps * r / mean
    eps = 1e-3
    u2 = u + eps * mesh.vertices[:, 0]
    ps2 = probe_deviation(s, u2, sys_.sigma_e)
    vals = s.values(u2)
    expect = np.max(np.abs(vals - vals.mean())) / abs(vals.mean())
    assert ps2.dev_u == expect
    assert ps2.dev_u > 5 * ps.dev_u


def test_probe_deviation_zero_mean_guard():
    cfg = PhaseConfig(domain=DomainSpec("ball"))
    mesh = generate_mesh(cfg, 8)
    s = CircleSampler(mesh, 0.75)
    u = mesh.vertices[:, 0].copy()  # odd field: zero angular mean on any circle
    ps = probe_deviation(s, u)
    assert ps.u_absolute
    # absolute sup, not a ratio; samples sit at half-offset angles, so the
    # largest |x| on the circle is 0.75 cos(pi / sectors)
    assert ps.dev_u == pytest.approx(0.75 * math.cos(math.pi / mesh.sectors), rel=1e-12)
