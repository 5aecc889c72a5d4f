"""Analytic gradient of the residual energy against finite differences."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

import higgspairs.vortex as vx

BLOCKS = ("A1", "A2", "theta1", "theta2", "phi", "psi")


def antiherm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m - np.conj(np.swapaxes(m, -1, -2)))


def dense_state(
    N: int, r1: int, r2: int, rng: np.random.Generator, amplitude: float = 0.5
) -> vx.LatticeState:
    """Generic state with every block active (no special structure)."""

    def gen(*shape: int) -> np.ndarray:
        return amplitude * (
            rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        )

    return vx.LatticeState(
        N=N,
        a=1.0 / N,
        A1=antiherm(gen(2, N, N, r1, r1)),
        A2=antiherm(gen(2, N, N, r2, r2)),
        theta1=gen(N, N, r1, r1),
        theta2=gen(N, N, r2, r2),
        phi=gen(N, N, r1, r2),
        psi=gen(N, N, r2, r1),
    )


def direction(s: vx.LatticeState, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Unit-norm tangent direction (A blocks anti-Hermitian)."""
    v = {}
    for name in BLOCKS:
        shape = getattr(s, name).shape
        raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        v[name] = antiherm(raw) if name in ("A1", "A2") else raw
    norm = np.sqrt(sum(float(np.sum(np.abs(b) ** 2)) for b in v.values()))
    return {name: b / norm for name, b in v.items()}


def shifted(s: vx.LatticeState, v: dict[str, np.ndarray], t: float) -> vx.LatticeState:
    return replace(s, **{name: getattr(s, name) + t * v[name] for name in BLOCKS})


def analytic_slope(grad: dict[str, np.ndarray], v: dict[str, np.ndarray]) -> float:
    return 2.0 * sum(
        float(np.real(np.sum(np.conj(grad[name]) * v[name]))) for name in BLOCKS
    )


def fd_slope(
    s: vx.LatticeState, p: vx.VortexParams, v: dict[str, np.ndarray], h: float = 1e-6
) -> float:
    plus = vx.residual_energy(shifted(s, v, h), p)
    minus = vx.residual_energy(shifted(s, v, -h), p)
    return (plus - minus) / (2.0 * h)


def test_gradient_matches_finite_difference() -> None:
    rng = np.random.default_rng(23)
    for r1, r2 in ((1, 1), (2, 1), (2, 2)):
        p = vx.VortexParams(r1=r1, tau=1.0, r2=r2)
        s = dense_state(6, r1, r2, rng)
        grad = vx.residual_gradient(s, p)
        for _ in range(4):
            v = direction(s, rng)
            an = analytic_slope(grad, v)
            fd = fd_slope(s, p, v)
            assert abs(fd - an) <= 1e-6 * max(1.0, abs(an))


def test_gradient_matches_fd_with_degrees_and_volume() -> None:
    rng = np.random.default_rng(29)
    p = vx.VortexParams(r1=2, tau=3.0, r2=1, d1=1, vol=2.0)
    s = replace(dense_state(6, 2, 1, rng, amplitude=0.8), a=np.sqrt(2.0) / 6)
    grad = vx.residual_gradient(s, p)
    for _ in range(4):
        v = direction(s, rng)
        an = analytic_slope(grad, v)
        fd = fd_slope(s, p, v)
        assert abs(fd - an) <= 1e-6 * max(1.0, abs(an))


def test_single_block_directions() -> None:
    rng = np.random.default_rng(31)
    p = vx.VortexParams(r1=2, tau=1.5, r2=2)
    s = dense_state(6, 2, 2, rng)
    grad = vx.residual_gradient(s, p)
    for name in BLOCKS:
        full = direction(s, rng)
        v = {k: b if k == name else np.zeros_like(b) for k, b in full.items()}
        an = analytic_slope(grad, v)
        fd = fd_slope(s, p, v)
        assert abs(fd - an) <= 1e-6 * max(1.0, abs(an)), name


def test_a_gradient_blocks_are_anti_hermitian() -> None:
    rng = np.random.default_rng(37)
    s = dense_state(6, 2, 1, rng)
    grad = vx.residual_gradient(s, vx.VortexParams(r1=2, tau=1.0))
    for name in ("A1", "A2"):
        g = grad[name]
        assert float(np.max(np.abs(g + np.conj(np.swapaxes(g, -1, -2))))) <= 1e-14


def test_branch_freezes_blocks() -> None:
    rng = np.random.default_rng(41)
    s = dense_state(6, 2, 2, rng)
    p = vx.VortexParams(r1=2, tau=1.0, r2=2)
    full = vx.residual_gradient(s, p)
    for branch, frozen in (("phi", ("psi", "theta2")), ("psi", ("phi", "theta1"))):
        grad = vx.residual_gradient(s, p, branch)
        for name in BLOCKS:
            if name in frozen:
                assert not grad[name].any()
            else:
                assert np.array_equal(grad[name], full[name])


def test_gradient_vanishes_at_exact_solution() -> None:
    p = vx.VortexParams(r1=1, tau=1.0)
    s = vx.constant_solution_state(8, p)
    grad = vx.residual_gradient(s, p)
    for name in BLOCKS:
        assert float(np.max(np.abs(grad[name]))) <= 1e-14, name


def test_flow_step_decreases_energy() -> None:
    rng = np.random.default_rng(43)
    p = vx.VortexParams(r1=1, tau=1.0)
    s = vx.random_state(8, 1, rng=rng, amplitude=0.5)
    energy = vx.residual_energy(s, p)
    for _ in range(5):
        s = vx.flow_step(s, p, 1.0)
        new = vx.residual_energy(s, p)
        assert new < energy
        energy = new


def test_flow_step_fixed_point_returns_same_object() -> None:
    p = vx.VortexParams(r1=1, tau=1.0)
    s = vx.constant_solution_state(8, p)
    assert vx.flow_step(s, p, 1.0) is s


def test_flow_step_branch_keeps_frozen_blocks() -> None:
    rng = np.random.default_rng(47)
    p = vx.VortexParams(r1=2, tau=1.0, r2=2)
    s = dense_state(6, 2, 2, rng)
    out = vx.flow_step(s, p, 0.5, branch="phi")
    assert np.array_equal(out.psi, s.psi)
    assert np.array_equal(out.theta2, s.theta2)
    assert not np.array_equal(out.phi, s.phi)
