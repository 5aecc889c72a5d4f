"""Acceptance suite: one test per shipped guarantee, tolerances pinned.

Each test states its own oracle or tolerance inline. The vortex refinement
test asserts the idealized second-order ratio and measures it honestly;
see the assertion message there for why the measurement deviates.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import higgspairs.vortex as vx
from higgspairs import betti, stability, strata

GOLDEN = Path(__file__).parent / "golden"


def mid_interval(k: int) -> Fraction:
    return Fraction(k, 2) + Fraction(1, 4)


def param_grid(ks_by_g: dict[int, list[int]]) -> list[betti.ModuliParams]:
    return [
        betti.ModuliParams(g=g, k=k, tau_bar=mid_interval(k))
        for g, ks in ks_by_g.items()
        for k in ks
    ]


THEOREM_GRID = param_grid({2: [5, 7, 9, 11], 3: [9, 11, 13, 15]})
SCAN_GRID = param_grid({2: [5, 7, 9, 11, 13, 15], 3: [9, 11, 13, 15]})


# -- 1: symmetric-product Poincare polynomials against a convolution oracle


def convolution_oracle(n: int, g: int) -> dict[int, int]:
    """Coefficients of (1+t)^2g * (1 + t^2 + t^4 + ...) truncated at t^n
    in the grading where x-degree j contributes t^(j + 2i)."""
    out: dict[int, int] = {}
    for j in range(0, min(2 * g, n) + 1):
        binom = math.comb(2 * g, j)
        for i in range(0, n - j + 1):
            out[j + 2 * i] = out.get(j + 2 * i, 0) + binom
    return {e: c for e, c in out.items() if c}


def test_symmetric_product_poincare_matches_convolution_oracle() -> None:
    start = time.monotonic()
    for n in range(0, 13):
        for g in range(0, 5):
            got = dict(betti.sym_poincare(n, g).as_pairs())
            assert got == convolution_oracle(n, g), (n, g)
    assert time.monotonic() - start < 1.0


# -- 2: closed-form extraction equals the stratum sum on the theorem grid


def mismatch_report(p: betti.ModuliParams) -> list[list[int]]:
    total = dict(betti.total_poincare(p).as_pairs())
    printed = dict(betti.theorem_extraction(p, betti.AS_PRINTED).as_pairs())
    return [
        [e, printed.get(e, 0) - total.get(e, 0)]
        for e in sorted(set(total) | set(printed))
        if printed.get(e, 0) != total.get(e, 0)
    ]


def test_closed_form_extraction_matches_stratum_sum() -> None:
    archive = []
    for p in THEOREM_GRID:
        start = time.monotonic()
        total = betti.total_poincare(p)
        corrected = betti.theorem_extraction(p, betti.CORRECTED)
        assert corrected == total, (p.g, p.k)
        diff = mismatch_report(p)
        assert diff, (p.g, p.k)
        archive.append(
            {"g": p.g, "k": p.k, "tau_bar": str(p.tau_bar), "diff": diff}
        )
        assert time.monotonic() - start < 10.0

    text = json.dumps({"as_printed_minus_total": archive}, indent=2) + "\n"
    path = GOLDEN / "extraction_as_printed_mismatch.json"
    if path.exists():
        assert path.read_text() == text
    else:
        path.write_text(text)


# -- 3: integrality and nonnegativity of the rank-2 pair polynomials


def test_pair_polynomials_are_integral_and_nonnegative() -> None:
    for p in THEOREM_GRID:
        poly = betti.pairs_poincare_n0(p)
        pairs = poly.as_pairs()
        assert pairs
        for e, c in pairs:
            assert isinstance(c, int) and not isinstance(c, bool), (p.g, p.k, e)
            assert c >= 0, (p.g, p.k, e)


# -- 4: stratum degree bookkeeping and the divisor-to-bundle degree map


def test_stratum_degree_bookkeeping() -> None:
    for p in THEOREM_GRID:
        for d in strata.d_range(p):
            desc = strata.stratum_descriptor(p, d)
            pairs = betti.stratum_poincare(p, d).as_pairs()
            low = 2 * (2 * d + p.g - p.k - 1)
            n1 = -2 * d + p.k + 2 * p.g - 2
            n2 = p.k - d
            assert pairs[0][0] == low == desc.index
            assert pairs[-1][0] == low + 2 * (n1 + n2) == desc.index + 2 * desc.dim


def random_divisor(rng: random.Random, total: int) -> dict[str, int]:
    out: dict[str, int] = {}
    remaining = total
    while remaining > 0:
        m = rng.randint(1, remaining)
        label = rng.choice(("u", "v", "w", "z"))
        out[label] = out.get(label, 0) + m
        remaining -= m
    return out


def test_divisor_bundle_map_degree() -> None:
    rng = random.Random(2026)
    checked = 0
    while checked < 1000:
        p = rng.choice(THEOREM_GRID)
        d = rng.choice(strata.d_range(p))
        desc = strata.stratum_descriptor(p, d)
        pair = strata.DivisorPair(
            D=random_divisor(rng, desc.n1), Dp=random_divisor(rng, desc.n2)
        )
        assert strata.divisor_bundle_map(pair, p) == p.k
        checked += 1
    assert checked == 1000


# -- 5: split-model stability scan


def all_split_models(p: betti.ModuliParams, dL: int):
    for psi_nonzero in (False, True):
        for theta_zero in (False, True):
            for s_placement in ("in_L", "in_Lc", "zero"):
                try:
                    yield stability.SplitHiggsPairModel(
                        g=p.g, k=p.k, dL=dL,
                        psi_nonzero=psi_nonzero,
                        theta_zero=theta_zero,
                        s_placement=s_placement,
                    )
                except ValueError:
                    continue


def test_tau_stable_models_are_higgs_stable() -> None:
    start = time.monotonic()
    scanned = 0
    for p in SCAN_GRID:
        for dL in range(-10, 11):
            for model in all_split_models(p, dL):
                scanned += 1
                if stability.is_tau_stable_split(model, p.tau_bar).stable:
                    assert stability.check_higgs_stability(model), (p.g, p.k, model)
    assert scanned > 1000
    assert time.monotonic() - start < 5.0


def test_fixed_point_models_stable_exactly_on_stratum_range() -> None:
    start = time.monotonic()
    for p in SCAN_GRID:
        rng_d = strata.d_range(p)
        for d in range(rng_d[0] - 3, rng_d[-1] + 2):
            n1 = -2 * d + p.k + 2 * p.g - 2
            n2 = p.k - d
            seeded = random.Random(100 * p.k + d)
            if n1 < 0 or n2 < 0:
                assert d not in rng_d
                with pytest.raises(ValueError):
                    strata.fixed_point_model(
                        strata.DivisorPair(D={}, Dp={}), p, d
                    )
                continue
            pair = strata.DivisorPair(
                D=random_divisor(seeded, n1), Dp=random_divisor(seeded, n2)
            )
            model = strata.fixed_point_model(pair, p, d)
            verdict = stability.is_tau_stable_split(model, p.tau_bar)
            assert verdict.stable == (d in rng_d), (p.g, p.k, d)
    assert time.monotonic() - start < 5.0


# -- 6: lattice energy decomposition identity


def test_energy_decomposition_identity_on_random_states() -> None:
    rng = np.random.default_rng(2026)
    for r1, r2 in ((1, 1), (2, 1)):
        p = vx.VortexParams(r1=r1, tau=1.0, r2=r2)
        for _ in range(100):
            s = vx.random_state(8, r1, r2, rng=rng)
            assert vx.decomposition_check(s, p) <= 1e-10


# -- 7: scalar vortex convergence and the negative-coupling obstruction


def test_scalar_vortex_solution_quality() -> None:
    start = time.monotonic()
    p = vx.VortexParams(r1=1, tau=1.0)
    rng = np.random.default_rng(7)
    s0 = vx.random_smooth_state(16, 1, 1, 1.0, rng, amplitude=0.1, tau=1.0)
    res = vx.solve(s0, p, tol=1e-14, max_iter=20000)
    assert res.converged

    s = res.state
    density = np.sum(np.abs(s.phi) ** 2, axis=(-1, -2))
    assert float(np.max(np.abs(density - p.tau))) <= 1e-5
    assert math.sqrt(res.moment_map_value) <= 1e-6
    half_mass = 0.5 * s.a * s.a * float(np.sum(density))
    assert abs(half_mass - 0.5 * p.tau * s.vol) <= 1e-4 * s.vol
    hist = res.energy_history
    assert all(b <= a for a, b in zip(hist, hist[1:]))

    p_neg = vx.VortexParams(r1=1, tau=-1.0)
    s0 = vx.random_smooth_state(
        16, 1, 1, 1.0, np.random.default_rng(7), amplitude=0.1, tau=-1.0
    )
    res_neg = vx.solve(s0, p_neg, tol=1e-12, max_iter=2000)
    assert not res_neg.converged
    floor = p_neg.tau**2 * s0.vol / 8.0
    assert res_neg.residual > floor
    assert time.monotonic() - start < 30.0


# -- 8: section-identity residual under grid refinement


def refined_section_residual(N: int) -> float:
    p = vx.VortexParams(r1=1, tau=1.0)
    rng = np.random.default_rng(11)
    s0 = vx.random_smooth_state(N, 1, 1, 1.0, rng, amplitude=0.3, tau=1.0)
    res = vx.solve(s0, p, tol=1e-13, max_iter=60000)
    assert res.converged, N
    return vx.l4_identity_check(res.state, p, tol=1e-8)["res1"]


def test_section_identity_residual_halving_ratio() -> None:
    coarse = refined_section_residual(16)
    fine = refined_section_residual(32)
    assert fine > 0.0
    ratio = coarse / fine
    assert 3.0 <= ratio <= 5.0, (
        f"expected the section-identity residual to drop by ~4x per grid "
        f"halving (second-order scheme), measured {ratio:.3f} "
        f"(coarse {coarse:.3e}, fine {fine:.3e}); on degree-0 trivial "
        f"bundles every converged flow limit has pointwise-constant |phi|, "
        f"for which the residual super-converges instead"
    )


# -- 9: analytic gradient against central differences, every block


def generic_state(N: int, r1: int, r2: int, rng: np.random.Generator) -> vx.LatticeState:
    def gen(*shape: int) -> np.ndarray:
        return 0.6 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    def ah(*shape: int) -> np.ndarray:
        m = gen(*shape)
        return 0.5 * (m - np.conj(np.swapaxes(m, -1, -2)))

    return vx.LatticeState(
        N=N, a=1.0 / N,
        A1=ah(2, N, N, r1, r1), A2=ah(2, N, N, r2, r2),
        theta1=gen(N, N, r1, r1), theta2=gen(N, N, r2, r2),
        phi=gen(N, N, r1, r2), psi=gen(N, N, r2, r1),
    )


def test_gradient_matches_central_differences_on_every_block() -> None:
    rng = np.random.default_rng(2026)
    rank_pairs = ((1, 1), (2, 1), (1, 2), (2, 2))
    h = 1e-6
    for i in range(20):
        r1, r2 = rank_pairs[i % len(rank_pairs)]
        p = vx.VortexParams(r1=r1, tau=1.1, r2=r2)
        s = generic_state(5, r1, r2, rng)
        grad = vx.residual_gradient(s, p)
        for name in ("A1", "A2", "theta1", "theta2", "phi", "psi"):
            block = getattr(s, name)
            v = rng.standard_normal(block.shape) + 1j * rng.standard_normal(block.shape)
            if name in ("A1", "A2"):
                v = 0.5 * (v - np.conj(np.swapaxes(v, -1, -2)))
            analytic = 2.0 * float(np.real(np.sum(np.conj(grad[name]) * v)))
            e_plus = vx.residual_energy(replace(s, **{name: block + h * v}), p)
            e_minus = vx.residual_energy(replace(s, **{name: block - h * v}), p)
            fd = (e_plus - e_minus) / (2.0 * h)
            scale = max(abs(analytic), abs(fd), 1e-12)
            assert abs(analytic - fd) / scale <= 1e-6, (i, name)
