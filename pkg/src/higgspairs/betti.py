"""Poincare polynomials of rank-2 Higgs-pair moduli spaces.

Two independent routes to the same polynomial:

* the direct Morse sum ``total_poincare`` = minimum-stratum contribution
  (``pairs_poincare_n0``, the tau-stable holomorphic-pairs moduli) plus
  index-shifted symmetric-product polynomials over the higher strata
  (``stratum_poincare``);
* the single generating-function extraction ``theorem_extraction``, which
  reads the same answer off as the coefficient of x^{k+2g} y^{k+2g} in a
  two-part series.

The extraction's strata prefactor carries a y-exponent convention switch:
``as_printed`` uses y^(d-2g) and ``corrected`` uses y^(d+2g).  Only the
corrected convention is consistent with the symmetric-product degrees of
the strata; the as-printed one is still computed so the discrepancy can be
reported rather than silently repaired.  Both floor occurrences in the
generating function are taken of the normalized parameter tau_bar.

All arithmetic is exact (integer/Fraction series).  Default truncation
windows are generous (x, y up to k+2g; t from -2(k+2g) to 2(k+2g)) so no
coefficient extraction ever clips for valid parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .series import (
    FormulaIntegrityError,
    Series,
    coeff_extract,
    exact_divide,
    expand_geometric,
    monomial,
    mul,
    pow_binomial,
    render,
)
from .stability import require_valid
from .strata import d_range, stratum_descriptor

AS_PRINTED = "as_printed"
CORRECTED = "corrected"
_CONVENTIONS = (AS_PRINTED, CORRECTED)


@dataclass(frozen=True)
class ModuliParams:
    """Parameters of the moduli problem.

    tau_bar is the stability parameter rescaled to slope units; it must be
    an exact rational (validation rejects floats).  The rank is fixed at 2.
    """

    g: int
    k: int
    tau_bar: Fraction
    r: int = 2


@dataclass(frozen=True)
class PoincarePolynomial:
    """A polynomial in t with integer coefficients and exponents >= 0."""

    series: Series

    def __post_init__(self) -> None:
        s = self.series
        if s.vars not in ((), ("t",)):
            raise ValueError(f"expected a series in t only, got vars {s.vars}")
        for key, coeff in s.coeffs.items():
            if key and key[0] < 0:
                raise FormulaIntegrityError(
                    f"negative t-exponent {key[0]} survives in {render(s)}"
                )
            if not isinstance(coeff, int):
                raise FormulaIntegrityError(
                    f"non-integer coefficient {coeff} at t^{key[0] if key else 0}"
                )

    @classmethod
    def from_pairs(cls, pairs, t_upper: int | None = None) -> "PoincarePolynomial":
        """Build from (exponent, coefficient) pairs; window defaults to max exponent."""
        pairs = [(int(e), int(c)) for e, c in pairs]
        hi = max((e for e, _ in pairs), default=0)
        upper = hi if t_upper is None else t_upper
        coeffs = {(e,): c for e, c in pairs if c}
        return cls(Series(vars=("t",), upper={"t": upper}, coeffs=coeffs))

    def coeff(self, exponent: int) -> int:
        return self.series.coeffs.get((exponent,), 0)

    def as_pairs(self) -> list[tuple[int, int]]:
        """Ordered (exponent, coefficient) pairs."""
        return sorted((key[0] if key else 0, c) for key, c in self.series.coeffs.items())

    def degree(self) -> int:
        """Largest exponent with nonzero coefficient; -1 for the zero polynomial."""
        return max((e for e, _ in self.as_pairs()), default=-1)

    def min_degree(self) -> int:
        return min((e for e, _ in self.as_pairs()), default=-1)

    def coefficient_sum(self) -> int:
        return sum(c for _, c in self.as_pairs())

    def __add__(self, other: "PoincarePolynomial") -> "PoincarePolynomial":
        return PoincarePolynomial(self.series + other.series)

    def __mul__(self, other: "PoincarePolynomial") -> "PoincarePolynomial":
        return PoincarePolynomial(self.series * other.series)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PoincarePolynomial):
            return NotImplemented
        return self.series == other.series

    def __str__(self) -> str:
        return render(self.series)


def _t_window(p) -> int:
    return 2 * (p.k + 2 * p.g)


def _macdonald_series(g: int, var: str, t_upper: int, v_upper: int) -> Series:
    """(1 + t*var)^(2g) / ((1 - var)(1 - t^2 var)) in the given window.

    Windows are padded to hold at least one power of each factor so the
    degenerate extraction targets (n = 0) still see well-formed series.
    """
    upper = {"t": max(t_upper, 2), var: max(v_upper, 1)}
    base = monomial(1, {"t": 1, var: 1}, upper)
    num = pow_binomial(Series.constant(1, ("t", var), upper) + base, 2 * g)
    geo1 = expand_geometric(monomial(1, {var: 1}, upper))
    geo2 = expand_geometric(monomial(1, {"t": 2, var: 1}, upper))
    return mul(mul(num, geo1), geo2)


def _macdonald_coeff(n: int, g: int, t_upper: int) -> Series:
    """Coefficient of x^n in the Macdonald series, as a t-series."""
    return coeff_extract(_macdonald_series(g, "x", t_upper, n), {"x": n})


def sym_poincare(n: int, g: int) -> PoincarePolynomial:
    """Poincare polynomial of the n-th symmetric product of a genus-g surface.

    Coefficient of x^n in (1+tx)^(2g) / ((1-x)(1-t^2 x)); degree 2n.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    if not isinstance(g, int) or isinstance(g, bool) or g < 0:
        raise ValueError(f"g must be a nonnegative integer, got {g!r}")
    return PoincarePolynomial(_macdonald_coeff(n, g, 2 * n))


def _one_minus_t2(t_upper: int, t_lower: int) -> Series:
    return Series(
        vars=("t",),
        upper={"t": t_upper},
        t_lower=t_lower,
        coeffs={(0,): 1, (2,): -1},
    )


def _pairs_bracket_coeff(p) -> Series:
    """Coefficient of x^(k-1-floor(tau_bar)) of the minimum-stratum series.

    The series is (1+t)^(2g) (1+tx)^(2g) / ((1-x)(1-t^2 x)) times the
    bracket t^(2(k-1-f)) / (1 - t^-2 x) - t^(2(g+1-k+2f)) / (1 - t^4 x)
    with f = floor(tau_bar); the global 1/(1-t^2) is divided off by the
    caller.  Returned before division, as a Laurent polynomial in t.
    """
    g, k = p.g, p.k
    f = math.floor(Fraction(p.tau_bar))
    shift = k - 1 - f
    t_up = _t_window(p)
    upper = {"t": t_up, "x": shift}
    t_lower = -t_up

    one = Series.constant(1, ("t", "x"), upper, t_lower)
    num_t = pow_binomial(one + monomial(1, {"t": 1}, upper, t_lower), 2 * g)
    num_tx = pow_binomial(one + monomial(1, {"t": 1, "x": 1}, upper, t_lower), 2 * g)
    geo_x = expand_geometric(monomial(1, {"x": 1}, upper, t_lower))
    geo_t2x = expand_geometric(monomial(1, {"t": 2, "x": 1}, upper, t_lower))

    bracket = mul(
        monomial(1, {"t": 2 * shift}, upper, t_lower),
        expand_geometric(monomial(1, {"t": -2, "x": 1}, upper, t_lower)),
    ) - mul(
        monomial(1, {"t": 2 * (g + 1 - k + 2 * f)}, upper, t_lower),
        expand_geometric(monomial(1, {"t": 4, "x": 1}, upper, t_lower)),
    )

    prod = mul(mul(mul(mul(num_t, num_tx), geo_x), geo_t2x), bracket)
    return coeff_extract(prod, {"x": shift})


def pairs_poincare_n0(p) -> PoincarePolynomial:
    """Poincare polynomial of the tau-stable holomorphic-pairs moduli (minimum stratum).

    Negative t-exponents must cancel between the two bracket terms and the
    division by (1 - t^2) must be exact; either failure raises
    FormulaIntegrityError.
    """
    require_valid(p)
    numerator = _pairs_bracket_coeff(p)
    negatives = sorted(key[0] for key in numerator.coeffs if key[0] < 0)
    if negatives:
        raise FormulaIntegrityError(
            f"negative t-exponents {negatives} survive the bracket difference"
        )
    t_up = _t_window(p)
    quotient = exact_divide(numerator, _one_minus_t2(t_up, -t_up))
    return PoincarePolynomial(quotient)


def stratum_poincare(p, d: int) -> PoincarePolynomial:
    """t^index times the two symmetric-product polynomials of the stratum."""
    require_valid(p)
    desc = stratum_descriptor(p, d)
    t_up = _t_window(p)
    lead = monomial(1, {"t": desc.index}, {"t": t_up})
    f1 = _macdonald_coeff(desc.n1, p.g, t_up)
    f2 = _macdonald_coeff(desc.n2, p.g, t_up)
    return PoincarePolynomial(mul(mul(lead, f1), f2))


def total_poincare(p) -> PoincarePolynomial:
    """Direct Morse sum: minimum stratum plus all higher strata."""
    require_valid(p)
    total = pairs_poincare_n0(p)
    for d in d_range(p):
        total = total + stratum_poincare(p, d)
    return total


def theorem_extraction(p, y_exponent_convention: str = CORRECTED) -> PoincarePolynomial:
    """Coefficient of x^(k+2g) y^(k+2g) in the displayed two-part series.

    The minimum-stratum part carries prefactor x^(2g+1+floor(tau_bar))
    y^(k+2g), so its y-extraction is trivial and its x-extraction reduces
    to the pairs formula.  The strata part is, for each d in the range,

        t^(2(2d+g-k-1)) x^(2d+2) y^(Y) (1+tx)^(2g) (1+ty)^(2g)
            / ((1-x)(1-y)(1-t^2 x)(1-t^2 y))

    with Y = d - 2g under ``as_printed`` and Y = d + 2g under
    ``corrected``.  Only ``corrected`` is expected to match total_poincare.
    """
    if y_exponent_convention not in _CONVENTIONS:
        raise ValueError(
            f"y_exponent_convention must be one of {_CONVENTIONS}, "
            f"got {y_exponent_convention!r}"
        )
    require_valid(p)
    g, k = p.g, p.k
    t_up = _t_window(p)
    target = k + 2 * g

    result = pairs_poincare_n0(p)
    for d in d_range(p):
        index = 2 * (2 * d + g - k - 1)
        x_target = target - (2 * d + 2)
        if y_exponent_convention == CORRECTED:
            y_target = target - (d + 2 * g)
        else:
            y_target = target - (d - 2 * g)
        x_side = coeff_extract(
            _macdonald_series(g, "x", t_up, x_target), {"x": x_target}
        )
        y_side = coeff_extract(
            _macdonald_series(g, "y", t_up, y_target), {"y": y_target}
        )
        lead = monomial(1, {"t": index}, {"t": t_up})
        result = result + PoincarePolynomial(mul(mul(lead, x_side), y_side))
    return result
