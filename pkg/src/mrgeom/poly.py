"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Polynomial` maps exponent vectors to :class:`fractions.Fraction`
coefficients.  Variables are dense integer indices ``0, 1, 2, ...``; display
names only matter when printing or parsing (``y1, y2, ...`` by default,
``x1, x2, ...`` for Euclidean boxes and ``xi, eta, zeta`` for the Heisenberg
group).

>>> y1, y2 = Polynomial.variable(0), Polynomial.variable(1)
>>> str((y1 + y2) * (y1 - y2))
'y1^2 - y2^2'
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational, Real
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]

HEISENBERG_NAMES = ("xi", "eta", "zeta")


class UnboundVariableError(ValueError):
    """Raised when a polynomial is evaluated without a value for one of its variables."""


def _trim(exponent: Iterable[int]) -> Exponent:
    exp = list(exponent)
    for e in exp:
        if not isinstance(e, (int, np.integer)) or e < 0:
            raise ValueError(f"exponents must be nonnegative integers, got {exponent!r}")
    while exp and exp[-1] == 0:
        exp.pop()
    return tuple(int(e) for e in exp)


def _add_exponents(a: Exponent, b: Exponent) -> Exponent:
    if len(a) < len(b):
        a, b = b, a
    return tuple(x + y for x, y in zip(a, b)) + a[len(b):]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    if isinstance(c, Rational):
        return Fraction(c.numerator, c.denominator)
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c))
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as a polynomial coefficient")


def variable_index(name: str, names: Sequence[str] | None = None) -> int:
    """Index of a variable given its display name.

    Without an explicit ``names`` list the default registry is used: ``yK`` and
    ``xK`` map to ``K - 1`` and ``xi, eta, zeta`` map to ``0, 1, 2``.
    """
    if names is not None:
        try:
            return list(names).index(name)
        except ValueError:
            raise ValueError(f"unknown variable {name!r}") from None
    if name in HEISENBERG_NAMES:
        return HEISENBERG_NAMES.index(name)
    m = re.fullmatch(r"[xy]([1-9][0-9]*)", name)
    if m is None:
        raise ValueError(f"unknown variable {name!r}")
    return int(m.group(1)) - 1


def default_names(nvars: int, prefix: str = "y") -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(nvars))


class Polynomial:
    """Immutable sparse polynomial over ``Q`` in indexed variables."""

    __slots__ = ("_terms", "_float_terms")

    def __init__(self, terms: Mapping[Iterable[int], object] | None = None):
        normalized: dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            key = _trim(exp)
            c = normalized.get(key, Fraction(0)) + _as_fraction(coeff)
            if c:
                normalized[key] = c
            else:
                normalized.pop(key, None)
        self._terms = normalized
        self._float_terms = None

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls({(): c})

    @classmethod
    def variable(cls, index: int) -> "Polynomial":
        if index < 0:
            raise ValueError("variable index must be nonnegative")
        return cls({(0,) * index + (1,): 1})

    @classmethod
    def _coerce(cls, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, (Real, str)):
            return cls.constant(other)
        return NotImplemented

    # basic queries ------------------------------------------------------

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def nvars(self) -> int:
        """One more than the largest variable index that occurs."""
        return max((len(e) for e in self._terms), default=0)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for exp, c in other._terms.items():
            out[exp] = out.get(exp, Fraction(0)) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = _add_exponents(e1, e2)
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            if other.degree > 0:
                return NotImplemented
            other = other.constant_term()
        c = _as_fraction(other)
        if c == 0:
            raise ZeroDivisionError("polynomial division by zero")
        return Polynomial({e: v / c for e, v in self._terms.items()})

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # calculus -----------------------------------------------------------

    def partial(self, i: int) -> "Polynomial":
        out: dict[Exponent, Fraction] = {}
        for exp, c in self._terms.items():
            if i < len(exp) and exp[i] > 0:
                new = list(exp)
                new[i] -= 1
                out[tuple(new)] = c * exp[i]
        return Polynomial(out)

    def gradient(self, nvars: int | None = None) -> list["Polynomial"]:
        n = self.nvars if nvars is None else nvars
        return [self.partial(i) for i in range(n)]

    def hessian(self, variables: Sequence[int] | int | None = None) -> list[list["Polynomial"]]:
        if variables is None:
            variables = range(self.nvars)
        elif isinstance(variables, (int, np.integer)):
            variables = range(variables)
        variables = list(variables)
        first = {i: self.partial(i) for i in variables}
        return [[first[i].partial(j) for j in variables] for i in variables]

    # evaluation ---------------------------------------------------------

    def _check_point(self, n_supplied: int) -> None:
        if self.nvars > n_supplied:
            missing = min(
                i for e in self._terms for i, k in enumerate(e) if k and i >= n_supplied
            )
            raise UnboundVariableError(f"unbound variable with index {missing}")

    def eval(self, point: Sequence[float] | Mapping[int, float]) -> float:
        """Evaluate at one point (a sequence, or a mapping ``index -> value``)."""
        if isinstance(point, Mapping):
            for e in self._terms:
                for i, k in enumerate(e):
                    if k and i not in point:
                        raise UnboundVariableError(f"unbound variable with index {i}")
            point = [float(point.get(i, 0.0)) for i in range(self.nvars)]
        else:
            point = [float(v) for v in point]
            self._check_point(len(point))
        total = 0.0
        for exp, c in self._float_items():
            term = c
            for i, k in enumerate(exp):
                if k:
                    term *= point[i] ** k
            total += term
        return total

    def eval_exact(self, point: Sequence) -> Fraction:
        point = [_as_fraction(v) for v in point]
        self._check_point(len(point))
        total = Fraction(0)
        for exp, c in self._terms.items():
            term = c
            for i, k in enumerate(exp):
                if k:
                    term *= point[i] ** k
            total += term
        return total

    def __call__(self, points) -> np.ndarray:
        """Vectorised evaluation; ``points`` has shape ``(..., n)``."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1)
        self._check_point(pts.shape[-1])
        out = np.zeros(pts.shape[:-1])
        for exp, c in self._float_items():
            term = np.full(pts.shape[:-1], c)
            for i, k in enumerate(exp):
                if k:
                    term = term * pts[..., i] ** k
            out = out + term
        return out

    def _float_items(self):
        if self._float_terms is None:
            # sorted so that float summation order is reproducible
            self._float_terms = tuple(
                (e, float(c)) for e, c in sorted(self._terms.items())
            )
        return self._float_terms

    # text ---------------------------------------------------------------

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self._terms:
            return "0"
        names = names or default_names(self.nvars)
        parts = []
        # graded order, highest degree first
        for exp, c in sorted(self._terms.items(), key=lambda t: (-sum(t[0]), tuple(-k for k in t[0]))):
            factors = [
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(exp) if k
            ]
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"Polynomial({self.to_string()!r})"


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def poly_partial(p: Polynomial, i: int) -> Polynomial:
    return p.partial(i)


def poly_eval(p: Polynomial, point) -> float:
    return p.eval(point)


def poly_hessian(p: Polynomial, variables: Sequence[int]) -> list[list[Polynomial]]:
    return p.hessian(variables)


def variables(n: int) -> tuple[Polynomial, ...]:
    """The coordinate polynomials ``y1, ..., yn``."""
    return tuple(Polynomial.variable(i) for i in range(n))


_TERM_SPLIT = re.compile(r"\s*([+-])\s*")
_NUMBER = re.compile(r"[0-9]+(?:\.[0-9]*)?(?:/[0-9]+)?")
_POWER = re.compile(r"([A-Za-z][A-Za-z0-9_]*)(?:\^([0-9]+))?")


def parse_polynomial(text: str, names: Sequence[str] | None = None) -> Polynomial:
    """Parse the CLI text form, e.g. ``"3/2*y1^2*y2 - 1*y3"``.

    Factors are joined by a mandatory ``*`` and powers use ``^``.  Parentheses
    are not supported.
    """
    src = text.strip()
    if not src:
        raise ValueError("empty polynomial")
    if src[0] not in "+-":
        src = "+" + src
    pieces = _TERM_SPLIT.split(src)
    # split yields ['', sign, term, sign, term, ...]
    if pieces[0].strip():
        raise ValueError(f"cannot parse polynomial {text!r}")
    total = Polynomial()
    for sign, term in zip(pieces[1::2], pieces[2::2]):
        term = term.strip()
        if not term:
            raise ValueError(f"dangling sign in {text!r}")
        coeff = Fraction(-1 if sign == "-" else 1)
        exps: dict[int, int] = {}
        for factor in term.split("*"):
            factor = factor.strip()
            if _NUMBER.fullmatch(factor):
                coeff *= Fraction(factor)
                continue
            m = _POWER.fullmatch(factor)
            if m is None:
                raise ValueError(f"cannot parse factor {factor!r} in {text!r}")
            idx = variable_index(m.group(1), names)
            exps[idx] = exps.get(idx, 0) + int(m.group(2) or 1)
        exponent = [0] * (max(exps) + 1 if exps else 0)
        for i, k in exps.items():
            exponent[i] = k
        total = total + Polynomial({tuple(exponent): coeff})
    return total


def random_polynomial(
    rng: np.random.Generator,
    nvars: int,
    degree: int,
    n_terms: int = 6,
    max_num: int = 9,
    max_den: int = 4,
) -> Polynomial:
    """Random polynomial with small rational coefficients (for property checks)."""
    terms = {}
    for _ in range(n_terms):
        total = int(rng.integers(0, degree + 1))
        exp = [0] * nvars
        for _ in range(total):
            exp[int(rng.integers(0, nvars))] += 1
        num = int(rng.integers(-max_num, max_num + 1))
        den = int(rng.integers(1, max_den + 1))
        terms[tuple(exp)] = terms.get(tuple(exp), Fraction(0)) + Fraction(num, den)
    return Polynomial(terms)
