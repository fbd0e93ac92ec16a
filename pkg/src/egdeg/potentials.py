"""Invariant potentials and their exact derivatives.

The workhorse is a polynomial in the ambient coordinates stored as a
monomial-to-coefficient map, built either programmatically or by parsing a
config expression over x1..xd with operators + - * ^.  Differentiation is
exact; evaluation is vectorized over point batches.  Besides polynomials the
module provides the orbit well (half squared distance to a point set), the
normal lift of a stratum potential, scaling wrappers, and the piecewise
potential used for disjoint unions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NotInvariant
from .tubes import SubspaceFamily

Terms = dict[tuple[int, ...], float]


def _clean(terms: Terms) -> Terms:
    return {e: c for e, c in terms.items() if c != 0.0}


def poly_add(a: Terms, b: Terms) -> Terms:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0.0) + c
    return _clean(out)


def poly_scale(a: Terms, s: float) -> Terms:
    return _clean({e: c * s for e, c in a.items()})


def poly_mul(a: Terms, b: Terms) -> Terms:
    out: Terms = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return _clean(out)


def poly_pow(a: Terms, n: int, dim: int) -> Terms:
    if n < 0:
        raise ConfigError("negative exponents are not polynomial")
    out: Terms = {(0,) * dim: 1.0}
    for _ in range(n):
        out = poly_mul(out, a)
    return out


def poly_diff(a: Terms, axis: int) -> Terms:
    out: Terms = {}
    for e, c in a.items():
        if e[axis] == 0:
            continue
        de = list(e)
        de[axis] -= 1
        out[tuple(de)] = out.get(tuple(de), 0.0) + c * e[axis]
    return _clean(out)


class _Parser:
    """Recursive-descent parser for polynomial expressions in x1..xd."""

    token_re = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
                          r"|\d+(?:[eE][+-]?\d+)?)|(x\d+)|([()+\-*^]))")

    def __init__(self, text: str, dim: int):
        self.dim = dim
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = self.token_re.match(text, pos)
            if not m or m.end() == pos:
                raise ConfigError(f"cannot tokenize {text[pos:pos+10]!r}")
            self.tokens.append(m.group(1) or m.group(2) or m.group(3))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> Terms:
        out = self.expr()
        if self.peek() is not None:
            raise ConfigError(f"unexpected trailing token {self.peek()!r}")
        return out

    def expr(self) -> Terms:
        out = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            out = poly_add(out, rhs if op == "+" else poly_scale(rhs, -1.0))
        return out

    def term(self) -> Terms:
        out = self.factor()
        while self.peek() == "*":
            self.take()
            out = poly_mul(out, self.factor())
        return out

    def factor(self) -> Terms:
        if self.peek() == "-":
            self.take()
            return poly_scale(self.factor(), -1.0)
        base = self.atom()
        while self.peek() == "^":
            self.take()
            tok = self.take()
            if tok is None or not tok.isdigit():
                raise ConfigError("exponent must be a nonnegative integer")
            base = poly_pow(base, int(tok), self.dim)
        return base

    def atom(self) -> Terms:
        tok = self.take()
        if tok is None:
            raise ConfigError("unexpected end of expression")
        if tok == "(":
            out = self.expr()
            if self.take() != ")":
                raise ConfigError("unbalanced parentheses")
            return out
        if tok.startswith("x"):
            idx = int(tok[1:]) - 1
            if not 0 <= idx < self.dim:
                raise ConfigError(f"variable {tok} outside dimension {self.dim}")
            e = [0] * self.dim
            e[idx] = 1
            return {tuple(e): 1.0}
        try:
            val = float(tok)
        except ValueError as exc:
            raise ConfigError(f"bad token {tok!r}") from exc
        return {(0,) * self.dim: val}


class Potential:
    """Protocol-ish base: batched value/grad/hess plus a config descriptor."""

    dim: int

    def value(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess(self, pts: np.ndarray) -> np.ndarray:
        # default: central differences of the exact gradient
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n, d = pts.shape
        out = np.empty((n, d, d))
        step = 1e-6
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            out[:, :, j] = (self.grad(pts + e) - self.grad(pts - e)) / (2 * step)
        return 0.5 * (out + np.swapaxes(out, 1, 2))

    def descriptor(self) -> dict:
        raise NotImplementedError


class PolynomialPotential(Potential):
    """Exact multivariate polynomial with cached derivative terms."""

    def __init__(self, terms: Terms, dim: int):
        self.dim = dim
        # canonical term order keeps summation deterministic across rebuilds
        self.terms = dict(sorted(_clean(dict(terms)).items()))
        self._grad_terms = [dict(sorted(poly_diff(self.terms, j).items()))
                            for j in range(dim)]
        self._hess_terms = [[dict(sorted(poly_diff(self._grad_terms[i], j).items()))
                             for j in range(dim)] for i in range(dim)]

    @classmethod
    def from_expression(cls, text: str, dim: int) -> "PolynomialPotential":
        return cls(_Parser(text, dim).parse(), dim)

    @classmethod
    def radial_from_r2_poly(cls, coeffs_by_power: dict[int, float],
                            dim: int) -> "PolynomialPotential":
        """Polynomial p(r^2) expanded in the ambient coordinates."""
        r2: Terms = {}
        for j in range(dim):
            e = [0] * dim
            e[j] = 2
            r2[tuple(e)] = 1.0
        out: Terms = {}
        for power, coeff in coeffs_by_power.items():
            out = poly_add(out, poly_scale(poly_pow(r2, power, dim), coeff))
        return cls(out, dim)

    @staticmethod
    def _eval_terms(terms: Terms, pts: np.ndarray) -> np.ndarray:
        if not terms:
            return np.zeros(pts.shape[0])
        out = np.zeros(pts.shape[0])
        for e, c in terms.items():
            mono = np.full(pts.shape[0], c)
            for j, p in enumerate(e):
                if p:
                    mono = mono * pts[:, j] ** p
            out += mono
        return out

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self._eval_terms(self.terms, pts)

    def grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty((pts.shape[0], self.dim))
        for j in range(self.dim):
            out[:, j] = self._eval_terms(self._grad_terms[j], pts)
        return out

    def hess(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = pts.shape[0]
        out = np.empty((n, self.dim, self.dim))
        for i in range(self.dim):
            for j in range(self.dim):
                out[:, i, j] = self._eval_terms(self._hess_terms[i][j], pts)
        return out

    def scaled(self, lam: float) -> "PolynomialPotential":
        return PolynomialPotential(poly_scale(self.terms, lam), self.dim)

    def descriptor(self):
        return {"kind": "polynomial", "dim": self.dim,
                "terms": [[list(e), c] for e, c in sorted(self.terms.items())]}


class OrbitWellPotential(Potential):
    """Half squared distance to the nearest of a finite point set."""

    def __init__(self, points: np.ndarray):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.dim = self.points.shape[1]

    def _nearest(self, pts):
        diffs = pts[:, None, :] - self.points[None, :, :]
        d2 = np.sum(diffs * diffs, axis=2)
        idx = np.argmin(d2, axis=1)
        return idx, diffs[np.arange(len(pts)), idx]

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        _, v = self._nearest(pts)
        return 0.5 * np.sum(v * v, axis=1)

    def grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        _, v = self._nearest(pts)
        return v

    def hess(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.broadcast_to(np.eye(self.dim), (pts.shape[0], self.dim, self.dim)).copy()

    def scaled(self, lam: float) -> "ScaledPotential":
        return ScaledPotential(self, lam)

    def descriptor(self):
        return {"kind": "orbit_well", "points": self.points.tolist()}


class LiftedPotential(Potential):
    """Stratum potential plus half squared normal distance, on a tube.

    The stratum polynomial is expressed in the coordinates of the
    representative fixed subspace; on a conjugate subspace the coordinates of
    that conjugate's basis are used, which is well defined when the stratum
    polynomial is Weyl invariant.
    """

    def __init__(self, stratum_poly: PolynomialPotential, family: SubspaceFamily):
        self.stratum_poly = stratum_poly
        self.family = family
        self.dim = family.dim
        if stratum_poly.dim != family.k:
            raise ConfigError("stratum polynomial dimension mismatch")

    def _split(self, pts):
        idx, x, v, s, _ = self.family.decompose(pts)
        return idx, x, v

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx, x, v = self._split(pts)
        out = np.empty(pts.shape[0])
        for j in range(self.family.count):
            mask = idx == j
            if np.any(mask):
                coords = x[mask] @ self.family.bases[j]
                out[mask] = self.stratum_poly.value(coords)
        return out + 0.5 * np.sum(v * v, axis=1)

    def grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx, x, v = self._split(pts)
        out = np.empty_like(pts)
        for j in range(self.family.count):
            mask = idx == j
            if np.any(mask):
                b = self.family.bases[j]
                coords = x[mask] @ b
                out[mask] = self.stratum_poly.grad(coords) @ b.T
        return out + v

    def hess(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx, x, _ = self._split(pts)
        out = np.empty((pts.shape[0], self.dim, self.dim))
        eye = np.eye(self.dim)
        for j in range(self.family.count):
            mask = idx == j
            if np.any(mask):
                b = self.family.bases[j]
                hk = self.stratum_poly.hess(x[mask] @ b)
                proj = self.family.projectors[j]
                out[mask] = np.einsum("ak,nkl,bl->nab", b, hk, b) + (eye - proj)
        return out

    def scaled(self, lam: float) -> "ScaledPotential":
        return ScaledPotential(self, lam)

    def descriptor(self):
        return {"kind": "lifted",
                "stratum_poly": self.stratum_poly.descriptor(),
                "bases": [b.tolist() for b in self.family.bases]}


class ScaledPotential(Potential):
    def __init__(self, base: Potential, lam: float):
        self.base = base
        self.lam = float(lam)
        self.dim = base.dim

    def value(self, pts):
        return self.lam * self.base.value(pts)

    def grad(self, pts):
        return self.lam * self.base.grad(pts)

    def hess(self, pts):
        return self.lam * self.base.hess(pts)

    def scaled(self, lam: float) -> "ScaledPotential":
        return ScaledPotential(self.base, self.lam * lam)

    def descriptor(self):
        return {"kind": "scaled", "lam": self.lam, "base": self.base.descriptor()}


class PiecewisePotential(Potential):
    """Dispatch between potentials of disjointly supported maps.

    Points outside every piece (finite-difference probes can step slightly
    past an open domain boundary) are assigned to the piece whose boundary is
    nearest, keeping evaluation total and continuous up to the frontier.
    """

    def __init__(self, pieces: list[tuple]):
        # pieces: (map domain, potential)
        self.pieces = pieces
        self.dim = pieces[0][1].dim

    def _masks(self, pts):
        masks = [domain.contains(pts) for domain, _ in self.pieces]
        assigned = np.zeros(pts.shape[0], dtype=bool)
        for m in masks:
            assigned |= m
        leftover = ~assigned
        if np.any(leftover):
            dists = np.stack([domain.boundary_distance(pts[leftover])
                              for domain, _ in self.pieces], axis=0)
            owner = np.argmin(dists, axis=0)
            idx = np.nonzero(leftover)[0]
            for j, m in enumerate(masks):
                m[idx[owner == j]] = True
        return masks

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty(pts.shape[0])
        for mask, (_, pot) in zip(self._masks(pts), self.pieces):
            if np.any(mask):
                out[mask] = pot.value(pts[mask])
        return out

    def grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty_like(pts)
        for mask, (_, pot) in zip(self._masks(pts), self.pieces):
            if np.any(mask):
                out[mask] = pot.grad(pts[mask])
        return out

    def hess(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty((pts.shape[0], self.dim, self.dim))
        for mask, (_, pot) in zip(self._masks(pts), self.pieces):
            if np.any(mask):
                out[mask] = pot.hess(pts[mask])
        return out

    def scaled(self, lam: float) -> "PiecewisePotential":
        return PiecewisePotential([(d, p.scaled(lam)) for d, p in self.pieces])

    def descriptor(self):
        return {"kind": "piecewise",
                "pieces": [p.descriptor() for _, p in self.pieces]}


def scale_potential(pot: Potential, lam: float) -> Potential:
    if hasattr(pot, "scaled"):
        return pot.scaled(lam)
    return ScaledPotential(pot, lam)


# ---------------------------------------------------------------------------
# validation


def validate_invariance(pot: Potential, group, bbox: float,
                        n_samples: int = 500, seed: int = 11,
                        sample_filter=None) -> None:
    """Check |phi(gx) - phi(x)| <= 1e-8 (1 + |phi(x)|) on a sample cloud."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-bbox, bbox, size=(4 * n_samples, group.dim))
    if sample_filter is not None:
        pts = pts[sample_filter(pts)]
    pts = pts[:n_samples]
    if len(pts) == 0:
        return
    base = pot.value(pts)
    tol = 1e-8 * (1.0 + np.abs(base))
    for g in range(group.order):
        moved = pot.value(group.apply(g, pts))
        gap = np.abs(moved - base)
        if np.any(gap > tol):
            i = int(np.argmax(gap - tol))
            raise NotInvariant(
                f"potential not invariant under element {g}: worst sample "
                f"{pts[i].tolist()} gap {gap[i]:.3e}")


def validate_gradient_consistency(pot: Potential, bbox: float,
                                  n_samples: int = 50, seed: int = 13,
                                  sample_filter=None) -> None:
    """Exact derivatives must match central differences at 1e-5 relative."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-bbox, bbox, size=(4 * n_samples, pot.dim))
    if sample_filter is not None:
        pts = pts[sample_filter(pts)]
    pts = pts[:n_samples]
    if len(pts) == 0:
        return
    step = 1e-5
    grad = pot.grad(pts)
    for j in range(pot.dim):
        e = np.zeros(pot.dim)
        e[j] = step
        fd = (pot.value(pts + e) - pot.value(pts - e)) / (2 * step)
        scale = 1.0 + np.abs(grad[:, j])
        if np.any(np.abs(fd - grad[:, j]) > 1e-5 * scale):
            raise NotInvariant("gradient does not match finite differences")
    hess = pot.hess(pts)
    for j in range(pot.dim):
        e = np.zeros(pot.dim)
        e[j] = step
        fd = (pot.grad(pts + e) - pot.grad(pts - e)) / (2 * step)
        scale = 1.0 + np.abs(hess[:, :, j])
        if np.any(np.abs(fd - hess[:, :, j]) > 1e-5 * scale):
            raise NotInvariant("hessian does not match finite differences")


def potential_from_descriptor(desc: dict) -> Potential:
    kind = desc.get("kind")
    if kind == "polynomial":
        terms = {tuple(e): float(c) for e, c in desc["terms"]}
        return PolynomialPotential(terms, desc["dim"])
    if kind == "orbit_well":
        return OrbitWellPotential(np.array(desc["points"]))
    if kind == "lifted":
        poly = potential_from_descriptor(desc["stratum_poly"])
        fam = SubspaceFamily([np.array(b) for b in desc["bases"]])
        return LiftedPotential(poly, fam)
    if kind == "scaled":
        return ScaledPotential(potential_from_descriptor(desc["base"]), desc["lam"])
    raise ConfigError(f"unknown potential descriptor kind {kind!r}")
