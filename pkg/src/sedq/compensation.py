"""Compensation-term construction: initial triple and the (s+1)-ary tree.

The stationary distribution is assembled from product forms
``c * alpha^m * beta^|n| * v`` added in alternating repair passes:

* Level 0 is the unique triple (``s`` upper-quadrant forms sharing
  ``alpha = rho^(1+s)``, a horizontal vector for the ``n = 0`` row, one
  lower-quadrant form) satisfying the interior *and* horizontal balance
  equations.
* A *vertical pass* repairs the ``m = 0`` boundary: each upper form gains a
  partner with the same beta, the partner alpha being the second root of its
  branch quadratic (which shares the eigenvector); each lower form gains the
  unique in-disk partner of the negative kernel.  The two-term sums satisfy
  the vertical equations exactly.
* A *horizontal pass* repairs the ``n in {-1, 0, 1}`` rows: each vertical
  term spawns ``s`` new upper forms, one lower form and a fresh horizontal
  vector, solved from a dense ``(2s+1) x (2s+1)`` system.

Each vertical term therefore has ``s + 1`` children, giving an (s+1)-ary
tree.  Within level ``l`` the parent ``i`` owns child indices
``d(i)+1 .. d(i)+s`` (upper) and ``i*(s+1)`` (lower), ``d(i) = (i-1)*(s+1)``.
Moduli decrease strictly down the tree, so coefficients eventually underflow;
terms whose contribution falls below 1e-300 are pruned with a counter.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np

from ._linalg import solve_checked
from .errors import SedqError
from .kernel import (
    alpha_neg,
    beta_neg,
    betas_pos,
    eigvec_neg,
    eigvec_pos,
    partner_alpha_pos,
)
from .model import ModelParams, RateMatrices, build_rate_matrices

__all__ = [
    "TermKind",
    "PosTerm",
    "NegTerm",
    "HorizontalVector",
    "Bundle",
    "TermTree",
    "initial_solution",
    "vertical_step_pos",
    "vertical_step_neg",
    "horizontal_step_pos",
    "horizontal_step_neg",
    "grow_tree",
    "serialize_tree",
]

PRUNE_FLOOR = 1e-300


class TermKind(enum.Enum):
    HORIZONTAL = "horizontal"  # created by the initial triple or a horizontal pass
    VERTICAL = "vertical"  # created by a vertical pass


@dataclass(frozen=True)
class PosTerm:
    """Upper-quadrant product form ``coeff * alpha^m * beta^n * eigvec``."""

    level: int
    index: int
    alpha: complex
    beta: complex
    coeff: complex
    eigvec: np.ndarray
    kind: TermKind


@dataclass(frozen=True)
class NegTerm:
    """Lower-quadrant product form ``coeff * alpha^m * beta^|n| * eigvec``."""

    level: int
    index: int
    alpha: complex
    beta: complex
    coeff: complex
    eigvec: np.ndarray
    kind: TermKind


@dataclass(frozen=True)
class HorizontalVector:
    """The ``n = 0`` row contribution ``alpha^m * h`` of one tree node."""

    level: int
    index: int
    alpha: complex
    h: np.ndarray


@dataclass
class Bundle:
    """Output of one horizontal step: s upper terms, one lower, one h-vector."""

    pos: list[PosTerm]
    neg: NegTerm
    h: HorizontalVector


def initial_solution(p: ModelParams, rm: RateMatrices | None = None) -> Bundle:
    """Level-0 triple with ``alpha = rho^(1+s)``.

    The lower-quadrant coefficient is fixed to 1 (any nonzero choice only
    rescales the final normalization constant).  The s upper coefficients
    solve a dense s x s system; the horizontal vector follows by a direct
    solve.  The result satisfies the interior equations of both quadrants and
    all three horizontal families.
    """
    if rm is None:
        rm = build_rate_matrices(p)
    s = p.s
    alpha = p.rho ** (1 + s)
    roots = betas_pos(alpha, p)
    bneg = beta_neg(alpha, p)
    ipos = [eigvec_pos(alpha, r.value, p) for r in roots]
    ineg = eigvec_neg(alpha, bneg, p)

    G = rm.A_01 + alpha * rm.A_m11
    M1 = rm.A_1m1 + alpha * rm.A_0m1
    M2 = rm.B_11 + alpha * rm.B_01

    cols = np.empty((s, s), dtype=complex)
    for j, vec in enumerate(ipos):
        cols[:, j] = roots[j].value * (M1 @ vec) + alpha**2 * (
            rm.B_00 @ np.linalg.solve(G, vec)
        )
    rhs = -bneg * (M2 @ ineg)
    # eigenvector entries grade like alpha^(r/s); undo that row by row
    grade = abs(alpha) ** (-np.arange(s) / s)
    c_hat = solve_checked(
        cols * grade[:, None], rhs * grade, "initial coefficient system"
    )
    h = alpha * np.linalg.solve(G, sum(c * v for c, v in zip(c_hat, ipos)))

    pos_terms = [
        PosTerm(
            level=0,
            index=r.branch,
            alpha=complex(alpha),
            beta=r.value,
            coeff=complex(c),
            eigvec=v,
            kind=TermKind.HORIZONTAL,
        )
        for r, c, v in zip(roots, c_hat, ipos)
    ]
    neg_term = NegTerm(
        level=0,
        index=s + 1,
        alpha=complex(alpha),
        beta=bneg,
        coeff=1.0 + 0.0j,
        eigvec=ineg,
        kind=TermKind.HORIZONTAL,
    )
    hvec = HorizontalVector(level=0, index=1, alpha=complex(alpha), h=h)
    return Bundle(pos=pos_terms, neg=neg_term, h=hvec)


def vertical_step_pos(t: PosTerm, p: ModelParams) -> PosTerm:
    """Partner term so the two-term sum satisfies the upper vertical equations.

    The partner alpha is the second root of the same branch quadratic (inside
    ``|beta|``), sharing the eigenvector; the coefficient is
    ``-c * (1 - (beta/alpha)(1+s)rho) / (1 - (beta/alpha')(1+s)rho)``.
    """
    b = (1 + p.s) * p.rho
    alpha1 = partner_alpha_pos(t.alpha, t.beta, _branch_of(t, p), p)
    denom = 1 - (t.beta / alpha1) * b
    if denom == 0:
        raise ZeroDivisionError("vertical coefficient denominator vanished")
    coeff = -t.coeff * (1 - (t.beta / t.alpha) * b) / denom
    return PosTerm(
        level=t.level + 1,
        index=t.index,
        alpha=alpha1,
        beta=t.beta,
        coeff=coeff,
        eigvec=t.eigvec,
        kind=TermKind.VERTICAL,
    )


def _branch_of(t: PosTerm, p: ModelParams) -> int:
    """Branch index of an upper term, recovered from its in-level position."""
    j = t.index % (p.s + 1)
    return j if j != 0 else p.s + 1


def vertical_step_neg(t: NegTerm, p: ModelParams) -> NegTerm:
    """Partner term so the two-term sum satisfies the lower vertical equations."""
    s = p.s
    b = (1 + s) * p.rho
    alpha1 = alpha_neg(t.beta, p)
    vec1 = eigvec_neg(alpha1, t.beta, p)
    denom = s - (t.beta / alpha1) * b * vec1[s - 1]
    if denom == 0:
        raise ZeroDivisionError("vertical coefficient denominator vanished")
    coeff = -t.coeff * (s - (t.beta / t.alpha) * b * t.eigvec[s - 1]) / denom
    return NegTerm(
        level=t.level + 1,
        index=t.index,
        alpha=alpha1,
        beta=t.beta,
        coeff=coeff,
        eigvec=vec1,
        kind=TermKind.VERTICAL,
    )


def _horizontal_matrix(
    p: ModelParams, rm: RateMatrices, alpha: complex
) -> tuple[np.ndarray, list, complex, list[np.ndarray], np.ndarray, np.ndarray, np.ndarray]:
    """Assemble the (2s+1) x (2s+1) horizontal-repair matrix at ``alpha``.

    Unknown order: ``h(0..s-1), c_1..c_s, c_{s+1}``.  Rows: the s equations of
    the ``n = 1`` family, the s equations of the ``n = 0`` family, and the
    single surviving tie-breaking equation of the ``n = -1`` family
    ``alpha*s*h(0) + (1+s)*rho*q*h(s-1) - alpha*s*c_{s+1} = rhs``.
    """
    s = p.s
    lam = p.arrival_rate
    roots = betas_pos(alpha, p)
    bneg = beta_neg(alpha, p)
    ipos = [eigvec_pos(alpha, r.value, p) for r in roots]
    ineg = eigvec_neg(alpha, bneg, p)
    G = rm.A_01 + alpha * rm.A_m11
    M1 = rm.A_1m1 + alpha * rm.A_0m1
    M2 = rm.B_11 + alpha * rm.B_01

    n = 2 * s + 1
    A = np.zeros((n, n), dtype=complex)
    A[0:s, 0:s] = G
    for j in range(s):
        A[0:s, s + j] = -alpha * ipos[j]
        A[s : 2 * s, s + j] = roots[j].value * (M1 @ ipos[j])
    A[s : 2 * s, 0:s] = alpha * rm.B_00
    A[s : 2 * s, 2 * s] = bneg * (M2 @ ineg)
    A[2 * s, 0] += alpha * s
    A[2 * s, s - 1] += lam * p.q
    A[2 * s, 2 * s] += -alpha * s
    return A, roots, bneg, ipos, ineg, M1, M2


def _bundle_from_solution(
    t: PosTerm | NegTerm,
    x: np.ndarray,
    roots,
    bneg: complex,
    ipos: list[np.ndarray],
    ineg: np.ndarray,
    s: int,
) -> Bundle:
    d = (t.index - 1) * (s + 1)
    h = x[0:s]
    c_hat = x[s : 2 * s]
    c_neg = x[2 * s]
    pos_terms = [
        PosTerm(
            level=t.level,
            index=d + r.branch,
            alpha=t.alpha,
            beta=r.value,
            coeff=complex(c),
            eigvec=v,
            kind=TermKind.HORIZONTAL,
        )
        for r, c, v in zip(roots, c_hat, ipos)
    ]
    neg_term = NegTerm(
        level=t.level,
        index=t.index * (s + 1),
        alpha=t.alpha,
        beta=bneg,
        coeff=complex(c_neg),
        eigvec=ineg,
        kind=TermKind.HORIZONTAL,
    )
    hvec = HorizontalVector(level=t.level, index=t.index, alpha=t.alpha, h=h)
    return Bundle(pos=pos_terms, neg=neg_term, h=hvec)


def _solve_horizontal(
    A: np.ndarray, rhs: np.ndarray, alpha: complex, s: int
) -> np.ndarray:
    """Solve the repair system under its natural grading.

    In the deep-tree limit the h entries shrink like ``|alpha|^((r+1)/s)``
    and each equation row carries ``|alpha|^(r/s + 1)`` (``|alpha|`` for the
    tie row); dividing these out turns the system into a perturbation of the
    well-conditioned limit system, so the condition check measures genuine
    rank loss instead of the grading.
    """
    aa = abs(alpha)
    r = np.arange(s)
    row_scale = np.concatenate([aa ** (-r / s - 1), aa ** (-r / s - 1), [1 / aa]])
    col_scale = np.concatenate([aa ** ((r + 1) / s), np.ones(s + 1)])
    scaled = A * row_scale[:, None] * col_scale[None, :]
    y = solve_checked(scaled, rhs * row_scale, "horizontal repair system")
    return y * col_scale


def horizontal_step_pos(
    t: PosTerm, p: ModelParams, rm: RateMatrices | None = None
) -> Bundle:
    """Repair bundle for a vertical upper term.

    The new terms share the term's alpha with the s + 1 in-disk betas of the
    two kernels; coefficients and the h-vector solve the assembled system
    with source terms on the ``n = 1`` and ``n = 0`` rows.
    """
    if rm is None:
        rm = build_rate_matrices(p)
    s = p.s
    A, roots, bneg, ipos, ineg, M1, _ = _horizontal_matrix(p, rm, t.alpha)
    rhs = np.zeros(2 * s + 1, dtype=complex)
    rhs[0:s] = t.coeff * t.alpha * t.eigvec
    rhs[s : 2 * s] = -t.coeff * t.beta * (M1 @ t.eigvec)
    x = _solve_horizontal(A, rhs, t.alpha, s)
    return _bundle_from_solution(t, x, roots, bneg, ipos, ineg, s)


def horizontal_step_neg(
    t: NegTerm, p: ModelParams, rm: RateMatrices | None = None
) -> Bundle:
    """Repair bundle for a vertical lower term (sources on ``n = 0, -1`` rows)."""
    if rm is None:
        rm = build_rate_matrices(p)
    s = p.s
    A, roots, bneg, ipos, ineg, _, M2 = _horizontal_matrix(p, rm, t.alpha)
    rhs = np.zeros(2 * s + 1, dtype=complex)
    rhs[s : 2 * s] = -t.coeff * t.beta * (M2 @ t.eigvec)
    rhs[2 * s] = t.coeff * t.alpha * s
    x = _solve_horizontal(A, rhs, t.alpha, s)
    return _bundle_from_solution(t, x, roots, bneg, ipos, ineg, s)


class TermTree:
    """All compensation terms built so far, organized by level and pass.

    ``passes`` counts completed repair passes: pass 0 is the initial triple,
    odd passes are vertical, even passes horizontal.  After ``L`` passes the
    tree holds horizontal levels ``0..L//2`` (coefficients + h-vectors) and
    vertical levels ``1..(L+1)//2``.  Levels are append-only; sibling nodes
    are independent given their parent.
    """

    def __init__(self, p: ModelParams):
        self.params = p
        self.rm = build_rate_matrices(p)
        bundle = initial_solution(p, self.rm)
        self.hat_pos: list[list[PosTerm]] = [list(bundle.pos)]
        self.hat_neg: list[list[NegTerm]] = [[bundle.neg]]
        self.h_vecs: list[list[HorizontalVector]] = [[bundle.h]]
        self.tilde_pos: list[list[PosTerm]] = [[]]
        self.tilde_neg: list[list[NegTerm]] = [[]]
        self.passes = 0
        self.pruned = 0
        self._flat: dict[tuple[str, int], tuple] = {}

    @property
    def hat_depth(self) -> int:
        return len(self.hat_pos) - 1

    @property
    def tilde_depth(self) -> int:
        return len(self.tilde_pos) - 1

    def _keep(self, term: PosTerm | NegTerm) -> bool:
        if abs(term.coeff) * abs(term.beta) < PRUNE_FLOOR:
            self.pruned += 1
            return False
        return True

    @staticmethod
    def _step(fn, term, *args):
        """Run one repair step, tagging failures with the tree position."""
        try:
            return fn(term, *args)
        except SedqError as exc:
            raise type(exc)(
                f"level {term.level}, node {term.index}: {exc}"
            ) from exc

    def ensure_passes(self, L: int) -> None:
        """Grow the tree until ``L`` repair passes are complete."""
        p = self.params
        while self.passes < L:
            k = self.passes + 1
            if k % 2 == 1:
                level = (k + 1) // 2
                new_pos = [
                    self._step(vertical_step_pos, t, p)
                    for t in self.hat_pos[level - 1]
                ]
                new_neg = [
                    self._step(vertical_step_neg, t, p)
                    for t in self.hat_neg[level - 1]
                ]
                self.tilde_pos.append([t for t in new_pos if self._keep(t)])
                self.tilde_neg.append([t for t in new_neg if self._keep(t)])
            else:
                level = k // 2
                hat_p: list[PosTerm] = []
                hat_n: list[NegTerm] = []
                hs: list[HorizontalVector] = []
                for t in self.tilde_pos[level]:
                    bundle = self._step(horizontal_step_pos, t, p, self.rm)
                    hat_p.extend(b for b in bundle.pos if self._keep(b))
                    if self._keep(bundle.neg):
                        hat_n.append(bundle.neg)
                    hs.append(bundle.h)
                for t in self.tilde_neg[level]:
                    bundle = self._step(horizontal_step_neg, t, p, self.rm)
                    hat_p.extend(b for b in bundle.pos if self._keep(b))
                    if self._keep(bundle.neg):
                        hat_n.append(bundle.neg)
                    hs.append(bundle.h)
                self.hat_pos.append(hat_p)
                self.hat_neg.append(hat_n)
                self.h_vecs.append(hs)
            self.passes = k

    # -- flattened per-level views used by the series evaluator --

    def flat(self, kind: str, level: int) -> tuple:
        """Arrays ``(alphas, betas, coeffs, eigvec matrix)`` for one level.

        ``kind`` is one of ``hat_pos``, ``hat_neg``, ``tilde_pos``,
        ``tilde_neg``, ``h``.  For ``h`` the tuple is ``(alphas, h matrix)``.
        Levels are immutable once their pass completes, so entries cache.
        """
        key = (kind, level)
        if key in self._flat:
            return self._flat[key]
        if kind == "h":
            items = self.h_vecs[level]
            out = (
                np.array([t.alpha for t in items]),
                np.array([t.h for t in items]),
            )
        else:
            items = getattr(self, kind)[level]
            out = (
                np.array([t.alpha for t in items]),
                np.array([t.beta for t in items]),
                np.array([t.coeff for t in items]),
                np.array([t.eigvec for t in items]),
            )
        self._flat[key] = out
        return out

    def max_abs_alpha(self, level: int) -> float:
        """Largest |alpha| over the level (level 0: the initial alpha)."""
        if level == 0:
            return abs(self.hat_pos[0][0].alpha)
        return max(
            abs(t.alpha) for t in self.tilde_pos[level] + self.tilde_neg[level]
        )

    def max_abs_beta(self, level: int) -> float:
        """Largest |beta| over the horizontal terms of the level."""
        return max(
            abs(t.beta) for t in self.hat_pos[level] + self.hat_neg[level]
        )


def grow_tree(p: ModelParams, L: int) -> TermTree:
    """Tree with ``L`` completed repair passes (``L = 0``: initial triple only)."""
    tree = TermTree(p)
    tree.ensure_passes(L)
    return tree


def serialize_tree(tree: TermTree) -> str:
    """One CSV record per term: kind, level, index, complex parts, vector.

    Horizontal-vector records leave the beta and coefficient columns empty
    and carry the h entries in the vector columns.
    """
    buf = io.StringIO()
    s = tree.params.s
    vec_cols = ",".join(f"vec{r}_re,vec{r}_im" for r in range(s))
    buf.write(
        "kind,level,index,alpha_re,alpha_im,beta_re,beta_im,"
        f"coeff_re,coeff_im,{vec_cols}\n"
    )

    def vec_str(v: np.ndarray) -> str:
        return ",".join(f"{z.real:.17g},{z.imag:.17g}" for z in v)

    for kind in ("hat_pos", "hat_neg", "tilde_pos", "tilde_neg"):
        for level_terms in getattr(tree, kind):
            for t in level_terms:
                buf.write(
                    f"{kind},{t.level},{t.index},"
                    f"{t.alpha.real:.17g},{t.alpha.imag:.17g},"
                    f"{t.beta.real:.17g},{t.beta.imag:.17g},"
                    f"{t.coeff.real:.17g},{t.coeff.imag:.17g},"
                    f"{vec_str(t.eigvec)}\n"
                )
    for level_vecs in tree.h_vecs:
        for hv in level_vecs:
            buf.write(
                f"h,{hv.level},{hv.index},"
                f"{hv.alpha.real:.17g},{hv.alpha.imag:.17g},,,,,"
                f"{vec_str(np.asarray(hv.h, dtype=complex))}\n"
            )
    return buf.getvalue()
