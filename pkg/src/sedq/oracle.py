"""Independent ground truth for the SED system.

Two generators that share nothing with the series solver:

* :func:`oracle_solve` builds the generator of the original ``(q1, q2)``
  chain on a finite box (arrivals that would overflow are suppressed, so the
  boundary acts as loss) and solves the stationary equations by sparse LU.
  The probability within one step of the box edge is reported so callers can
  certify that the truncation does not pollute the interior.
* :func:`simulate` runs the arrival/routing/service dynamics event by event
  with a self-contained xorshift64* generator, so runs are reproducible from
  the seed alone, across platforms and implementations.

Both export plain ``(q1, q2) -> probability`` maps; :func:`compare` diffs two
such maps over a window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BoxTooSmall, InvalidParam, SingularGenerator
from .model import ModelParams

__all__ = [
    "TruncationBox",
    "SimConfig",
    "OracleResult",
    "SimResult",
    "CompareReport",
    "oracle_solve",
    "simulate",
    "sim_standard_errors",
    "compare",
    "XorShift64Star",
]


@dataclass(frozen=True)
class TruncationBox:
    """Inclusive state-space box ``[0, q1max] x [0, q2max]``."""

    q1max: int
    q2max: int


@dataclass(frozen=True)
class SimConfig:
    events: int
    seed: int = 0
    warmup: int = 0

    def __post_init__(self):
        if self.warmup < 0 or self.events <= self.warmup:
            raise InvalidParam("need events > warmup >= 0")


@dataclass
class OracleResult:
    """Stationary probabilities on the box plus the edge-mass diagnostic."""

    probs: dict[tuple[int, int], float]
    boundary_mass: float


@dataclass
class SimResult:
    """Time-weighted state frequencies; batches support error estimates."""

    freq: dict[tuple[int, int], float]
    total_time: float
    batches: list[tuple[float, dict[tuple[int, int], float]]] = field(
        default_factory=list
    )


@dataclass
class CompareReport:
    max_rel_err: float
    max_abs_err: float
    worst_state: tuple[int, int] | None


def _route_arrival(q1: int, q2: int, s: int) -> int:
    """-1: join queue 1, +1: join queue 2, 0: tie."""
    lhs, rhs = s * (q1 + 1), q2 + 1
    if lhs < rhs:
        return -1
    if lhs > rhs:
        return 1
    return 0


def oracle_solve(
    p: ModelParams, box: TruncationBox, mass_tol: float = 1e-6
) -> OracleResult:
    """Direct stationary solve of the queue-length chain on a finite box.

    Raises :class:`BoxTooSmall` if the box cannot hold a full diagonal band
    (either side below ``4*s``) or if the stationary mass within one step of
    the edge exceeds ``mass_tol``.
    """
    s, q = p.s, p.q
    lam = p.arrival_rate
    n1, n2 = box.q1max + 1, box.q2max + 1
    if box.q1max < 4 * s or box.q2max < 4 * s:
        raise BoxTooSmall(
            f"box {box.q1max}x{box.q2max} is below the minimum extent {4 * s}"
        )

    def idx(q1: int, q2: int) -> int:
        return q1 * n2 + q2

    size = n1 * n2
    rows, cols, vals = [], [], []

    def add(src: int, dst: int, rate: float) -> None:
        rows.append(dst)
        cols.append(src)
        vals.append(rate)
        rows.append(src)
        cols.append(src)
        vals.append(-rate)

    for q1 in range(n1):
        for q2 in range(n2):
            here = idx(q1, q2)
            side = _route_arrival(q1, q2, s)
            if side <= 0 and q1 < box.q1max:
                add(here, idx(q1 + 1, q2), lam * (q if side == 0 else 1.0))
            if side >= 0 and q2 < box.q2max:
                add(here, idx(q1, q2 + 1), lam * ((1 - q) if side == 0 else 1.0))
            if q1 > 0:
                add(here, idx(q1 - 1, q2), 1.0)
            if q2 > 0:
                add(here, idx(q1, q2 - 1), float(s))

    # balance rows A @ pi = 0 with one row replaced by the normalization
    A = sp.coo_matrix((vals, (rows, cols)), shape=(size, size)).tolil()
    A[0, :] = 1.0
    b = np.zeros(size)
    b[0] = 1.0
    try:
        pi = spla.spsolve(A.tocsc(), b)
    except Exception as exc:  # superlu reports singularity via RuntimeError
        raise SingularGenerator(f"sparse solve failed: {exc}") from exc
    if not np.all(np.isfinite(pi)):
        raise SingularGenerator("sparse solve produced non-finite entries")
    if pi.min() < -1e-9:
        raise SingularGenerator(f"stationary solve went negative: {pi.min():.3e}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()

    boundary = 0.0
    for q1 in range(n1):
        for q2 in range(n2):
            if q1 >= box.q1max - 1 or q2 >= box.q2max - 1:
                boundary += pi[idx(q1, q2)]
    if boundary > mass_tol:
        raise BoxTooSmall(
            f"boundary mass {boundary:.3e} exceeds {mass_tol:.1e}; enlarge the box"
        )
    probs = {
        (q1, q2): float(pi[idx(q1, q2)]) for q1 in range(n1) for q2 in range(n2)
    }
    return OracleResult(probs=probs, boundary_mass=float(boundary))


class XorShift64Star:
    """xorshift64* PRNG: shifts (12, 25, 27), multiplier 2685821657736338717.

    The seed is whitened through one splitmix64 step (increment
    0x9E3779B97F4A7C15, mixers 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB) so
    that seed 0 yields a nonzero state.  ``uniform`` returns the top 53 bits
    scaled to [0, 1).
    """

    MASK = (1 << 64) - 1
    MULT = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        x = (seed + 0x9E3779B97F4A7C15) & self.MASK
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & self.MASK
        x ^= x >> 31
        self.state = x or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & self.MASK
        x ^= x >> 27
        self.state = x
        return (x * self.MULT) & self.MASK

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53


def simulate(p: ModelParams, cfg: SimConfig, n_batches: int = 100) -> SimResult:
    """Event-driven simulation of the SED dynamics.

    Exponential clocks via inversion; SED routing with tie probability ``q``.
    Sojourn times after the warmup are accumulated per state and split into
    ``n_batches`` consecutive batches for standard-error estimation.
    """
    s, q = p.s, p.q
    lam = p.arrival_rate
    rng = XorShift64Star(cfg.seed)
    uniform = rng.uniform
    log = math.log

    q1 = q2 = 0
    measured = cfg.events - cfg.warmup
    batch_of = [
        (i * n_batches) // measured if measured > 0 else 0 for i in range(measured)
    ]
    batches: list[dict[tuple[int, int], float]] = [{} for _ in range(n_batches)]
    batch_time = [0.0] * n_batches

    for i in range(cfg.events):
        r1 = 1.0 if q1 > 0 else 0.0
        r2 = float(s) if q2 > 0 else 0.0
        total = lam + r1 + r2
        dt = -log(1.0 - uniform()) / total
        if i >= cfg.warmup:
            bi = batch_of[i - cfg.warmup]
            key = (q1, q2)
            acc = batches[bi]
            acc[key] = acc.get(key, 0.0) + dt
            batch_time[bi] += dt
        u = uniform() * total
        if u < lam:
            side = _route_arrival(q1, q2, s)
            if side == 0:
                side = -1 if uniform() < q else 1
            if side < 0:
                q1 += 1
            else:
                q2 += 1
        elif u < lam + r1:
            q1 -= 1
        else:
            q2 -= 1

    total_time = sum(batch_time)
    freq: dict[tuple[int, int], float] = {}
    for acc in batches:
        for key, t in acc.items():
            freq[key] = freq.get(key, 0.0) + t
    freq = {k: v / total_time for k, v in freq.items()}
    batch_out = [
        (batch_time[i], {k: v / batch_time[i] for k, v in batches[i].items()})
        for i in range(n_batches)
        if batch_time[i] > 0
    ]
    return SimResult(freq=freq, total_time=total_time, batches=batch_out)


def sim_standard_errors(res: SimResult) -> dict[tuple[int, int], float]:
    """Per-state standard error of the mean from batch means."""
    B = len(res.batches)
    if B < 2:
        raise InvalidParam("need at least two batches for standard errors")
    states = set()
    for _, fr in res.batches:
        states.update(fr)
    out = {}
    for st in states:
        xs = np.array([fr.get(st, 0.0) for _, fr in res.batches])
        out[st] = float(np.std(xs, ddof=1) / np.sqrt(B))
    return out


def compare(
    a: dict[tuple[int, int], float],
    b: dict[tuple[int, int], float],
    window: TruncationBox,
    floor: float = 1e-12,
) -> CompareReport:
    """Elementwise diff of two state maps over the window.

    Relative error is measured against ``b`` and only where ``b`` exceeds
    ``floor``; absolute error covers every window state.
    """
    max_rel, max_abs, worst = 0.0, 0.0, None
    for q1 in range(window.q1max + 1):
        for q2 in range(window.q2max + 1):
            st = (q1, q2)
            va, vb = a.get(st, 0.0), b.get(st, 0.0)
            diff = abs(va - vb)
            max_abs = max(max_abs, diff)
            if vb > floor:
                rel = diff / vb
                if rel > max_rel:
                    max_rel, worst = rel, st
    return CompareReport(max_rel_err=max_rel, max_abs_err=max_abs, worst_state=worst)
