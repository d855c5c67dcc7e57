"""Solver portfolio: industrial heuristic, permutation-space simulated
annealing, QUBO-space simulated annealing, tabu search, and an exact
brute-force oracle.

Every solver returns a :class:`SolveReport`. Permutation-space solvers are
valid by construction; QUBO-space solvers may end on a configuration that
violates the one-hot constraints, in which case the report carries the raw
bits and ``valid=False``. Validity is always established by independently
decoding the output, never by trusting the search. All randomness is local
to the call (seeded ``numpy`` generators), so identical inputs and seed give
identical reports apart from wall time.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import Assignment, BladeSet, DiskImbalance, SlotGeometry, imbalance
from .qubo import (
    BinaryConfiguration,
    QuboProblem,
    build_qubo,
    decode,
)

BRUTE_FORCE_LIMIT = 10


@dataclass
class SolveReport:
    """Outcome of one solver run.

    ``valid`` is true iff ``assignment`` is a permutation iff ``imbalance``
    is present. Invalid outcomes keep the raw bits in ``configuration`` so
    violation types can be counted downstream. ``best_history`` is the
    incumbent-objective trace, populated only when the solver was asked to
    record it.
    """

    solver_name: str
    valid: bool
    assignment: Assignment | None
    imbalance: float | None
    seed: int
    wall_time: float
    iterations: int
    configuration: BinaryConfiguration | None = None
    best_history: list | None = None


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling schedule: sweep k runs at t_initial * alpha**k."""

    t_initial: float
    t_final: float
    alpha: float
    sweeps: int

    def __post_init__(self):
        if not (self.t_initial > 0.0 and self.t_final > 0.0):
            raise ValueError("temperatures must be positive")
        if not self.t_final < self.t_initial:
            raise ValueError(
                f"t_final must be below t_initial, got {self.t_final} >= {self.t_initial}"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.sweeps) < 1:
            raise ValueError("need at least one sweep")
        object.__setattr__(self, "sweeps", int(self.sweeps))

    @classmethod
    def geometric(cls, t_initial: float, t_final: float, sweeps: int) -> "AnnealSchedule":
        """Schedule whose last sweep lands exactly on ``t_final``."""
        alpha = (t_final / t_initial) ** (1.0 / max(sweeps - 1, 1))
        return cls(t_initial, t_final, alpha, sweeps)

    def temperatures(self) -> np.ndarray:
        return self.t_initial * self.alpha ** np.arange(self.sweeps)


def heuristic_solve(blades: BladeSet, geometry: SlotGeometry | None = None) -> SolveReport:
    """Industrial placement rule: fill opposite slot pairs, heaviest pair
    first, alternating with the lightest pair.

    Blades are sorted by mass (descending, ties by blade index); pairs are
    taken alternately from the heavy and light end of that order. The k-th
    pair occupies the lowest free slot and the slot opposite it (offset
    floor(N/2) for odd N); the heavier partner takes the lower slot. An odd
    leftover blade takes the last free slot. Deterministic, O(N log N), and
    blind to the bare-disk imbalance, so the reported imbalance is evaluated
    with a balanced disk.
    """
    t0 = time.perf_counter()
    n = blades.n
    if geometry is None:
        geometry = SlotGeometry(n)
    if geometry.n_slots != n:
        raise ValueError(f"geometry has {geometry.n_slots} slots for {n} blades")

    order = np.argsort(-blades.masses, kind="stable").tolist()
    pairs = []
    lo, hi = 0, n - 1
    from_heavy = True
    while hi - lo >= 1:
        if from_heavy:
            pairs.append((order[lo], order[lo + 1]))
            lo += 2
        else:
            pairs.append((order[hi - 1], order[hi]))
            hi -= 2
        from_heavy = not from_heavy

    sigma0 = [0] * n
    used = [False] * n
    free_from = 0
    half = n // 2
    for heavy, light in pairs:
        while used[free_from]:
            free_from += 1
        s = free_from
        t = (s + half) % n
        sigma0[heavy] = s
        sigma0[light] = t
        used[s] = used[t] = True
    if lo == hi:  # odd N: median blade takes the last free slot
        while used[free_from]:
            free_from += 1
        sigma0[order[lo]] = free_from
        used[free_from] = True

    assignment = Assignment(np.asarray(sigma0) + 1)
    d = imbalance(blades, DiskImbalance(), assignment).d
    return SolveReport(
        solver_name="heuristic",
        valid=True,
        assignment=assignment,
        imbalance=d,
        seed=0,
        wall_time=time.perf_counter() - t0,
        iterations=n,
    )


def default_imbalance_schedule(
    blades: BladeSet, disk: DiskImbalance, sweeps: int = 2000
) -> AnnealSchedule:
    """Instance-scaled schedule for the permutation annealer.

    The start temperature must sit at the swap-move energy scale, not at the
    starting objective: one swap can move the residual vector by up to twice
    the mass spread, so d^2 changes by up to about (2*spread + d_start)^2.
    Starting there lets the walk hop between basins early; cooling by 1e-8
    overall freezes it well below the gaps between distinct placements. The
    floor only matters for exactly equal masses, where any start is optimal.
    """
    start = heuristic_solve(blades)
    d_start = imbalance(blades, disk, start.assignment).d
    spread = float(blades.masses.max() - blades.masses.min())
    t_initial = max((2.0 * spread + d_start) ** 2, 1e-12)
    return AnnealSchedule.geometric(t_initial, 1e-8 * t_initial, sweeps)


def swap_delta(masses, zx, zy, sigma0, ux, uy, a, b):
    """Change of d^2 when blades a and b (0-based) trade slots.

    Swapping moves the residual vector by (m_a - m_b) * (z_sigma(b) -
    z_sigma(a)); the new squared norm minus the old one is the delta. O(1)
    regardless of N; must agree with full recomputation.
    """
    sa, sb = sigma0[a], sigma0[b]
    dm = masses[a] - masses[b]
    nx = ux + dm * (zx[sb] - zx[sa])
    ny = uy + dm * (zy[sb] - zy[sa])
    return nx * nx + ny * ny - (ux * ux + uy * uy)


def imbalance_sa_solve(
    blades: BladeSet,
    disk: DiskImbalance,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
    record_best: bool = False,
) -> SolveReport:
    """Simulated annealing directly in permutation space.

    The state is always a permutation (start: heuristic placement; move:
    swap the slots of two distinct uniformly random blades), so every output
    is valid by construction. Acceptance is Metropolis on the change of d^2,
    evaluated incrementally through the running residual vector. The best
    visited permutation is returned.
    """
    t_start = time.perf_counter()
    n = blades.n
    if n < 2:
        assignment = Assignment.identity(n)
        return SolveReport(
            solver_name="imbalance-sa",
            valid=True,
            assignment=assignment,
            imbalance=imbalance(blades, disk, assignment).d,
            seed=seed,
            wall_time=time.perf_counter() - t_start,
            iterations=0,
            best_history=[] if record_best else None,
        )
    if schedule is None:
        schedule = default_imbalance_schedule(blades, disk)

    rng = np.random.default_rng(seed)
    sigma = heuristic_solve(blades).assignment.slots0.tolist()
    z = SlotGeometry(n).unit_vectors()
    zx = z[:, 0].tolist()
    zy = z[:, 1].tolist()
    m = blades.masses.tolist()
    ux = float(disk.vector[0]) + sum(m[i] * zx[sigma[i]] for i in range(n))
    uy = float(disk.vector[1]) + sum(m[i] * zy[sigma[i]] for i in range(n))
    d2 = ux * ux + uy * uy

    best_d2 = d2
    best_sigma = sigma.copy()
    history = [d2] if record_best else None
    exp = math.exp

    for t in schedule.temperatures().tolist():
        first = rng.integers(0, n, size=n).tolist()
        second = rng.integers(0, n - 1, size=n).tolist()
        unif = rng.random(n).tolist()
        for k in range(n):
            a = first[k]
            b = second[k]
            if b >= a:  # uniform over distinct pairs
                b += 1
            sa = sigma[a]
            sb = sigma[b]
            dm = m[a] - m[b]
            nx = ux + dm * (zx[sb] - zx[sa])
            ny = uy + dm * (zy[sb] - zy[sa])
            nd2 = nx * nx + ny * ny
            delta = nd2 - d2
            if delta <= 0.0 or unif[k] < exp(-delta / t):
                sigma[a] = sb
                sigma[b] = sa
                ux, uy, d2 = nx, ny, nd2
                if d2 < best_d2:
                    best_d2 = d2
                    best_sigma = sigma.copy()
                    if record_best:
                        history.append(d2)

    assignment = Assignment(np.asarray(best_sigma) + 1)
    return SolveReport(
        solver_name="imbalance-sa",
        valid=True,
        assignment=assignment,
        imbalance=imbalance(blades, disk, assignment).d,
        seed=seed,
        wall_time=time.perf_counter() - t_start,
        iterations=schedule.sweeps * n,
        best_history=history,
    )


def default_qubo_schedule(problem: QuboProblem, sweeps: int = 500) -> AnnealSchedule:
    """Penalty-scaled schedule for QUBO annealing (cools by 1e-8 overall)."""
    t_initial = float(problem.lambda1.max() + problem.lambda2)
    return AnnealSchedule.geometric(t_initial, 1e-8 * t_initial, sweeps)


def _report_from_bits(problem, bits, solver_name, seed, wall_time, iterations, history=None):
    config = BinaryConfiguration(np.asarray(bits, dtype=np.int8))
    decoded = decode(config)
    if isinstance(decoded, Assignment):
        d = imbalance(problem.blades, problem.disk, decoded).d
        return SolveReport(
            solver_name=solver_name,
            valid=True,
            assignment=decoded,
            imbalance=d,
            seed=seed,
            wall_time=wall_time,
            iterations=iterations,
            configuration=config,
            best_history=history,
        )
    return SolveReport(
        solver_name=solver_name,
        valid=False,
        assignment=None,
        imbalance=None,
        seed=seed,
        wall_time=wall_time,
        iterations=iterations,
        configuration=config,
        best_history=history,
    )


def qubo_sa_solve(
    problem: QuboProblem,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
    evaluator: str = "implicit",
    record_best: bool = False,
) -> SolveReport:
    """Single-bit-flip Metropolis annealing over the N^2 binary variables.

    Each sweep visits every bit once in a fresh random order; temperature is
    geometric between sweeps. The lowest-energy configuration seen is decoded
    and reported honestly: it may violate the one-hot constraints.
    """
    t_start = time.perf_counter()
    if schedule is None:
        schedule = default_qubo_schedule(problem)
    dim = problem.dimension
    rng = np.random.default_rng(seed)
    ev = problem.evaluator(evaluator)
    ev.reset(rng.integers(0, 2, size=dim, dtype=np.int8))

    offset = problem.constant_offset
    best_energy = ev.energy()
    flip_log = []
    best_pos = 0
    history = [best_energy + offset] if record_best else None
    exp = math.exp

    for t in schedule.temperatures().tolist():
        order = rng.permutation(dim).tolist()
        unif = rng.random(dim).tolist()
        for k in range(dim):
            a = order[k]
            delta = ev.flip_delta(a)
            if delta <= 0.0 or unif[k] < exp(-delta / t):
                ev.flip(a)
                energy = ev.energy()
                flip_log.append(a)
                if energy < best_energy:
                    best_energy = energy
                    best_pos = len(flip_log)
                    if record_best:
                        history.append(energy + offset)

    bits = ev.bits()
    for a in reversed(flip_log[best_pos:]):  # rewind to the incumbent
        bits[a] ^= 1
    return _report_from_bits(
        problem,
        bits,
        "qubo-sa",
        seed,
        time.perf_counter() - t_start,
        schedule.sweeps * dim,
        history,
    )


def tabu_solve(
    problem: QuboProblem,
    tenure: int | None = None,
    max_iterations: int | None = None,
    seed: int = 0,
    evaluator: str = "implicit",
) -> SolveReport:
    """Steepest-descent single-flip tabu search over the QUBO.

    Each iteration flips the bit with the lowest energy delta among moves
    that are not tabu or that beat the incumbent (aspiration); the flipped
    bit then stays tabu for ``tenure`` iterations. Ties go to the lowest
    variable index. The only randomness is the seeded starting configuration.
    """
    t_start = time.perf_counter()
    n = problem.n
    dim = problem.dimension
    if tenure is None:
        tenure = 10 + n
    if max_iterations is None:
        max_iterations = 50 * n * n
    if tenure < 1 or max_iterations < 1:
        raise ValueError("tenure and max_iterations must be positive")

    rng = np.random.default_rng(seed)
    ev = problem.evaluator(evaluator)
    ev.reset(rng.integers(0, 2, size=dim, dtype=np.int8))

    energy = ev.energy()
    best_energy = energy
    flip_log = []
    best_pos = 0
    tabu_until = np.zeros(dim, dtype=np.int64)

    for k in range(max_iterations):
        deltas = ev.all_flip_deltas()
        candidates = (tabu_until <= k) | (energy + deltas < best_energy)
        if not candidates.any():
            candidates[:] = True
        a = int(np.argmin(np.where(candidates, deltas, np.inf)))
        ev.flip(a)
        energy = ev.energy()
        flip_log.append(a)
        tabu_until[a] = k + 1 + tenure
        if energy < best_energy:
            best_energy = energy
            best_pos = len(flip_log)

    bits = ev.bits()
    for a in reversed(flip_log[best_pos:]):
        bits[a] ^= 1
    return _report_from_bits(
        problem, bits, "tabu", seed, time.perf_counter() - t_start, max_iterations
    )


def brute_force_solve(blades: BladeSet, disk: DiskImbalance, batch_size: int = 20000) -> SolveReport:
    """Exact minimum over all N! assignments; ties go to the smallest sigma.

    Guarded at N <= 10 (10! is ~3.6M evaluations); meant as the oracle for
    tests and small instances, not as a production solver.
    """
    t_start = time.perf_counter()
    n = blades.n
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force is capped at N={BRUTE_FORCE_LIMIT}, got N={n}")
    z = SlotGeometry(n).unit_vectors()
    m = blades.masses
    y = disk.vector

    best_d2 = math.inf
    best_sigma0 = None
    count = 0
    perms = itertools.permutations(range(n))
    while True:
        chunk = list(itertools.islice(perms, batch_size))
        if not chunk:
            break
        p = np.array(chunk)
        v = (m[None, :, None] * z[p]).sum(axis=1) + y
        d2 = (v * v).sum(axis=1)
        i = int(np.argmin(d2))
        if d2[i] < best_d2:  # strict: earlier (lexicographically smaller) wins ties
            best_d2 = float(d2[i])
            best_sigma0 = chunk[i]
        count += len(chunk)

    assignment = Assignment(np.asarray(best_sigma0) + 1)
    return SolveReport(
        solver_name="brute-force",
        valid=True,
        assignment=assignment,
        imbalance=imbalance(blades, disk, assignment).d,
        seed=0,
        wall_time=time.perf_counter() - t_start,
        iterations=count,
    )


def _run_heuristic(blades, disk, seed, **_):
    return heuristic_solve(blades)


def _run_imbalance_sa(blades, disk, seed, sweeps=None, record_best=False, **_):
    schedule = None if sweeps is None else default_imbalance_schedule(blades, disk, sweeps)
    return imbalance_sa_solve(blades, disk, schedule=schedule, seed=seed, record_best=record_best)


def _run_qubo_sa(blades, disk, seed, sweeps=None, penalty_factor=None, evaluator="implicit", **_):
    problem = build_qubo(
        blades, disk, penalty_factor=penalty_factor or 10.0, materialize=False
    )
    schedule = None if sweeps is None else default_qubo_schedule(problem, sweeps)
    return qubo_sa_solve(problem, schedule=schedule, seed=seed, evaluator=evaluator)


def _run_tabu(blades, disk, seed, tenure=None, max_iterations=None, penalty_factor=None,
              evaluator="implicit", **_):
    problem = build_qubo(
        blades, disk, penalty_factor=penalty_factor or 10.0, materialize=False
    )
    return tabu_solve(
        problem, tenure=tenure, max_iterations=max_iterations, seed=seed, evaluator=evaluator
    )


def _run_brute_force(blades, disk, seed, **_):
    return brute_force_solve(blades, disk)


#: Uniform entry points: fn(blades, disk, seed, **params) -> SolveReport.
SOLVERS = {
    "heuristic": _run_heuristic,
    "imbalance-sa": _run_imbalance_sa,
    "qubo-sa": _run_qubo_sa,
    "tabu": _run_tabu,
    "brute-force": _run_brute_force,
}


def get_solver(name: str):
    try:
        return SOLVERS[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; available: {sorted(SOLVERS)}") from None
