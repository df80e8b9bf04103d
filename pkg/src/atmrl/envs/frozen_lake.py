"""Grid-lake navigation with hidden position and paid position queries.

Cells are Start/Frozen/Hole/Goal. Reaching the goal pays 1 and ends the
episode; falling in a hole pays 0 and ends it. Moves that would leave the
grid clamp to the border. Three motion models:

  * deterministic: the intended move, always.
  * slippery: intended or either perpendicular direction, 1/3 each.
  * semi_slippery: the intended direction, but with probability 0.5 the
    move covers two cells; the double move resolves cell by cell, stopping
    early at a hole, the goal, or the border.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..core import DEFAULT_STEP_CAP, EnvSpec, TabularAcnoEnv

START, FROZEN, HOLE, GOAL = "S", "F", "H", "G"

DETERMINISTIC = "deterministic"
SEMI_SLIPPERY = "semi_slippery"
SLIPPERY = "slippery"
VARIANTS = (DETERMINISTIC, SEMI_SLIPPERY, SLIPPERY)

# action order: left, down, right, up
MOVES = ((0, -1), (1, 0), (0, 1), (-1, 0))

DEFAULT_MAP_4X4 = (
    "SFFF",
    "FHFH",
    "FFFH",
    "HFFG",
)


@dataclass(frozen=True)
class LakeSpec:
    rows: tuple[str, ...] = DEFAULT_MAP_4X4
    variant: str = SEMI_SLIPPERY
    cost: float = 0.05
    discount: float = 0.95
    step_cap: int = DEFAULT_STEP_CAP

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        n = len(self.rows)
        if n < 2 or any(len(r) != len(self.rows[0]) for r in self.rows):
            raise ValueError("map must be rectangular with at least 2 rows")
        flat = "".join(self.rows)
        if flat.count(START) != 1:
            raise ValueError("map must contain exactly one start cell")
        if GOAL not in flat:
            raise ValueError("map must contain a goal cell")
        if set(flat) - {START, FROZEN, HOLE, GOAL}:
            raise ValueError("map cells must be one of S, F, H, G")
        if not _reachable(self.rows):
            raise ValueError("no hole-free path from start to a goal")

    @property
    def size(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])


def _cells(rows):
    return [list(r) for r in rows]


def _reachable(rows) -> bool:
    """Breadth-first search: does a hole-avoiding start-to-goal path exist?"""
    grid = _cells(rows)
    n, m = len(grid), len(grid[0])
    start = next((r, c) for r in range(n) for c in range(m) if grid[r][c] == START)
    seen = {start}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        if grid[r][c] == GOAL:
            return True
        for dr, dc in MOVES:
            nr, nc = r + dr, c + dc
            if 0 <= nr < n and 0 <= nc < m and (nr, nc) not in seen and grid[nr][nc] != HOLE:
                seen.add((nr, nc))
                queue.append((nr, nc))
    return False


def generate_lake(
    n: int,
    hole_density: float,
    seed: int,
    variant: str = SEMI_SLIPPERY,
    cost: float = 0.05,
    max_attempts: int = 10_000,
) -> LakeSpec:
    """Random n-by-n map with i.i.d. holes, resampled until solvable."""
    if n < 4:
        raise ValueError("lake size must be at least 4")
    if not (0.0 <= hole_density < 1.0):
        raise ValueError("hole density must lie in [0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence([n, int(hole_density * 1e9), seed]))
    for _ in range(max_attempts):
        holes = rng.random((n, n)) < hole_density
        grid = np.where(holes, HOLE, FROZEN).astype(object)
        grid[0, 0] = START
        grid[n - 1, n - 1] = GOAL
        rows = tuple("".join(row) for row in grid)
        if _reachable(rows):
            return LakeSpec(rows=rows, variant=variant, cost=cost)
    raise RuntimeError(f"no solvable map found in {max_attempts} attempts (density {hole_density})")


def write_map(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def read_map(path) -> tuple[str, ...]:
    with open(path) as fh:
        return tuple(line.strip() for line in fh if line.strip())


def lake_kernel(spec: LakeSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Exact (P, R, terminal, start_index) tensors for a lake spec."""
    grid = _cells(spec.rows)
    n, m = spec.size
    num_states = n * m

    def idx(r, c):
        return r * m + c

    def clamp_move(r, c, a):
        dr, dc = MOVES[a]
        return min(max(r + dr, 0), n - 1), min(max(c + dc, 0), m - 1)

    def outcomes(r, c, a):
        """[(prob, landing)] for taking a at (r, c); assumes (r, c) nonterminal."""
        if spec.variant == DETERMINISTIC:
            return [(1.0, clamp_move(r, c, a))]
        if spec.variant == SLIPPERY:
            dirs = [(a - 1) % 4, a, (a + 1) % 4]
            return [(1.0 / 3.0, clamp_move(r, c, d)) for d in dirs]
        # semi-slippery: single step or resolved double step, half each
        single = clamp_move(r, c, a)
        first = single
        if first == (r, c) or grid[first[0]][first[1]] in (HOLE, GOAL):
            double = first  # border or terminal stops the double move at cell one
        else:
            double = clamp_move(first[0], first[1], a)
        return [(0.5, single), (0.5, double)]

    P = np.zeros((num_states, 4, num_states))
    R = np.zeros((num_states, 4, num_states))
    terminal = np.zeros(num_states, dtype=bool)
    start = -1
    for r in range(n):
        for c in range(m):
            s = idx(r, c)
            cell = grid[r][c]
            if cell == START:
                start = s
            if cell in (HOLE, GOAL):
                terminal[s] = True
                P[s, :, s] = 1.0
                continue
            for a in range(4):
                for prob, (lr, lc) in outcomes(r, c, a):
                    s2 = idx(lr, lc)
                    P[s, a, s2] += prob
                    if grid[lr][lc] == GOAL:
                        R[s, a, s2] = 1.0
    return P, R, terminal, start


def make_lake_env(spec: LakeSpec = LakeSpec()) -> TabularAcnoEnv:
    P, R, terminal, start = lake_kernel(spec)
    env_spec = EnvSpec(
        num_states=P.shape[0],
        num_actions=4,
        measurement_cost=spec.cost,
        discount=spec.discount,
        initial_state=start,
    )
    return TabularAcnoEnv(P, R, terminal, env_spec, step_cap=spec.step_cap)
