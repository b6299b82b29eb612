import hypothesis
import numpy as np
import pytest

from mvnewton.grid import Nodes1D
from mvnewton.multi_index import MultiIndexSet

hypothesis.settings.register_profile(
    "ci", deadline=None, max_examples=40, derandomize=True
)
hypothesis.settings.load_profile("ci")


def random_downward_closed(
    rng: np.random.Generator,
    dim: int,
    target_size: int,
    max_degree: int = 8,
) -> MultiIndexSet:
    """Grow a random downward-closed set by adding admissible neighbours.

    A candidate ``alpha + e_i`` is admissible when all its back-neighbours
    are already present, which keeps the set downward closed at every step.
    """
    target_size = min(target_size, (max_degree + 1) ** dim)
    members = {(0,) * dim}
    frontier = [(0,) * dim]
    attempts = 0
    while len(members) < target_size and attempts < 500 * target_size:
        attempts += 1
        base = frontier[rng.integers(len(frontier))]
        axis = int(rng.integers(dim))
        candidate = list(base)
        candidate[axis] += 1
        candidate = tuple(candidate)
        if candidate in members or candidate[axis] > max_degree:
            continue
        admissible = all(
            tuple(candidate[:i]) + (candidate[i] - 1,) + tuple(candidate[i + 1 :])
            in members
            for i in range(dim)
            if candidate[i] > 0
        )
        if admissible:
            members.add(candidate)
            frontier.append(candidate)
    return MultiIndexSet(sorted(members, key=lambda a: tuple(reversed(a))))


def random_axes(rng: np.random.Generator, sizes) -> list[Nodes1D]:
    """Distinct, well-separated random points per axis, in random order."""
    axes = []
    for size in sizes:
        # jittered grid keeps a minimum separation so divided differences
        # and the Vandermonde oracle stay well away from degeneracy
        base = np.linspace(-1.0, 1.0, size) if size > 1 else np.zeros(1)
        jitter = rng.uniform(-0.3, 0.3, size=size) * (2.0 / max(size - 1, 1)) * 0.5
        pts = np.clip(base + jitter, -1.0, 1.0)
        while len(np.unique(pts)) != size:
            pts = np.clip(base + rng.uniform(-0.3, 0.3, size) * 0.5, -1.0, 1.0)
        axes.append(Nodes1D(rng.permutation(pts)))
    return axes


def newton_collocation_matrix(grid) -> np.ndarray:
    """Oracle collocation matrix ``N_beta(p_alpha)``, written out directly
    from the basis product formula (independent of the library kernels);
    lower triangular in canonical order."""
    exps = grid.index_set.exponents
    coords = grid.node_coordinates
    size = len(grid)
    out = np.ones((size, size))
    for i in range(grid.dim):
        pts = grid.axes[i].points
        prefix = np.ones((size, exps[:, i].max() + 1))
        for k in range(1, prefix.shape[1]):
            prefix[:, k] = prefix[:, k - 1] * (coords[:, i] - pts[k - 1])
        out *= prefix[:, exps[:, i]]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
