"""Gaussian radial-basis-function estimators for unknown agent dynamics.

A network maps the stacked world state x to an estimate of one agent's
velocity via

    xdot_hat = W^T Phi(x),
    Phi(x)   = [exp(-|x - c_1|^2 / (2 rho_1^2)), ..., exp(-|x - c_M|^2 / (2 rho_M^2)), 1]

with centers c_j, widths rho_j and a trailing constant feature whose weight
row acts as a bias.  Offline training picks centers by seeded k-means and
solves a ridge least-squares problem for the weights.  Online, the weights
follow a concurrent-learning gradient step that combines the newest sample
with a small store of recorded samples kept only while they add numerical
rank to the stacked feature matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateDataError, InputError, InsufficientDataError

# Relative singular-value cutoff used for the store's numerical rank.
RANK_TOL = 1e-8


@dataclass
class TrainingSample:
    """One observed (state, derivative) pair with its acquisition time."""

    state: np.ndarray
    derivative: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=float).ravel()
        self.derivative = np.asarray(self.derivative, dtype=float).ravel()


@dataclass
class RbfNetwork:
    """Gaussian-basis network with a constant bias feature.

    centers has one column per neuron, shape (input_dim, M); widths has
    shape (M,); weights has shape (M + 1, output_dim) where the last row
    multiplies the constant feature.
    """

    centers: np.ndarray
    widths: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.widths = np.asarray(self.widths, dtype=float).ravel()
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        m = self.centers.shape[1]
        if self.widths.shape[0] != m:
            raise InputError(
                f"expected {m} widths to match {m} centers, got {self.widths.shape[0]}"
            )
        if np.any(self.widths <= 0.0):
            raise InputError("widths must be strictly positive")
        if self.weights.shape[0] != m + 1:
            raise InputError(
                f"weights must have {m + 1} rows (neurons + bias), got {self.weights.shape[0]}"
            )

    @property
    def input_dim(self) -> int:
        return self.centers.shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def num_neurons(self) -> int:
        return self.centers.shape[1]


def basis(net: RbfNetwork, x: np.ndarray) -> np.ndarray:
    """Feature vector Phi(x) of length M + 1; the last entry is exactly 1."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != net.input_dim:
        raise InputError(f"state has dim {x.shape[0]}, network expects {net.input_dim}")
    d2 = np.sum((x[:, None] - net.centers) ** 2, axis=0)
    out = np.empty(net.num_neurons + 1)
    out[:-1] = np.exp(-d2 / (2.0 * net.widths**2))
    out[-1] = 1.0
    return out


def basis_batch(net: RbfNetwork, states: np.ndarray) -> np.ndarray:
    """Row-stacked features for many states, shape (N, M + 1)."""
    X = np.atleast_2d(np.asarray(states, dtype=float))
    if X.shape[1] != net.input_dim:
        raise InputError(f"states have dim {X.shape[1]}, network expects {net.input_dim}")
    d2 = np.sum((X[:, :, None] - net.centers[None, :, :]) ** 2, axis=1)
    feats = np.exp(-d2 / (2.0 * net.widths**2))
    return np.hstack([feats, np.ones((X.shape[0], 1))])


def predict(net: RbfNetwork, x: np.ndarray) -> np.ndarray:
    """Estimated derivative W^T Phi(x), shape (output_dim,)."""
    return net.weights.T @ basis(net, x)


def predict_batch(net: RbfNetwork, states: np.ndarray) -> np.ndarray:
    """Estimated derivatives for row-stacked states, shape (N, output_dim)."""
    return basis_batch(net, states) @ net.weights


def estimation_error(net: RbfNetwork, sample: TrainingSample) -> np.ndarray:
    """Signed residual: estimate minus observed derivative."""
    if sample.derivative.shape[0] != net.output_dim:
        raise InputError(
            f"derivative has dim {sample.derivative.shape[0]}, "
            f"network outputs {net.output_dim}"
        )
    return predict(net, sample.state) - sample.derivative


class _EmptyCluster(Exception):
    pass


def _lloyd(states: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int = 100, tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """One k-means run from a random subset init; raises on an empty cluster."""
    idx = rng.choice(states.shape[0], size=k, replace=False)
    centers = states[idx].copy()
    for _ in range(max_iter):
        d2 = np.sum((states[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        assign = np.argmin(d2, axis=1)
        new_centers = np.empty_like(centers)
        for j in range(k):
            members = states[assign == j]
            if members.shape[0] == 0:
                raise _EmptyCluster
            new_centers[j] = members.mean(axis=0)
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if shift <= tol:
            break
    d2 = np.sum((states[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    inertia = float(np.sum(np.min(d2, axis=1)))
    return centers, inertia


def _kmeans_centers(states: np.ndarray, k: int, seed: int,
                    restarts: int = 5, max_failures: int = 10) -> np.ndarray:
    """Best-of-`restarts` seeded k-means; reseeds on empty clusters.

    Returns centers as columns, shape (input_dim, k).
    """
    rng = np.random.default_rng(seed)
    best_centers = None
    best_inertia = np.inf
    successes = 0
    failures = 0
    while successes < restarts:
        try:
            centers, inertia = _lloyd(states, k, rng)
        except _EmptyCluster:
            failures += 1
            if failures >= max_failures:
                raise DegenerateDataError(
                    f"k-means produced an empty cluster in {failures} consecutive "
                    f"attempts; the dataset has fewer than {k} distinguishable states"
                )
            continue
        successes += 1
        if inertia < best_inertia:
            best_inertia = inertia
            best_centers = centers
    return best_centers.T


def train_offline(dataset: Sequence[TrainingSample], num_neurons: int, width: float,
                  ridge: float = 0.0, seed: int = 0,
                  centers: Optional[np.ndarray] = None) -> RbfNetwork:
    """Fit a network to recorded samples.

    Centers come from seeded best-of-5 k-means over the sample states unless
    given explicitly (useful for controlled fits); every neuron gets the same
    width.  Weights minimise

        sum_k |W^T Phi(x_k) - xdot_k|^2 + ridge * |W|_F^2

    with the ridge applied to all rows including the bias.  With ridge = 0 the
    minimum-norm least-squares solution is returned.
    """
    if num_neurons < 1:
        raise InputError("num_neurons must be at least 1")
    if width <= 0.0:
        raise InputError("width must be strictly positive")
    if ridge < 0.0:
        raise InputError("ridge must be non-negative")
    if len(dataset) < num_neurons:
        raise InsufficientDataError(
            f"need at least {num_neurons} samples to place {num_neurons} centers, "
            f"got {len(dataset)}"
        )
    states = np.stack([s.state for s in dataset])
    targets = np.stack([s.derivative for s in dataset])
    if centers is None:
        centers = _kmeans_centers(states, num_neurons, seed)
    else:
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if centers.shape != (states.shape[1], num_neurons):
            raise InputError(
                f"explicit centers must have shape ({states.shape[1]}, {num_neurons}), "
                f"got {centers.shape}"
            )
    net = RbfNetwork(
        centers=centers,
        widths=np.full(num_neurons, float(width)),
        weights=np.zeros((num_neurons + 1, targets.shape[1])),
    )
    A = basis_batch(net, states)
    if ridge > 0.0:
        gram = A.T @ A + ridge * np.eye(A.shape[1])
        weights = np.linalg.solve(gram, A.T @ targets)
    else:
        weights, *_ = np.linalg.lstsq(A, targets, rcond=None)
    return replace(net, weights=weights)


def training_residual_rms(net: RbfNetwork, dataset: Sequence[TrainingSample]) -> float:
    """Root-mean-square residual of the network over a dataset."""
    if not dataset:
        raise InsufficientDataError("empty dataset")
    states = np.stack([s.state for s in dataset])
    targets = np.stack([s.derivative for s in dataset])
    resid = predict_batch(net, states) - targets
    return float(np.sqrt(np.mean(resid**2)))


@dataclass
class RecordedDataStore:
    """Rank-gated store of past samples for concurrent learning.

    Admits a sample only while its feature vector increases the numerical
    rank of the stacked feature matrix, so at most capacity = M + 1 samples
    are ever kept.
    """

    capacity: int
    samples: list[TrainingSample] = field(default_factory=list)
    basis_matrix: Optional[np.ndarray] = None  # (M + 1, count), one column per sample
    numerical_rank: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise InputError("capacity must be at least 1")


def _numeric_rank(mat: np.ndarray) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


def try_admit(store: RecordedDataStore, net: RbfNetwork, sample: TrainingSample) -> bool:
    """Admit `sample` if its feature vector raises the store's rank.

    Returns True on admission.  Once the rank reaches the capacity the store
    is full and every offer is refused.  All store fields are updated
    together so a refused offer leaves the store untouched.
    """
    if store.numerical_rank >= store.capacity:
        return False
    phi = basis(net, sample.state)
    column = phi[:, None]
    if store.basis_matrix is None:
        candidate = column
    else:
        candidate = np.hstack([store.basis_matrix, column])
    rank = _numeric_rank(candidate)
    if rank <= store.numerical_rank:
        return False
    store.samples.append(sample)
    store.basis_matrix = candidate
    store.numerical_rank = rank
    return True


def update_online(net: RbfNetwork, store: RecordedDataStore, latest: TrainingSample,
                  gamma1: float, gamma2: float, dt: float) -> RbfNetwork:
    """One concurrent-learning weight step; returns a new network.

    The instantaneous term always applies:

        W <- W - gamma1 * Phi(x_new) eps_new^T * dt

    with eps_new the residual of the newest sample under the current
    weights.  When the store's feature matrix has full numerical rank
    (M + 1), the recorded samples contribute an additional term

        - gamma2 * sum_m Phi(x_m) eps_m^T * dt

    where every eps_m is recomputed with the current (pre-step) weights.
    Centers and widths never change online.
    """
    if dt <= 0.0:
        raise InputError("dt must be positive")
    if gamma1 < 0.0 or gamma2 < 0.0:
        raise InputError("gains must be non-negative")
    phi = basis(net, latest.state)
    eps = net.weights.T @ phi - latest.derivative
    if eps.shape[0] != net.output_dim:
        raise InputError("latest sample derivative does not match network output")
    step = gamma1 * np.outer(phi, eps)
    if store.numerical_rank >= net.num_neurons + 1 and store.samples:
        states = np.stack([s.state for s in store.samples])
        derivs = np.stack([s.derivative for s in store.samples])
        feats = basis_batch(net, states)
        resid = feats @ net.weights - derivs
        step = step + gamma2 * (feats.T @ resid)
    return replace(net, weights=net.weights - step * dt)
