"""Periodic system data: matrix sequences, plant models, trajectory simulation.

Everything here is immutable after construction; trajectory simulation is a
pure function of (model, horizon, seed, x0, noise_scale).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._linalg import sym
from .errors import NumericalError, ValidationError

# Smallest admissible eigenvalue for noise covariance matrices.
PD_EIG_TOL = 1e-12


class PeriodicSequence:
    """A T-periodic sequence of equally shaped real matrices.

    Indexing is defined for every integer time step: ``seq.at(k)`` returns
    the stored matrix at slot ``k % period``.
    """

    def __init__(self, items):
        if isinstance(items, PeriodicSequence):
            self._stack = items._stack
            return
        if isinstance(items, np.ndarray) and items.ndim == 3:
            mats = [items[i] for i in range(items.shape[0])]
        elif isinstance(items, (list, tuple)):
            mats = list(items)
        else:
            mats = [items]
        if not mats:
            raise ValidationError("a periodic sequence needs at least one matrix")
        arrays = [np.atleast_2d(np.asarray(m, dtype=float)) for m in mats]
        shape = arrays[0].shape
        for idx, a in enumerate(arrays):
            if a.ndim != 2:
                raise ValidationError(f"item {idx} is not a matrix")
            if a.shape != shape:
                raise ValidationError(
                    f"item {idx} has shape {a.shape}, expected {shape}"
                )
        self._stack = np.stack(arrays)
        self._stack.setflags(write=False)

    @property
    def period(self) -> int:
        return self._stack.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._stack.shape[1:]

    def at(self, k: int) -> np.ndarray:
        return self._stack[k % self.period]

    def __len__(self) -> int:
        return self.period

    def __iter__(self):
        return iter(self._stack)

    def __repr__(self) -> str:
        return f"PeriodicSequence(period={self.period}, shape={self.shape})"

    def with_period(self, period: int) -> "PeriodicSequence":
        """Re-express the sequence over a longer period (a multiple of its own)."""
        if period % self.period != 0:
            raise ValidationError(
                f"target period {period} is not a multiple of {self.period}"
            )
        if period == self.period:
            return self
        return PeriodicSequence(np.tile(self._stack, (period // self.period, 1, 1)))

    def tolist(self):
        return [m.tolist() for m in self._stack]


def as_periodic(items) -> PeriodicSequence:
    """Coerce a matrix, list of matrices, or sequence into a PeriodicSequence."""
    return items if isinstance(items, PeriodicSequence) else PeriodicSequence(items)


def normalize_period(sequences: list) -> list[PeriodicSequence]:
    """Re-express sequences over their common (lcm) period, values unchanged."""
    seqs = [as_periodic(s) for s in sequences]
    if not seqs:
        return []
    common = math.lcm(*(s.period for s in seqs))
    return [s.with_period(common) for s in seqs]


def _check_spd_sequence(seq: PeriodicSequence, name: str) -> None:
    r, c = seq.shape
    if r != c:
        raise ValidationError(f"{name} matrices must be square, got {seq.shape}")
    for k, M in enumerate(seq):
        if not np.allclose(M, M.T, rtol=0.0, atol=1e-10):
            raise ValidationError(f"{name}[{k}] is not symmetric")
        if np.linalg.eigvalsh(sym(M))[0] <= PD_EIG_TOL:
            raise ValidationError(
                f"{name}[{k}] is not positive definite (min eig <= {PD_EIG_TOL})"
            )


class PlantModel:
    """A T-periodic plant observed by a network of N sensors.

    State dynamics x_{k+1} = A_k x_k + w_k with cov(w_k) = Q_k, and per-sensor
    measurements y_{i,k} = C_{i,k} x_k + v_{i,k} with cov(v_{i,k}) = R_{i,k}.
    All constituent sequences are normalized to their common period at
    construction, so every downstream solver sees a single period.
    """

    def __init__(self, A, Q, C, R, validate: bool = True):
        if len(C) != len(R):
            raise ValidationError("need one R sequence per C sequence")
        if len(C) == 0:
            raise ValidationError("at least one sensor is required")
        seqs = normalize_period([A, Q, *C, *R])
        self.A: PeriodicSequence = seqs[0]
        self.Q: PeriodicSequence = seqs[1]
        n_sensors = len(C)
        self.C: tuple[PeriodicSequence, ...] = tuple(seqs[2 : 2 + n_sensors])
        self.R: tuple[PeriodicSequence, ...] = tuple(seqs[2 + n_sensors :])

        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValidationError(f"A must be square, got {self.A.shape}")
        if self.Q.shape != (n, n):
            raise ValidationError(f"Q must be {n}x{n}, got {self.Q.shape}")
        for i, (Ci, Ri) in enumerate(zip(self.C, self.R)):
            ni = Ci.shape[0]
            if Ci.shape[1] != n:
                raise ValidationError(f"C[{i}] must have {n} columns")
            if Ri.shape != (ni, ni):
                raise ValidationError(f"R[{i}] must be {ni}x{ni} to match C[{i}]")
        if validate:
            _check_spd_sequence(self.Q, "Q")
            for i, Ri in enumerate(self.R):
                _check_spd_sequence(Ri, f"R[{i}]")

    @property
    def n(self) -> int:
        """State dimension."""
        return self.A.shape[0]

    @property
    def N(self) -> int:
        """Sensor count."""
        return len(self.C)

    @property
    def m(self) -> int:
        """Total stacked observation dimension."""
        return sum(Ci.shape[0] for Ci in self.C)

    @property
    def period(self) -> int:
        return self.A.period

    @property
    def sensor_dims(self) -> tuple[int, ...]:
        return tuple(Ci.shape[0] for Ci in self.C)

    def observation_slices(self) -> list[slice]:
        """Per-sensor row slices into the stacked observation vector."""
        out, start = [], 0
        for ni in self.sensor_dims:
            out.append(slice(start, start + ni))
            start += ni
        return out

    def __repr__(self) -> str:
        return (
            f"PlantModel(n={self.n}, N={self.N}, m={self.m}, period={self.period})"
        )

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "A": self.A.tolist(),
            "Q": self.Q.tolist(),
            "sensors": [
                {"C": Ci.tolist(), "R": Ri.tolist()}
                for Ci, Ri in zip(self.C, self.R)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlantModel":
        if "builtin" in data:
            try:
                factory = BUILTIN_PLANTS[data["builtin"]]
            except KeyError:
                raise ValidationError(
                    f"unknown builtin plant {data['builtin']!r}; "
                    f"known: {sorted(BUILTIN_PLANTS)}"
                ) from None
            return factory()
        try:
            sensors = data["sensors"]
            model = cls(
                A=data["A"],
                Q=data["Q"],
                C=[s["C"] for s in sensors],
                R=[s["R"] for s in sensors],
            )
        except KeyError as exc:
            raise ValidationError(f"plant config is missing key {exc}") from None
        if "period" in data and model.period != int(data["period"]):
            raise ValidationError(
                f"declared period {data['period']} does not match "
                f"the sequences' common period {model.period}"
            )
        return model


def stacked_observation(model: PlantModel, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Whole-network observation pair at time k.

    Returns the row-stack of the per-sensor observation matrices and the
    block-diagonal stack of their noise covariances.
    """
    C = np.vstack([Ci.at(k) for Ci in model.C])
    R = np.zeros((model.m, model.m))
    for sl, Ri in zip(model.observation_slices(), model.R):
        R[sl, sl] = Ri.at(k)
    return C, R


@dataclass(frozen=True)
class Trajectory:
    """A simulated state path with per-sensor measurements.

    ``states[k]`` is x_k for k = 0..K; ``measurements[i][k]`` is y_{i,k} over
    the same range. ``seed`` records the generator seed used.
    """

    states: np.ndarray
    measurements: tuple[np.ndarray, ...]
    seed: object = field(repr=False)

    def __post_init__(self):
        self.states.setflags(write=False)
        for y in self.measurements:
            y.setflags(write=False)


def simulate_trajectory(
    model: PlantModel,
    K: int,
    seed,
    x0: np.ndarray | None = None,
    noise_scale: float = 1.0,
) -> Trajectory:
    """Simulate K steps of the plant with mutually independent Gaussian noise.

    Process noise is N(0, noise_scale^2 Q_k) and sensor i's measurement noise
    is N(0, noise_scale^2 R_{i,k}). noise_scale = 0 yields the deterministic
    system response (useful for exact regression tests). Identical arguments
    reproduce the trajectory bit-exactly.
    """
    if K < 1:
        raise ValidationError("horizon K must be >= 1")
    if noise_scale < 0:
        raise ValidationError("noise_scale must be >= 0")
    n, m, T = model.n, model.m, model.period
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValidationError(f"x0 must have shape ({n},)")

    if noise_scale > 0:
        rng = np.random.default_rng(seed)
        w_std = rng.standard_normal((K, n))
        v_std = rng.standard_normal((K + 1, m))
        # Only factor the period slots the horizon actually touches.
        chol_Q = [
            np.linalg.cholesky(sym(model.Q.at(k))) for k in range(min(T, K))
        ]
        chol_R = []
        for k in range(min(T, K + 1)):
            Lr = np.zeros((m, m))
            for sl, Ri in zip(model.observation_slices(), model.R):
                Lr[sl, sl] = np.linalg.cholesky(sym(Ri.at(k)))
            chol_R.append(Lr)
        w = np.stack(
            [noise_scale * chol_Q[k % T] @ w_std[k] for k in range(K)]
        )
        v = np.stack(
            [noise_scale * chol_R[k % T] @ v_std[k] for k in range(K + 1)]
        )
    else:
        w = np.zeros((K, n))
        v = np.zeros((K + 1, m))

    states = np.empty((K + 1, n))
    states[0] = x0
    for k in range(K):
        states[k + 1] = model.A.at(k) @ states[k] + w[k]
    if not np.all(np.isfinite(states)):
        raise NumericalError(
            "trajectory produced non-finite values (unstable plant at this horizon)"
        )

    slices = model.observation_slices()
    measurements = []
    for i, Ci in enumerate(model.C):
        yi = np.empty((K + 1, Ci.shape[0]))
        for k in range(K + 1):
            yi[k] = Ci.at(k) @ states[k] + v[k, slices[i]]
        measurements.append(yi)
    return Trajectory(states=states, measurements=tuple(measurements), seed=seed)


def benchmark_plant() -> PlantModel:
    """Built-in benchmark: two coupled oscillating 2-state blocks, 20 sensors.

    The 4-state plant is block-diagonal with a sinusoidally modulated 2x2
    block (modulation frequencies pi/3 and pi/5, overall period 30). Three
    sensors see state 1 on odd steps, three see state 3 on odd steps, and 14
    are naive relays with all-zero observation rows; every sensor has unit
    measurement noise.
    """
    T = 30
    w1, w2 = np.pi / 3.0, np.pi / 5.0

    def block(k: int) -> np.ndarray:
        return np.array(
            [
                [0.8 + 0.4 * np.sin(w1 * k), 0.5 * np.sin(w2 * k)],
                [0.7 * np.cos(w1 * k), 0.9 + 0.3 * np.cos(w2 * k)],
            ]
        )

    A = [
        np.block(
            [[block(k), np.zeros((2, 2))], [np.zeros((2, 2)), block(k)]]
        )
        for k in range(T)
    ]
    dt = 1.0
    G = np.array([[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]])
    Q = np.block([[G, 0.5 * G], [0.5 * G, G]])

    zero_row = np.zeros((1, 4))
    c_first = np.array([[1.0, 0.0, 0.0, 0.0]])
    c_third = np.array([[0.0, 0.0, 1.0, 0.0]])

    def scheduled(row: np.ndarray) -> PeriodicSequence:
        # observes on odd steps only, period 2
        return PeriodicSequence([zero_row, row])

    C = (
        [scheduled(c_first)] * 3
        + [scheduled(c_third)] * 3
        + [PeriodicSequence(zero_row)] * 14
    )
    R = [PeriodicSequence(np.array([[1.0]]))] * 20
    return PlantModel(A=A, Q=Q, C=C, R=R)


BUILTIN_PLANTS = {
    "paper_sec5": benchmark_plant,
}
