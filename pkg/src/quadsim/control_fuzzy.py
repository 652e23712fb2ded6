"""Two-input first-order Sugeno inference and ANFIS hybrid training.

Each input carries ``n_mf`` generalised-bell membership functions and the
rule base is the full ``n_mf x n_mf`` grid. Rule ``(i, j)`` fires with
strength ``mu1_i(e) * mu2_j(e_dot)`` and proposes ``p*e + q*e_dot + r``; the
output is the firing-strength weighted average of the proposals.

Training alternates a least-squares solve for the consequents with one
gradient step on the bell parameters (Jang's hybrid rule).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateFiring,
    InvalidRange,
    ParseError,
    ScenarioDiverged,
    SingularAttitude,
    SingularLSQ,
    ValidationError,
)

FIRING_FLOOR = 1e-12
FORMAT_VERSION = 1

ALTITUDE = "altitude"
ATTITUDE = "attitude"


@dataclass(frozen=True)
class MembershipFunction:
    """Generalised bell ``1 / (1 + |(x - c)/a|^(2b))``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("bell width a and shape b must be positive")

    def __call__(self, x):
        return _kernels.bell_numpy(np.asarray(x, dtype=float), self.a, self.b, self.c)


@dataclass
class FISModel:
    """Sugeno model over (error, error rate).

    ``mf`` has shape ``(2, n_mf, 3)`` holding ``(a, b, c)`` per membership
    function; ``coef`` has shape ``(n_mf**2, 3)`` holding ``(p, q, r)`` with
    rule ``k = i*n_mf + j``.
    """

    mf: np.ndarray
    coef: np.ndarray
    input_ranges: tuple[tuple[float, float], tuple[float, float]]
    name: str = ""

    def __post_init__(self):
        self.mf = np.ascontiguousarray(self.mf, dtype=np.float64)
        self.coef = np.ascontiguousarray(self.coef, dtype=np.float64)
        if self.mf.ndim != 3 or self.mf.shape[0] != 2 or self.mf.shape[2] != 3:
            raise ValidationError("mf must have shape (2, n_mf, 3)")
        n = self.mf.shape[1]
        if self.coef.shape != (n * n, 3):
            raise ValidationError(f"coef must have shape ({n * n}, 3)")
        if not (np.all(self.mf[:, :, 0] > 0) and np.all(self.mf[:, :, 1] > 0)):
            raise ValidationError("bell widths and shapes must be positive")
        if np.any(np.diff(self.mf[:, :, 2], axis=1) < 0):
            raise ValidationError("membership centres must be sorted ascending")
        if not (np.all(np.isfinite(self.mf)) and np.all(np.isfinite(self.coef))):
            raise ValidationError("model parameters must be finite")
        self.input_ranges = tuple((float(lo), float(hi)) for lo, hi in self.input_ranges)

    @property
    def n_mf(self) -> int:
        return self.mf.shape[1]

    @property
    def input1_mfs(self) -> list[MembershipFunction]:
        return [MembershipFunction(*row) for row in self.mf[0]]

    @property
    def input2_mfs(self) -> list[MembershipFunction]:
        return [MembershipFunction(*row) for row in self.mf[1]]

    def copy(self) -> "FISModel":
        return FISModel(self.mf.copy(), self.coef.copy(), self.input_ranges, self.name)

    def __eq__(self, other):
        if not isinstance(other, FISModel):
            return NotImplemented
        return (
            np.array_equal(self.mf, other.mf)
            and np.array_equal(self.coef, other.coef)
            and self.input_ranges == other.input_ranges
        )


def fis_evaluate_batch(model: FISModel, e, e_dot) -> np.ndarray:
    """Vector form of :func:`fis_evaluate`."""
    x1 = np.ascontiguousarray(e, dtype=np.float64).reshape(-1)
    x2 = np.ascontiguousarray(e_dot, dtype=np.float64).reshape(-1)
    out = np.empty(x1.shape[0])
    wsum = np.empty(x1.shape[0])
    _kernels.fis_batch(x1, x2, model.mf, model.coef, out, wsum)
    bad = ~(wsum >= FIRING_FLOOR)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise DegenerateFiring(
            f"total firing strength {wsum[k]:.3g} at (e={x1[k]:g}, e_dot={x2[k]:g}) is below {FIRING_FLOOR:g}"
        )
    return out


def fis_evaluate(model: FISModel, e: float, e_dot: float) -> float:
    """Crisp output of the Sugeno model at one ``(e, e_dot)`` point.

    Raises
    ------
    DegenerateFiring
        If the summed firing strength is below ``1e-12``, which happens far
        outside the range the model was built for.
    """
    return float(fis_evaluate_batch(model, [e], [e_dot])[0])


def memberships(model: FISModel, x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mf = model.mf
    mu1 = _kernels.bell_numpy(x1[:, None], mf[0, :, 0], mf[0, :, 1], mf[0, :, 2])
    mu2 = _kernels.bell_numpy(x2[:, None], mf[1, :, 0], mf[1, :, 1], mf[1, :, 2])
    return mu1, mu2


def firing_strengths(model: FISModel, e, e_dot, normalize: bool = True) -> np.ndarray:
    """Rule firing strengths, shape ``(n_samples, n_rules)``."""
    x1 = np.asarray(e, dtype=float).reshape(-1)
    x2 = np.asarray(e_dot, dtype=float).reshape(-1)
    mu1, mu2 = memberships(model, x1, x2)
    w = (mu1[:, :, None] * mu2[:, None, :]).reshape(x1.size, -1)
    if not normalize:
        return w
    s = w.sum(axis=1, keepdims=True)
    if np.any(~(s >= FIRING_FLOOR)):
        raise DegenerateFiring("total firing strength vanished for some samples")
    return w / s


def rule_outputs(model: FISModel, e, e_dot) -> np.ndarray:
    """Each rule's linear proposal, shape ``(n_samples, n_rules)``."""
    x1 = np.asarray(e, dtype=float).reshape(-1, 1)
    x2 = np.asarray(e_dot, dtype=float).reshape(-1, 1)
    return model.coef[:, 0] * x1 + model.coef[:, 1] * x2 + model.coef[:, 2]


# ---------------------------------------------------------------------------
# data and training


@dataclass
class TrainingDataset:
    """Rows of ``(e, e_dot, u_teacher)`` for one controller."""

    e: np.ndarray
    e_dot: np.ndarray
    u: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=float).reshape(-1)
        self.e_dot = np.asarray(self.e_dot, dtype=float).reshape(-1)
        self.u = np.asarray(self.u, dtype=float).reshape(-1)
        if not (self.e.size == self.e_dot.size == self.u.size):
            raise ValidationError("dataset columns must have equal length")
        if self.e.size == 0:
            raise ValidationError("dataset must not be empty")
        if not (np.all(np.isfinite(self.e)) and np.all(np.isfinite(self.e_dot)) and np.all(np.isfinite(self.u))):
            raise ValidationError("dataset must be finite")

    def __len__(self) -> int:
        return self.e.size

    @property
    def input_ranges(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (
            (float(self.e.min()), float(self.e.max())),
            (float(self.e_dot.min()), float(self.e_dot.max())),
        )

    def subset(self, idx) -> "TrainingDataset":
        return TrainingDataset(self.e[idx], self.e_dot[idx], self.u[idx], self.name)

    def split(self, holdout: float, seed: int) -> tuple["TrainingDataset", "TrainingDataset | None"]:
        """Random train/holdout split of the rows."""
        if holdout <= 0:
            return self, None
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(self))
        n_hold = int(round(holdout * len(self)))
        if n_hold == 0 or n_hold == len(self):
            return self, None
        hold = np.sort(perm[:n_hold])
        train = np.sort(perm[n_hold:])
        return self.subset(train), self.subset(hold)

    @classmethod
    def concat(cls, parts, name="") -> "TrainingDataset":
        parts = list(parts)
        return cls(
            np.concatenate([p.e for p in parts]),
            np.concatenate([p.e_dot for p in parts]),
            np.concatenate([p.u for p in parts]),
            name,
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 0.02
    holdout: float = 0.2
    seed: int = 42

    def __post_init__(self):
        if not (isinstance(self.epochs, int) and self.epochs >= 1):
            raise ValidationError("epochs must be an integer >= 1")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")
        if not (0 <= self.holdout < 1):
            raise ValidationError("holdout must be in [0, 1)")


@dataclass
class TrainResult:
    model: FISModel
    rmse_history: list[float] = field(default_factory=list)
    holdout_history: list[float] = field(default_factory=list)
    premise_history: list[float] = field(default_factory=list)
    step_sizes: list[float] = field(default_factory=list)

    @property
    def final_rmse(self) -> float:
        return self.premise_history[-1] if self.premise_history else self.rmse_history[-1]


def anfis_init(dataset: TrainingDataset, n_mf: int = 5, name: str = "") -> FISModel:
    """Evenly spaced bells over the observed input ranges, zero consequents.

    Centres sit at the range ends and ``n_mf - 2`` interior points; widths are
    half the centre spacing and the shape exponent is 2.
    """
    if n_mf < 2:
        raise ValidationError("need at least two membership functions per input")
    mf = np.empty((2, n_mf, 3))
    for k, (lo, hi) in enumerate(dataset.input_ranges):
        if not hi > lo:
            col = "e" if k == 0 else "e_dot"
            raise InvalidRange(f"input column {col!r} has zero spread")
        centres = np.linspace(lo, hi, n_mf)
        spacing = (hi - lo) / (n_mf - 1)
        mf[k, :, 0] = spacing / 2.0
        mf[k, :, 1] = 2.0
        mf[k, :, 2] = centres
    return FISModel(mf, np.zeros((n_mf * n_mf, 3)), dataset.input_ranges, name or dataset.name)


def rmse(model: FISModel, dataset: TrainingDataset) -> float:
    pred = fis_evaluate_batch(model, dataset.e, dataset.e_dot)
    return float(np.sqrt(np.mean((pred - dataset.u) ** 2)))


def consequent_regressors(model: FISModel, e, e_dot) -> np.ndarray:
    """Design matrix whose product with ``coef.ravel()`` is the model output."""
    wn = firing_strengths(model, e, e_dot)
    x1 = np.asarray(e, dtype=float).reshape(-1, 1)
    x2 = np.asarray(e_dot, dtype=float).reshape(-1, 1)
    return np.stack([wn * x1, wn * x2, wn], axis=2).reshape(wn.shape[0], -1)


def fit_consequents(model: FISModel, dataset: TrainingDataset) -> FISModel:
    """Least-squares consequents with the premises held fixed.

    Raises
    ------
    SingularLSQ
        If the column-equilibrated regressor matrix is rank deficient.
    """
    A = consequent_regressors(model, dataset.e, dataset.e_dot)
    scale = np.sqrt(np.sum(A * A, axis=0))
    if np.any(scale == 0):
        raise SingularLSQ("a rule never fires on the training data")
    As = A / scale
    sol, _, rank, sv = np.linalg.lstsq(As, dataset.u, rcond=None)
    if rank < As.shape[1]:
        raise SingularLSQ(
            f"regressor rank {rank} < {As.shape[1]}; the data do not excite every rule"
        )
    out = model.copy()
    out.coef = (sol / scale).reshape(-1, 3)
    return out


def premise_gradient(model: FISModel, dataset: TrainingDataset) -> np.ndarray:
    """Gradient of ``0.5 * mean((y_hat - u)^2)`` w.r.t. ``model.mf``."""
    x1, x2, y = dataset.e, dataset.e_dot, dataset.u
    mf = model.mf
    n = model.n_mf
    mu1, mu2 = memberships(model, x1, x2)
    w = (mu1[:, :, None] * mu2[:, None, :]).reshape(x1.size, -1)
    S = w.sum(axis=1)
    if np.any(~(S >= FIRING_FLOOR)):
        raise DegenerateFiring("total firing strength vanished for some samples")
    f = rule_outputs(model, x1, x2)
    yhat = (w * f).sum(axis=1) / S
    dE_dy = (yhat - y) / x1.size
    # dy/dw_k = (f_k - yhat) / S
    g = ((f - yhat[:, None]) / S[:, None]).reshape(x1.size, n, n)
    dy_dmu1 = np.einsum("tij,tj->ti", g, mu2)
    dy_dmu2 = np.einsum("tij,ti->tj", g, mu1)

    grad = np.zeros_like(mf)
    for k, (x, mu, dy_dmu) in enumerate(((x1, mu1, dy_dmu1), (x2, mu2, dy_dmu2))):
        a, b, c = mf[k, :, 0], mf[k, :, 1], mf[k, :, 2]
        z = (x[:, None] - c) / a
        az = np.abs(z)
        u = az ** (2.0 * b)
        with np.errstate(divide="ignore", invalid="ignore"):
            du_dz = np.where(az > 0, 2.0 * b * az ** (2.0 * b - 1.0) * np.sign(z), 0.0)
            log_az = np.where(az > 0, np.log(np.where(az > 0, az, 1.0)), 0.0)
        mu2_ = mu * mu
        dmu_da = mu2_ * du_dz * z / a
        dmu_db = -mu2_ * 2.0 * log_az * u
        dmu_dc = mu2_ * du_dz / a
        common = dE_dy[:, None] * dy_dmu
        grad[k, :, 0] = np.sum(common * dmu_da, axis=0)
        grad[k, :, 1] = np.sum(common * dmu_db, axis=0)
        grad[k, :, 2] = np.sum(common * dmu_dc, axis=0)
    return grad


def _loss(model: FISModel, dataset: TrainingDataset) -> float:
    pred = fis_evaluate_batch(model, dataset.e, dataset.e_dot)
    return 0.5 * float(np.mean((pred - dataset.u) ** 2))


def _premise_step(model: FISModel, dataset: TrainingDataset, step: float) -> tuple[FISModel, float, bool]:
    """Normalised gradient step on the bells, backtracking until the loss drops.

    Steps are taken in range-normalised coordinates so both inputs move at a
    comparable rate regardless of their units.
    """
    base = _loss(model, dataset)
    grad = premise_gradient(model, dataset)
    spans = np.array([hi - lo for lo, hi in model.input_ranges])
    scale = np.ones_like(model.mf)
    scale[:, :, 0] = spans[:, None]
    scale[:, :, 2] = spans[:, None]
    g_norm = grad * scale
    norm = float(np.sqrt(np.sum(g_norm * g_norm)))
    if norm == 0.0 or not math.isfinite(norm):
        return model, step, False
    direction = -(g_norm / norm) * scale
    for _ in range(12):
        cand_mf = model.mf + step * direction
        if (
            np.all(cand_mf[:, :, 0] > 0)
            and np.all(cand_mf[:, :, 1] > 0.05)
            and np.all(np.diff(cand_mf[:, :, 2], axis=1) > 0)
        ):
            cand = FISModel(cand_mf, model.coef, model.input_ranges, model.name)
            try:
                loss = _loss(cand, dataset)
            except DegenerateFiring:
                loss = math.inf
            if loss < base:
                return cand, step * 1.1, True
        step *= 0.5
    return model, step, False


def anfis_train(model: FISModel, dataset: TrainingDataset, config: TrainConfig | None = None) -> TrainResult:
    """Hybrid ANFIS training.

    Every epoch solves the consequents by least squares with the bells fixed,
    records the training RMSE, then takes one backtracking gradient step on
    the bell parameters. Because the gradient step is only accepted when it
    lowers the loss, the recorded RMSE never increases between epochs.
    """
    config = config or TrainConfig()
    train, hold = dataset.split(config.holdout, config.seed)
    result = TrainResult(model.copy())
    current = model.copy()
    step = config.learning_rate
    for _ in range(config.epochs):
        current = fit_consequents(current, train)
        result.rmse_history.append(rmse(current, train))
        if hold is not None:
            result.holdout_history.append(rmse(current, hold))
        current, step, _ = _premise_step(current, train, step)
        result.premise_history.append(rmse(current, train))
        result.step_sizes.append(step)
    result.model = current
    return result


def holdout_rmse(model: FISModel, dataset: TrainingDataset, config: TrainConfig) -> float | None:
    _, hold = dataset.split(config.holdout, config.seed)
    return None if hold is None else rmse(model, hold)


# ---------------------------------------------------------------------------
# teacher data

#: State bounds for teacher runs: |z| (m) and |phi|, |theta| (rad).
TEACHER_Z_BOUND = 100.0
TEACHER_TILT_BOUND = math.radians(89.0)


@dataclass(frozen=True)
class TeacherScenario:
    """PD regulation run from ``(z0, phi0, theta0, psi0)`` (m, deg) logging ``axes``."""

    z0: float = 0.0
    phi0: float = 0.0
    theta0: float = 0.0
    psi0: float = 0.0
    axes: tuple[str, ...] = ("z",)
    duration: float = 20.0

    def __post_init__(self):
        bad = [a for a in self.axes if a not in ("z", "phi", "theta", "psi")]
        if bad or not self.axes:
            raise ValidationError(f"teacher axes must be drawn from z, phi, theta, psi; got {self.axes}")


DEFAULT_TEACHER_Z = (-4.0, -3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0, 4.0)
DEFAULT_TEACHER_TILT = (-70.0, -50.0, -30.0, -10.0, 10.0, 30.0, 50.0, 70.0)
DEFAULT_TEACHER_YAW = (-30.0, -20.0, -10.0, 10.0, 20.0, 30.0)


def default_teacher_battery(z_values=DEFAULT_TEACHER_Z, tilt_values=DEFAULT_TEACHER_TILT,
                            yaw_values=DEFAULT_TEACHER_YAW, duration: float = 20.0) -> list[TeacherScenario]:
    """Altitude-only runs over ``z_values`` (m) and single-axis attitude runs (deg).

    Each tilt value yields one roll and one pitch run; each yaw value one
    yaw run.
    """
    out = [TeacherScenario(z0=z, axes=("z",), duration=duration) for z in z_values]
    for ang in tilt_values:
        out.append(TeacherScenario(phi0=ang, axes=("phi",), duration=duration))
        out.append(TeacherScenario(theta0=ang, axes=("theta",), duration=duration))
    for ang in yaw_values:
        out.append(TeacherScenario(psi0=ang, axes=("psi",), duration=duration))
    return out


def _check_teacher_bounds(states: np.ndarray) -> bool:
    return bool(
        np.all(np.isfinite(states))
        and np.all(np.abs(states[:, 2]) <= TEACHER_Z_BOUND)
        and np.all(np.abs(states[:, 6:8]) <= TEACHER_TILT_BOUND)
    )


def generate_training_data(scenarios=None, params=None, gains=None, dt: float = 0.01) -> dict[str, TrainingDataset]:
    """Log ``(e, e_dot, u)`` of the PD loop over a scenario battery.

    Returns ``{"altitude": ..., "attitude": ...}``. One row is logged per
    controller step that drives the plant, so a 20 s run at 10 ms gives 2000
    rows per logged axis. The altitude output excludes the ``m*g``
    feedforward. The error rate is the backward difference of the error,
    zero on the first step, which is how the fuzzy controller sees it in
    flight. The teacher loops start bumpless (no derivative kick), so every
    logged output is the PD law applied to the logged error history. All
    roll, pitch and yaw rows go into the shared attitude set.

    Raises
    ------
    ScenarioDiverged
        If a run leaves the state bounds or hits the pitch singularity.
    """
    from . import experiments
    from .control_linear import ALTITUDE_GAINS, ATTITUDE_GAINS
    from .params import QuadParams

    params = params or QuadParams()
    gains = gains or (ALTITUDE_GAINS, ATTITUDE_GAINS)
    scenarios = default_teacher_battery() if scenarios is None else list(scenarios)
    if not scenarios:
        raise ValidationError("teacher battery is empty")
    rows: dict[str, list[tuple[np.ndarray, np.ndarray, np.ndarray]]] = {ALTITUDE: [], ATTITUDE: []}
    for sc in scenarios:
        config = experiments.ScenarioConfig.regulation(
            sc.z0, sc.phi0, sc.theta0, sc.psi0, duration=sc.duration, dt=dt, params=params
        )
        n = config.steps
        log = {axis: (np.empty(n), np.empty(n)) for axis in sc.axes}

        def observer(k, ctrl, log=log, n=n):
            if k < n:
                for axis, (e_col, u_col) in log.items():
                    e_col[k], u_col[k] = ctrl.last[axis]

        try:
            trace = experiments.run_closed_loop(config, "pd_bumpless", gains, observer=observer)
        except SingularAttitude as exc:
            raise ScenarioDiverged(f"teacher run {sc} hit the pitch singularity") from exc
        if not _check_teacher_bounds(trace.states):
            raise ScenarioDiverged(f"teacher run {sc} left the state bounds")
        for axis, (e_col, u_col) in log.items():
            e_dot = np.empty(n)
            e_dot[0] = 0.0
            e_dot[1:] = np.diff(e_col) / dt
            rows[ALTITUDE if axis == "z" else ATTITUDE].append((e_col, e_dot, u_col))
    out = {}
    for key, parts in rows.items():
        if parts:
            out[key] = TrainingDataset(
                np.concatenate([p[0] for p in parts]),
                np.concatenate([p[1] for p in parts]),
                np.concatenate([p[2] for p in parts]),
                key,
            )
    return out


def train_controllers(datasets: dict[str, TrainingDataset], config: TrainConfig | None = None,
                      n_mf: int = 5) -> dict[str, TrainResult]:
    """Initialise and train one model per dataset (altitude, attitude)."""
    config = config or TrainConfig()
    return {
        key: anfis_train(anfis_init(ds, n_mf, name=key), ds, config)
        for key, ds in datasets.items()
    }


# ---------------------------------------------------------------------------
# deployment


def fuzzy_controller_step(model: FISModel, e: float, e_dot: float, axis: str, params) -> float:
    """Control component for one axis.

    ``axis`` is ``"z"`` for altitude (the ``m*g`` feedforward is added to the
    model output) or one of ``"phi"``, ``"theta"``, ``"psi"`` for the shared
    attitude model.
    """
    out = fis_evaluate(model, e, e_dot)
    if axis == "z":
        return out + params.m * params.g
    if axis in ("phi", "theta", "psi"):
        return out
    raise ValueError(f"unknown axis {axis!r}")


# ---------------------------------------------------------------------------
# model files


def format_model(model: FISModel) -> str:
    """Plain-text model file (see :func:`parse_model` for the grammar)."""
    g = "{:.17g}".format
    lines = [
        f"quadsim-fis {FORMAT_VERSION}",
        f"name {model.name or '-'}",
        f"n_mf {model.n_mf}",
    ]
    for k, (lo, hi) in enumerate(model.input_ranges, start=1):
        lines.append(f"range {k} {g(lo)} {g(hi)}")
    for k in range(2):
        for i in range(model.n_mf):
            a, b, c = model.mf[k, i]
            lines.append(f"mf {k + 1} {i + 1} {g(a)} {g(b)} {g(c)}")
    n = model.n_mf
    for i in range(n):
        for j in range(n):
            p, q, r = model.coef[i * n + j]
            lines.append(f"rule {i + 1} {j + 1} {g(p)} {g(q)} {g(r)}")
    return "\n".join(lines) + "\n"


def parse_model(text: str, path=None) -> FISModel:
    """Parse a model file.

    Grammar, one record per line::

        quadsim-fis <version>
        name <label>
        n_mf <n>
        range <input> <min> <max>          (input 1 = error, 2 = error rate)
        mf <input> <index> <a> <b> <c>     (2*n records)
        rule <i> <j> <p> <q> <r>           (n*n records)

    Indices are 1-based. Blank lines and ``#`` comments are ignored.
    """
    version = None
    name = ""
    n = None
    ranges = {}
    mf_rows = {}
    rules = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "quadsim-fis":
                version = int(tok[1])
                if version != FORMAT_VERSION:
                    raise ParseError(f"unsupported model version {version}", lineno, path)
            elif tok[0] == "name":
                name = "" if tok[1] == "-" else " ".join(tok[1:])
            elif tok[0] == "n_mf":
                n = int(tok[1])
            elif tok[0] == "range":
                ranges[int(tok[1])] = (float(tok[2]), float(tok[3]))
            elif tok[0] == "mf":
                key = (int(tok[1]), int(tok[2]))
                if key in mf_rows:
                    raise ParseError(f"duplicate mf record {key}", lineno, path)
                mf_rows[key] = tuple(float(v) for v in tok[3:6])
                if len(tok) != 6:
                    raise ParseError("mf record needs 5 fields", lineno, path)
            elif tok[0] == "rule":
                key = (int(tok[1]), int(tok[2]))
                if key in rules:
                    raise ParseError(f"duplicate rule record {key}", lineno, path)
                rules[key] = tuple(float(v) for v in tok[3:6])
                if len(tok) != 6:
                    raise ParseError("rule record needs 5 fields", lineno, path)
            else:
                raise ParseError(f"unknown record {tok[0]!r}", lineno, path)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed record {line!r}", lineno, path) from None
    if version is None:
        raise ParseError("missing 'quadsim-fis' header", None, path)
    if n is None:
        raise ParseError("missing 'n_mf' record", None, path)
    if set(ranges) != {1, 2}:
        raise ParseError("need range records for inputs 1 and 2", None, path)
    mf = np.empty((2, n, 3))
    coef = np.empty((n * n, 3))
    for k in (1, 2):
        for i in range(1, n + 1):
            if (k, i) not in mf_rows:
                raise ParseError(f"missing mf record {k} {i}", None, path)
            mf[k - 1, i - 1] = mf_rows[(k, i)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if (i, j) not in rules:
                raise ParseError(f"missing rule record {i} {j}", None, path)
            coef[(i - 1) * n + (j - 1)] = rules[(i, j)]
    if len(mf_rows) != 2 * n or len(rules) != n * n:
        raise ParseError("record indices outside 1..n_mf", None, path)
    return FISModel(mf, coef, (ranges[1], ranges[2]), name)


def save_model(model: FISModel, path) -> None:
    from ._io import atomic_write_text

    atomic_write_text(path, format_model(model))


def load_model(path) -> FISModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), path=os.fspath(path))
