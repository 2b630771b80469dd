"""DAGSurv: a conditional VAE for discrete-time survival with a known causal DAG.

Shapes use one row per instance. With ``L`` covariates and horizon ``M``:

* encoder  ``f_e``: ``[x, t/M]`` (L+1) -> L+1, then ``mu_z = (I - A^T) f_e(.)``
* latent   ``z = mu_z + eps``, ``eps ~ N(0, I)`` (posterior covariance fixed to I)
* mixer    ``g``: ``[x, z]`` (2L+1) -> L+1, then ``h = (I - A^T)^{-1} g(.)``
* decoder  ``f_d``: h -> M+1 logits, softmax gives the event-time pmf
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import DimensionError, EmptyDatasetError
from .graph import Dag, validate_dag
from .metrics import ctd
from .synthgen import SurvivalDataset

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    encoder_layers: int = 5
    encoder_hidden: int = 128
    decoder_layers: int = 3
    decoder_hidden: int = 64
    mixer_layers: int = 1
    mixer_hidden: int | None = None  # defaults to decoder_hidden
    activation: str = "relu"
    zero_init_output: bool = True

    def __post_init__(self):
        if self.activation not in ad.ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        for name in ("encoder_layers", "decoder_layers", "mixer_layers"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 256
    epochs: int = 500
    patience: int | None = None  # None: 50 epochs at lr 1e-4, scaled by 1e-4 / lr
    kl_weight: float = 1.0
    latent_samples: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")
        if self.patience is None:
            # a slower learning rate needs proportionally more epochs to show progress
            object.__setattr__(self, "patience", max(1, min(self.epochs, round(5e-3 / self.lr))))
        if self.epochs < 0 or self.patience < 1:
            raise ValueError("epochs must be >= 0 and patience >= 1")


# layer counts / widths / activation / learning rate per dataset
PRESETS = {
    "synthetic-small": (ModelConfig(5, 128, 3, 64, activation="relu"), 1e-4),
    "synthetic-large": (ModelConfig(5, 64, 4, 32, activation="relu"), 1e-5),
    "metabric": (ModelConfig(3, 256, 3, 64, activation="selu"), 1e-5),
    "gbsg": (ModelConfig(3, 128, 3, 32, activation="relu"), 1e-5),
}


class MLP:
    """Dense layers with an activation between them and a linear output."""

    def __init__(self, sizes, activation="relu", rng=None, zero_last=False, name="mlp"):
        rng = np.random.default_rng(rng)
        self.sizes = tuple(int(s) for s in sizes)
        self.activation = activation
        gain = 2.0 if activation == "relu" else 1.0
        self.weights, self.biases = [], []
        for k, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            last = k == len(self.sizes) - 2
            if last and zero_last:
                w = np.zeros((fan_in, fan_out))
            else:
                w = rng.normal(0.0, np.sqrt((1.0 if last else gain) / fan_in), (fan_in, fan_out))
            self.weights.append(ad.Value(w, op=f"{name}.W{k}"))
            self.biases.append(ad.Value(np.zeros((1, fan_out)), op=f"{name}.b{k}"))
        self.name = name

    def __call__(self, x):
        act = ad.ACTIVATIONS[self.activation]
        h = ad.as_value(x)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < len(self.weights) - 1:
                h = act(h)
        return h

    def named_parameters(self):
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"{self.name}.W{k}", w
            yield f"{self.name}.b{k}", b


@dataclass
class SurvivalPrediction:
    """Per-instance event-time pmf over bins ``0..M`` (one row per instance)."""

    pmf: np.ndarray

    def __post_init__(self):
        self.pmf = np.atleast_2d(np.asarray(self.pmf, dtype=np.float64))

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf, axis=1)

    @property
    def survival(self) -> np.ndarray:
        return 1.0 - self.cdf


class DagSurvModel:
    def __init__(self, dag: Dag, horizon: int, config: ModelConfig = ModelConfig(), seed=0):
        if dag.num_nodes < 2:
            raise DimensionError("the DAG needs at least one covariate plus the target")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.dag = dag
        self.horizon = int(horizon)
        self.config = config
        L = dag.num_nodes - 1
        self.num_covariates = L
        rng = np.random.default_rng(seed)
        act = config.activation
        mh = config.mixer_hidden or config.decoder_hidden
        self.encoder = MLP([L + 1] + [config.encoder_hidden] * config.encoder_layers + [L + 1],
                           act, rng, name="encoder")
        self.mixer = MLP([2 * L + 1] + [mh] * config.mixer_layers + [L + 1], act, rng,
                         name="mixer")
        self.decoder = MLP([L + 1] + [config.decoder_hidden] * config.decoder_layers
                           + [self.horizon + 1], act, rng,
                           zero_last=config.zero_init_output, name="decoder")
        self.x_mean = np.zeros((1, L))
        self.x_scale = np.ones((1, L))
        self.scaler_fitted = False

    @property
    def latent_dim(self) -> int:
        return self.num_covariates + 1

    def named_parameters(self):
        for part in (self.encoder, self.mixer, self.decoder):
            yield from part.named_parameters()

    def parameters(self) -> dict:
        return dict(self.named_parameters())

    def get_state(self) -> dict:
        return {k: v.data.copy() for k, v in self.named_parameters()}

    def set_state(self, state: dict) -> None:
        for k, v in self.named_parameters():
            if state[k].shape != v.data.shape:
                raise DimensionError(f"{k}: shape {state[k].shape} != {v.data.shape}")
            v.data = np.array(state[k], dtype=np.float64)

    def fit_scaler(self, x) -> None:
        x = np.asarray(x, dtype=np.float64)
        self.x_mean = x.mean(axis=0, keepdims=True)
        sd = x.std(axis=0, keepdims=True)
        self.x_scale = np.where(sd > 0, sd, 1.0)
        self.scaler_fitted = True

    def _prep_x(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.num_covariates:
            raise DimensionError(f"expected {self.num_covariates} covariates, got {x.shape[1]}")
        return (x - self.x_mean) / self.x_scale

    def encode(self, x_aug) -> ad.Value:
        """Posterior mean ``mu_z`` for rows ``[x, t/M]`` (covariates unscaled)."""
        x_aug = np.atleast_2d(np.asarray(x_aug, dtype=np.float64))
        if x_aug.shape[1] != self.latent_dim:
            raise DimensionError(f"expected {self.latent_dim} columns, got {x_aug.shape[1]}")
        x = self._prep_x(x_aug[:, :-1])
        h = self.encoder(np.hstack([x, x_aug[:, -1:]]))
        return ad.sem_mul_rows(self.dag, h)

    def decode(self, x, z) -> ad.Value:
        """Event-time pmf (softmax output) given covariates and latent codes."""
        x = self._prep_x(x)
        z = ad.as_value(z)
        if z.data.ndim != 2 or z.shape != (x.shape[0], self.latent_dim):
            raise DimensionError(f"z must have shape {(x.shape[0], self.latent_dim)}")
        g = self.mixer(ad.concat([x, z], axis=1))
        h = ad.sem_solve_rows(self.dag, g)
        return ad.softmax_rows(self.decoder(h))

    def augment(self, x, time_bins) -> np.ndarray:
        t = np.asarray(time_bins, dtype=np.float64).reshape(-1, 1) / self.horizon
        return np.hstack([np.atleast_2d(np.asarray(x, dtype=np.float64)), t])


def reparameterize(mu_z, seed=None, noise=None) -> ad.Value:
    """``z = mu + eps`` with ``eps ~ N(0, I)``; pass ``noise`` to fix ``eps``."""
    mu_z = ad.as_value(mu_z)
    if noise is None:
        noise = np.random.default_rng(seed).standard_normal(mu_z.shape)
    return mu_z + np.asarray(noise, dtype=np.float64).reshape(mu_z.shape)


def survival_log_likelihood(pmf, time_bins, events) -> ad.Value:
    """Per-instance censored log-likelihood, shape ``(N, 1)``.

    Events contribute ``ln pmf[t]``, censored rows ``ln S(t)`` with
    ``S(t) = 1 - sum_{k<=t} pmf[k]``; both with ``1e-8`` added inside the log.
    ``S(t)`` is summed over the bins after ``t`` rather than taken as ``1 - F(t)``,
    which would cancel catastrophically when ``F(t)`` is close to 1.
    """
    pmf = ad.as_value(pmf)
    n, width = pmf.shape
    t = np.asarray(time_bins, dtype=np.int64).reshape(-1)
    d = np.asarray(events, dtype=np.float64).reshape(-1, 1)
    if t.shape[0] != n or np.any(t < 0) or np.any(t >= width):
        raise DimensionError("time bins must be one per row and inside the pmf support")
    ks = np.arange(width)
    onehot = (ks[None, :] == t[:, None]).astype(np.float64)
    after = (ks[None, :] > t[:, None]).astype(np.float64)
    f = ad.sum_rows(pmf * onehot)
    surv = ad.sum_rows(pmf * after)
    return d * ad.log(f + LOG_FLOOR) + (1.0 - d) * ad.log(surv + LOG_FLOOR)


def kl_term(mu_z) -> ad.Value:
    """KL(N(mu, I) || N(0, I)) = |mu|^2 / 2 per row, shape ``(N, 1)``."""
    mu_z = ad.as_value(mu_z)
    return 0.5 * ad.sum_rows(mu_z * mu_z)


def elbo_loss(model: DagSurvModel, x, time_bins, events, kl_weight=1.0, noise=None,
              rng=None) -> ad.Value:
    """Negative ELBO averaged over the batch (one latent draw per row)."""
    mu = model.encode(model.augment(x, time_bins))
    if noise is None:
        noise = np.random.default_rng(rng).standard_normal(mu.shape)
    z = reparameterize(mu, noise=noise)
    pmf = model.decode(x, z)
    ll = survival_log_likelihood(pmf, time_bins, events)
    return ad.mean(ll) * -1.0 + ad.mean(kl_term(mu)) * kl_weight


def predict(model: DagSurvModel, x, num_latent_samples: int = 32, seed=0,
            batch_size: int = 4096) -> SurvivalPrediction:
    """Decoder-only prediction, averaging the pmf over draws ``z ~ N(0, I)``.

    ``num_latent_samples=0`` uses the single code ``z = 0``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    out = np.zeros((n, model.horizon + 1))
    draws = max(num_latent_samples, 1)
    for _ in range(draws):
        if num_latent_samples == 0:
            z = np.zeros((n, model.latent_dim))
        else:
            z = rng.standard_normal((n, model.latent_dim))
        for s in range(0, n, batch_size):
            out[s:s + batch_size] += model.decode(x[s:s + batch_size], z[s:s + batch_size]).data
    return SurvivalPrediction(out / draws)


def evaluate_ctd(model, dataset: SurvivalDataset, num_latent_samples=32, seed=0) -> float:
    pred = predict(model, dataset.covariates, num_latent_samples, seed)
    return ctd(pred.cdf, dataset.time_bins, dataset.events)


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)  # (epoch, train_loss, val_ctd)
    best_epoch: int = 0
    best_val_ctd: float = float("nan")

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_ctd"]
        lines += [f"{e},{loss!r},{c!r}" for e, loss, c in self.rows]
        return "\n".join(lines) + "\n"


def train(model: DagSurvModel, train_set: SurvivalDataset, val_set: SurvivalDataset,
          config: TrainConfig = TrainConfig()):
    """Minibatch Adam on the negative ELBO with early stopping on validation C_td.

    The parameters with the best validation C_td are restored at the end.
    Returns ``(model, history)``.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise EmptyDatasetError("train and validation sets must be non-empty")
    for ds in (train_set, val_set):
        if ds.time_bins is None or ds.horizon != model.horizon:
            raise ValueError("datasets must be discretized to the model's horizon")
    if not model.scaler_fitted:
        model.fit_scaler(train_set.covariates)
    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    state = ad.AdamState(lr=config.lr)
    history = TrainHistory()
    best_state = model.get_state()
    best = -np.inf
    stale = 0
    n = len(train_set)
    x_all, t_all, d_all = train_set.covariates, train_set.time_bins, train_set.events
    # same latent draws at every validation pass, so the score only moves with the weights
    val_seed = int(rng.integers(2**31))
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        losses = []
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            ad.zero_grad(params.values())
            loss = elbo_loss(model, x_all[idx], t_all[idx], d_all[idx],
                             kl_weight=config.kl_weight, rng=rng)
            loss.backward()
            ad.adam_step({k: p.data for k, p in params.items()},
                         {k: p.grad for k, p in params.items()}, state)
            losses.append(float(loss.data.item()) * len(idx))
        train_loss = sum(losses) / n
        if not np.isfinite(train_loss):
            log.warning("non-finite training loss at epoch %d; stopping", epoch)
            break
        val_ctd = evaluate_ctd(model, val_set, config.latent_samples, seed=val_seed)
        history.rows.append((epoch, train_loss, val_ctd))
        log.debug("epoch %d loss %.5f val C_td %.4f", epoch, train_loss, val_ctd)
        if val_ctd > best:
            best, stale = val_ctd, 0
            best_state = model.get_state()
            history.best_epoch, history.best_val_ctd = epoch, val_ctd
        else:
            stale += 1
            if stale >= config.patience:
                break
    model.set_state(best_state)
    return model, history


def model_meta(model: DagSurvModel, extra=None) -> dict:
    meta = {
        "adjacency": model.dag.adjacency.tolist(),
        "horizon": model.horizon,
        "model_config": asdict(model.config),
        "x_mean": model.x_mean.ravel().tolist(),
        "x_scale": model.x_scale.ravel().tolist(),
    }
    meta.update(extra or {})
    return meta


def save_model(model: DagSurvModel, path, extra_meta=None) -> None:
    ad.save_params(path, model.get_state(), model_meta(model, extra_meta))


def load_model(path):
    """Return ``(model, meta)`` from a checkpoint written by :func:`save_model`."""
    params, meta = ad.load_params(path)
    dag = validate_dag(meta["adjacency"])
    model = DagSurvModel(dag, meta["horizon"], ModelConfig(**meta["model_config"]))
    model.set_state(params)
    model.x_mean = np.array(meta["x_mean"]).reshape(1, -1)
    model.x_scale = np.array(meta["x_scale"]).reshape(1, -1)
    model.scaler_fitted = True
    return model, meta


__all__ = [
    "DagSurvModel", "ModelConfig", "TrainConfig", "SurvivalPrediction", "PRESETS",
    "reparameterize", "survival_log_likelihood", "kl_term", "elbo_loss", "predict",
    "evaluate_ctd", "train", "save_model", "load_model", "TrainHistory",
]
