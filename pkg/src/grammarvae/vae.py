"""The grammar VAE: convolutional Gaussian encoder, GRU logit decoder,
masked reconstruction likelihood, ELBO, and the training loop.

The encoder reads a one-hot rule matrix and emits a diagonal Gaussian over
latent space. The decoder maps a latent vector to a T_max x K logit matrix;
at every timestep the reconstruction likelihood renormalizes the logits over
the rules whose left-hand side matches the ground-truth derivation (teacher
forcing), so syntax violations never receive probability mass.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .grammar import Grammar, MaskTable, OneHotMatrix
from .nn import tensor as T
from .nn.tensor import Tensor


@dataclass(frozen=True)
class VaeConfig:
    z_dim: int
    t_max: int
    K: int
    conv_widths: tuple[int, ...] = (2, 3, 4)
    conv_channels: tuple[int, ...] = (9, 9, 10)
    dense_size: int = 128
    gru_hidden: int = 64
    gru_layers: int = 3
    kl_weight: float = 1.0

    def __post_init__(self):
        if self.z_dim < 1:
            raise ValueError("z_dim must be at least 1")
        if len(self.conv_widths) != len(self.conv_channels):
            raise ValueError("conv_widths and conv_channels lengths differ")
        conv_out = self.t_max - sum(w - 1 for w in self.conv_widths)
        if conv_out < 1:
            raise ValueError(
                f"conv widths {self.conv_widths} consume the whole sequence "
                f"(t_max={self.t_max})"
            )


def equation_config(K: int = 12, **overrides) -> VaeConfig:
    base = dict(z_dim=25, t_max=15, K=K, dense_size=128, gru_hidden=64)
    base.update(overrides)
    return VaeConfig(**base)


def smiles_config(K: int = 77, **overrides) -> VaeConfig:
    base = dict(z_dim=56, t_max=277, K=K, dense_size=435, gru_hidden=501)
    base.update(overrides)
    return VaeConfig(**base)


@dataclass(frozen=True)
class GaussianLatent:
    mean: np.ndarray
    log_variance: np.ndarray

    @property
    def variance(self) -> np.ndarray:
        return np.exp(self.log_variance)


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, step: int):
        super().__init__(
            f"non-finite loss at epoch {epoch}, step {step}; "
            "parameters restored to the last completed epoch"
        )
        self.epoch = epoch
        self.step = step


class VaeModel:
    def __init__(self, config: VaeConfig, seed: int = 0):
        self.config = config
        self.trained_epochs = 0
        rng = np.random.default_rng(seed)
        c = config
        self.enc_convs = []
        c_in = c.K
        for i, (w, ch) in enumerate(zip(c.conv_widths, c.conv_channels)):
            self.enc_convs.append(
                nn.Conv1d(w, c_in, ch, activation="relu", rng=rng, name=f"enc.conv{i}")
            )
            c_in = ch
        conv_t = c.t_max - sum(w - 1 for w in c.conv_widths)
        self._flat = conv_t * c_in
        self.enc_dense = nn.Dense(self._flat, c.dense_size, activation="relu",
                                  rng=rng, name="enc.dense")
        self.enc_mu = nn.Dense(c.dense_size, c.z_dim, rng=rng, name="enc.mu")
        self.enc_logvar = nn.Dense(c.dense_size, c.z_dim, rng=rng, name="enc.logvar")
        self.dec_dense = nn.Dense(c.z_dim, c.gru_hidden, activation="relu",
                                  rng=rng, name="dec.dense")
        self.dec_grus = [
            nn.GRUCell(c.gru_hidden, c.gru_hidden, rng=rng, name=f"dec.gru{i}")
            for i in range(c.gru_layers)
        ]
        self.dec_out = nn.Dense(c.gru_hidden, c.K, rng=rng, name="dec.out")

    def parameters(self) -> list[Tensor]:
        out: list[Tensor] = []
        for conv in self.enc_convs:
            out.extend(conv.parameters())
        out.extend(self.enc_dense.parameters())
        out.extend(self.enc_mu.parameters())
        out.extend(self.enc_logvar.parameters())
        out.extend(self.dec_dense.parameters())
        for cell in self.dec_grus:
            out.extend(cell.parameters())
        out.extend(self.dec_out.parameters())
        return out

    # --- tape forward passes (batched) ---

    def encode_t(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """x: (B, t_max, K) -> mu, logvar each (B, z_dim)."""
        if x.data.ndim != 3 or x.data.shape[1:] != (self.config.t_max, self.config.K):
            raise ValueError(
                f"expected (B, {self.config.t_max}, {self.config.K}), got {x.data.shape}"
            )
        h = x
        for conv in self.enc_convs:
            h = conv(h)
        h = T.reshape(h, (h.data.shape[0], self._flat))
        h = self.enc_dense(h)
        return self.enc_mu(h), self.enc_logvar(h)

    def decode_t(self, z: Tensor) -> Tensor:
        """z: (B, z_dim) -> logits (B, t_max, K)."""
        if z.data.ndim != 2 or z.data.shape[1] != self.config.z_dim:
            raise ValueError(f"expected (B, {self.config.z_dim}), got {z.data.shape}")
        h0 = self.dec_dense(z)
        states = [Tensor(np.zeros_like(h0.data)) for _ in self.dec_grus]
        step_logits = []
        for _ in range(self.config.t_max):
            inp = h0  # latent input repeated at every timestep
            for i, cell in enumerate(self.dec_grus):
                states[i] = cell.step(states[i], inp)
                inp = states[i]
            step_logits.append(self.dec_out(inp))
        return T.stack(step_logits, axis=1)

    # --- inference API (no autodiff graph) ---

    def encode(self, x: OneHotMatrix | np.ndarray) -> GaussianLatent:
        mat = x.matrix if isinstance(x, OneHotMatrix) else np.asarray(x)
        with T.no_grad():
            mu, logvar = self.encode_t(Tensor(mat[None, :, :]))
        return GaussianLatent(mu.data[0].copy(), logvar.data[0].copy())

    def encode_batch(self, X: np.ndarray, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
        mus, logvars = [], []
        with T.no_grad():
            for lo in range(0, X.shape[0], chunk):
                mu, logvar = self.encode_t(Tensor(X[lo:lo + chunk]))
                mus.append(mu.data)
                logvars.append(logvar.data)
        return np.concatenate(mus), np.concatenate(logvars)

    def decode_logits(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        single = z.ndim == 1
        with T.no_grad():
            out = self.decode_t(Tensor(z[None, :] if single else z)).data
        return out[0].copy() if single else out.copy()

    def decode_logits_batch(self, Z: np.ndarray, chunk: int = 256) -> np.ndarray:
        outs = []
        with T.no_grad():
            for lo in range(0, Z.shape[0], chunk):
                outs.append(self.decode_t(Tensor(Z[lo:lo + chunk])).data)
        return np.concatenate(outs)

    # --- persistence ---

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {p.name: p.data for p in self.parameters()}

    def save(self, path: str) -> None:
        meta = {
            "kind": "grammarvae.VaeModel",
            "config": dataclasses.asdict(self.config),
            "trained_epochs": self.trained_epochs,
        }
        nn.save_tensors(path, self.state_tensors(), meta)

    @classmethod
    def load(cls, path: str) -> "VaeModel":
        tensors, meta = nn.load_tensors(path)
        if meta.get("kind") != "grammarvae.VaeModel":
            raise nn.SerializationError(f"{path}: not a VaeModel file")
        cfg = dict(meta["config"])
        cfg["conv_widths"] = tuple(cfg["conv_widths"])
        cfg["conv_channels"] = tuple(cfg["conv_channels"])
        model = cls(VaeConfig(**cfg))
        for p in model.parameters():
            if p.name not in tensors:
                raise nn.SerializationError(f"{path}: missing tensor {p.name!r}")
            if tensors[p.name].shape != p.data.shape:
                raise nn.SerializationError(
                    f"{path}: tensor {p.name!r} has shape "
                    f"{tensors[p.name].shape}, expected {p.data.shape}"
                )
            p.data = tensors[p.name].copy()
        model.trained_epochs = int(meta.get("trained_epochs", 0))
        return model


def reparameterize(g: GaussianLatent, eps: np.ndarray) -> np.ndarray:
    return g.mean + np.exp(0.5 * g.log_variance) * np.asarray(eps)


def reparameterize_t(mu: Tensor, logvar: Tensor, eps: np.ndarray) -> Tensor:
    sigma = T.exp(T.mul(logvar, 0.5))
    return T.add(mu, T.mul(sigma, Tensor(eps)))


def kl_to_standard_normal(g: GaussianLatent) -> float:
    var = np.exp(g.log_variance)
    return float(0.5 * np.sum(g.mean ** 2 + var - 1.0 - g.log_variance))


def kl_t(mu: Tensor, logvar: Tensor) -> Tensor:
    """Per-sample closed-form KL(q || N(0,I)): (B, z) -> (B,)."""
    var = T.exp(logvar)
    inner = T.add(T.add(T.mul(mu, mu), var), T.add(T.mul(logvar, -1.0), -1.0))
    return T.mul(T.sum_(inner, axis=1), 0.5)


def _teacher_forcing_arrays(
    targets: np.ndarray, lengths: np.ndarray, masks: MaskTable, g: Grammar
) -> tuple[np.ndarray, np.ndarray]:
    """Per-timestep mask rows and active flags from ground-truth rule indices."""
    lhs_row = np.array([masks.row(r.lhs.text) for r in g.rules])
    rows = lhs_row[targets]
    active = np.arange(targets.shape[1])[None, :] < lengths[:, None]
    return rows, active


def reconstruction_logprob_t(
    F: Tensor, targets: np.ndarray, mask_rows: np.ndarray,
    active: np.ndarray, masks: MaskTable,
) -> Tensor:
    """Teacher-forced log p(X|z) per sample: F (B,T,K) -> (B,)."""
    mask = masks.matrix[mask_rows]  # (B, T, K) bool
    if not np.take_along_axis(mask, targets[..., None], axis=-1).all():
        raise RuntimeError("ground-truth rule masked out at its own timestep")
    lse = T.masked_logsumexp(F, mask)
    chosen = T.take_per_row(F, targets)
    per_step = T.mul(T.add(chosen, T.mul(lse, -1.0)), active.astype(np.float64))
    return T.sum_(per_step, axis=1)


def reconstruction_logprob(
    x: OneHotMatrix, F: np.ndarray, masks: MaskTable, g: Grammar
) -> float:
    """Evaluation form for a single datapoint and plain logit matrix."""
    targets = np.argmax(x.matrix, axis=1)[None, :]
    lengths = np.array([x.true_length])
    rows, active = _teacher_forcing_arrays(targets, lengths, masks, g)
    with T.no_grad():
        val = reconstruction_logprob_t(Tensor(F[None, :, :]), targets, rows, active, masks)
    return float(val.data[0])


def elbo(x: OneHotMatrix, m: VaeModel, eps: np.ndarray,
          masks: MaskTable, g: Grammar) -> Tensor:
    """Single-sample ELBO for one datapoint, as a differentiable scalar node."""
    targets = np.argmax(x.matrix, axis=1)[None, :]
    lengths = np.array([x.true_length])
    rows, active = _teacher_forcing_arrays(targets, lengths, masks, g)
    mu, logvar = m.encode_t(Tensor(x.matrix[None, :, :]))
    z = reparameterize_t(mu, logvar, np.asarray(eps)[None, :])
    F = m.decode_t(z)
    recon = reconstruction_logprob_t(F, targets, rows, active, masks)
    kl = kl_t(mu, logvar)
    total = T.add(recon, T.mul(kl, -m.config.kl_weight))
    return T.sum_(total)


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0


@dataclass
class TrainResult:
    model: VaeModel
    history: list[float] = field(default_factory=list)  # per-epoch mean ELBO


def train(dataset: list[OneHotMatrix], m: VaeModel, hyper: TrainConfig,
          masks: MaskTable, g: Grammar, log_fn=None) -> TrainResult:
    """Minibatch gradient ascent on the ELBO.

    Deterministic for a fixed (seed, start epoch): every epoch derives its own
    rng stream from (seed, epoch), so resuming a saved model continues with
    exactly the streams the interrupted run would have used.
    """
    if not dataset:
        raise ValueError("empty dataset")
    X = np.stack([d.matrix for d in dataset])
    targets = np.argmax(X, axis=2)
    lengths = np.array([d.true_length for d in dataset])
    rows, active = _teacher_forcing_arrays(targets, lengths, masks, g)
    n = X.shape[0]
    opt = nn.Adam(m.parameters(), lr=hyper.lr)
    history: list[float] = []
    snapshot = [p.data.copy() for p in m.parameters()]
    start = m.trained_epochs
    for epoch in range(start, start + hyper.epochs):
        rng = np.random.default_rng((hyper.seed, epoch))
        order = rng.permutation(n)
        total, count = 0.0, 0
        for lo in range(0, n, hyper.batch_size):
            idx = order[lo:lo + hyper.batch_size]
            eps = rng.standard_normal((len(idx), m.config.z_dim))
            mu, logvar = m.encode_t(Tensor(X[idx]))
            z = reparameterize_t(mu, logvar, eps)
            F = m.decode_t(z)
            recon = reconstruction_logprob_t(F, targets[idx], rows[idx],
                                             active[idx], masks)
            kl = kl_t(mu, logvar)
            batch_elbo = T.add(recon, T.mul(kl, -m.config.kl_weight))
            loss = T.mul(T.mean(batch_elbo), -1.0)
            if not np.isfinite(loss.data):
                for p, saved in zip(m.parameters(), snapshot):
                    p.data = saved.copy()
                raise TrainingDivergedError(epoch, lo // hyper.batch_size)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(batch_elbo.data.sum())
            count += len(idx)
        mean_elbo = total / count
        history.append(mean_elbo)
        m.trained_epochs = epoch + 1
        snapshot = [p.data.copy() for p in m.parameters()]
        if log_fn is not None:
            log_fn(epoch, mean_elbo)
    return TrainResult(m, history)
