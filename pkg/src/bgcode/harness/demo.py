"""Toy least-squares gradient descent whose gradients come from the protocol.

Each iteration quantizes the per-sample gradients to ``k``-bit two's
complement fixed point, hands them to the workers as the true partial
gradients, and lets the main node recover the full sum under attack.  A
reference run sums the same quantized gradients directly; both θ
trajectories must match bit for bit.

Quantizer: ``x -> clamp(rint(x * 2**frac_bits), -2**(k-1), 2**(k-1) - 1) mod 2**k``.
Sums are taken in Z_{2^k} and read back as signed integers, so the
recovered gradient is exact as long as the true sum fits in ``k`` bits.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..adversary import AttackSpec
from ..alphabet import Alphabet
from ..assignment import SystemConfig
from ..errors import ConfigurationError
from ..protocol import run_scheme
from ..workers import TrueGradients


@dataclass(frozen=True)
class DemoTrainingConfig:
    d: int = 8
    p: int = 16
    s: int = 2
    u: int = 1
    m: int = 2
    iterations: int = 20
    lr: float = 0.05
    alphabet_log2: int = 32
    frac_bits: int = 16
    seed: int = 0
    attack: str = "symmetrization"
    noise: float = 0.1

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigurationError(f"iterations must be >= 0, got {self.iterations}")
        if not 0 <= self.frac_bits < self.alphabet_log2:
            raise ConfigurationError(f"need 0 <= frac_bits < k, got frac_bits={self.frac_bits}, "
                                     f"k={self.alphabet_log2}")

    def system(self, seed: int) -> SystemConfig:
        return SystemConfig.from_params(self.s, self.u, self.m, self.p, self.d, k=self.alphabet_log2, seed=seed)


@dataclass(frozen=True)
class FixedPoint:
    alphabet: Alphabet
    frac_bits: int

    def quantize(self, x: np.ndarray) -> np.ndarray:
        half = 1 << (self.alphabet.size_log2 - 1)
        ints = np.clip(np.rint(np.asarray(x, dtype=np.float64) * (1 << self.frac_bits)), -half, half - 1)
        return ints.astype(np.int64) & self.alphabet.mask

    def dequantize(self, symbols: np.ndarray) -> np.ndarray:
        half = 1 << (self.alphabet.size_log2 - 1)
        signed = np.where(symbols >= half, symbols - self.alphabet.size, symbols)
        return signed.astype(np.float64) / (1 << self.frac_bits)


@dataclass
class Trajectory:
    thetas: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    metrics: list = field(default_factory=list)

    def same_as(self, other: "Trajectory") -> bool:
        if len(self.thetas) != len(other.thetas):
            return False
        return all(a.tobytes() == b.tobytes() for a, b in zip(self.thetas, other.thetas))


def toy_dataset(cfg: DemoTrainingConfig):
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xDA7A]))
    x = rng.normal(size=(cfg.p, cfg.d))
    w_star = rng.normal(size=cfg.d)
    y = x @ w_star + cfg.noise * rng.normal(size=cfg.p)
    return x, y


def sample_gradients(theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row i is the gradient of ``(x_i . theta - y_i)^2 / 2``."""
    return (x @ theta - y)[:, None] * x


def _loss(theta, x, y) -> float:
    r = x @ theta - y
    return float(r @ r) / (2 * len(y))


def train(cfg: DemoTrainingConfig, use_protocol: bool = True) -> Trajectory:
    """Run gradient descent; ``use_protocol=False`` is the direct-sum reference."""
    x, y = toy_dataset(cfg)
    fx = FixedPoint(Alphabet(cfg.alphabet_log2), cfg.frac_bits)
    theta = np.zeros(cfg.d)
    traj = Trajectory([theta.copy()], [_loss(theta, x, y)], [None])
    for step in range(cfg.iterations):
        grads = fx.quantize(sample_gradients(theta, x, y))
        if use_protocol:
            system = cfg.system(cfg.seed + step)
            truth = TrueGradients(system, grads)
            result = run_scheme(system, AttackSpec(cfg.attack, seed=cfg.seed + step), truth)
            total = result.g_hat
            traj.metrics.append(result.metrics)
        else:
            total = grads.sum(axis=0) & fx.alphabet.mask
            traj.metrics.append(None)
        theta = theta - cfg.lr / cfg.p * fx.dequantize(total)
        traj.thetas.append(theta.copy())
        traj.losses.append(_loss(theta, x, y))
    return traj


def trajectory_csv(traj: Trajectory, reference: Trajectory) -> str:
    d = len(traj.thetas[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "loss", "c", "kappa_bits", "matches", "identical"] + [f"theta_{j}" for j in range(d)])
    for t, (theta, loss, met) in enumerate(zip(traj.thetas, traj.losses, traj.metrics)):
        same = t < len(reference.thetas) and theta.tobytes() == reference.thetas[t].tobytes()
        stats = ("", "", "") if met is None else (met.local_computations, met.kappa_bits, met.matches)
        w.writerow([t, repr(loss), *stats, int(same)] + [repr(float(v)) for v in theta])
    return buf.getvalue()
