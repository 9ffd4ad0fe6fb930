"""Training losses: squared-error and negative log-likelihood terms.

Both losses condition on the true maneuver mode (teacher forcing): the
Gaussian terms read the mode grid at the labeled (lateral, longitudinal)
cell, and the maneuver term scores the factorized probability heads against
the same labels, with probabilities floored at 1e-12 before the log.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.labels import label_indices
from .errors import LossError
from .model import DecoderOutput, ForecastDistribution
from .nn import Tensor, exp, log, maximum_scalar, mean, mul, neg, softplus, sub
from .nn import tensor as T

LOG_2PI = float(np.log(2.0 * np.pi))
LOG_4 = float(np.log(4.0))
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossReport:
    total: float
    mse: float
    nll: float
    maneuver_nll: float
    batch_size: int
    lambda_nll: float
    lambda_maneuver: float

    def as_row(self) -> dict:
        return {
            "total": self.total, "mse": self.mse, "nll": self.nll,
            "maneuver_nll": self.maneuver_nll,
        }


def _select_mode(tensor: Tensor, lat_idx: np.ndarray, lon_idx: np.ndarray) -> Tensor:
    b = tensor.shape[0]
    return tensor[(np.arange(b), lat_idx, lon_idx)]


def gaussian_nll_per_sample(
    out: DecoderOutput, truth: np.ndarray, lat_idx: np.ndarray, lon_idx: np.ndarray
) -> Tensor:
    """Mean over the horizon of the bivariate Gaussian NLL, per sample."""
    mu = _select_mode(out.mu, lat_idx, lon_idx)              # (B, t_f, 2)
    log_sigma = _select_mode(out.log_sigma, lat_idx, lon_idx)
    corr = _select_mode(out.corr, lat_idx, lon_idx)          # (B, t_f, 1)
    corr_raw = _select_mode(out.corr_raw, lat_idx, lon_idx)

    diff = sub(Tensor(truth), mu)
    z = mul(diff, exp(neg(log_sigma)))                       # standardized errors
    zx = z[:, :, 0:1]
    zy = z[:, :, 1:2]
    # log(1 - corr^2) for corr = tanh(r), stable in r
    log_one_minus_r2 = sub(LOG_4, mul(corr_raw, 2.0) + mul(softplus(mul(corr_raw, -2.0)), 2.0))
    inv_one_minus_r2 = exp(neg(log_one_minus_r2))
    quad = sub(zx**2.0 + zy**2.0, mul(mul(zx, zy), mul(corr, 2.0)))
    per_step = (
        LOG_2PI
        + T.sum_(log_sigma, axis=-1, keepdims=True)
        + mul(log_one_minus_r2, 0.5)
        + mul(mul(quad, inv_one_minus_r2), 0.5)
    )
    return mean(T.reshape(per_step, per_step.shape[:2]), axis=1)  # (B,)


def maneuver_nll_per_sample(
    out: DecoderOutput, lat_idx: np.ndarray, lon_idx: np.ndarray
) -> Tensor:
    b = out.lat_probs.shape[0]
    p_lat = out.lat_probs[(np.arange(b), lat_idx)]
    p_lon = out.lon_probs[(np.arange(b), lon_idx)]
    return neg(
        log(maximum_scalar(p_lat, PROB_FLOOR)) + log(maximum_scalar(p_lon, PROB_FLOOR))
    )


def mse_per_sample(
    out: DecoderOutput, truth: np.ndarray, lat_idx: np.ndarray, lon_idx: np.ndarray
) -> Tensor:
    mu = _select_mode(out.mu, lat_idx, lon_idx)
    diff = sub(mu, Tensor(truth))
    sq = T.sum_(mul(diff, diff), axis=-1)  # squared Euclidean error per step
    return mean(sq, axis=1)


def training_loss(
    out: DecoderOutput,
    truth: np.ndarray,
    lat_idx: np.ndarray,
    lon_idx: np.ndarray,
    lambda_nll: float = 1.0,
    lambda_maneuver: float = 1.0,
) -> tuple[Tensor, LossReport]:
    """Scalar loss tensor plus its per-component report."""
    mse = mean(mse_per_sample(out, truth, lat_idx, lon_idx))
    nll = mean(gaussian_nll_per_sample(out, truth, lat_idx, lon_idx))
    man = mean(maneuver_nll_per_sample(out, lat_idx, lon_idx))
    total = mse + mul(nll, lambda_nll) + mul(man, lambda_maneuver)
    report = LossReport(
        total=float(total.data),
        mse=float(mse.data),
        nll=float(nll.data),
        maneuver_nll=float(man.data),
        batch_size=truth.shape[0],
        lambda_nll=lambda_nll,
        lambda_maneuver=lambda_maneuver,
    )
    return total, report


# --------------------------------------------------- distribution-level ops


def _resolve_maneuver(true_maneuver) -> tuple[int, int]:
    lat, lon = true_maneuver
    if isinstance(lat, str):
        return label_indices(lat, lon)
    return int(lat), int(lon)


def _validate(dist: ForecastDistribution) -> None:
    sigma = dist.trajectories[..., 2:4]
    corr = dist.trajectories[..., 4]
    if not np.all(np.isfinite(dist.trajectories)):
        raise LossError("distribution carries non-finite parameters")
    if np.any(sigma <= 0):
        raise LossError("distribution carries non-positive sigma")
    if np.any(np.abs(corr) >= 1):
        raise LossError("distribution carries |corr| >= 1")


def nll_bivariate(
    dist: ForecastDistribution, truth: np.ndarray, true_maneuver
) -> float:
    """Mean per-step Gaussian NLL of the true mode plus the maneuver NLL."""
    if not np.all(np.isfinite(truth)):
        raise LossError("truth trajectory carries non-finite values")
    _validate(dist)
    i, j = _resolve_maneuver(true_maneuver)
    params = dist.trajectories[i, j]  # (t_f, 5)
    mu, sigma, corr = params[:, 0:2], params[:, 2:4], params[:, 4]
    z = (truth - mu) / sigma
    one_minus = 1.0 - corr**2
    quad = z[:, 0] ** 2 - 2.0 * corr * z[:, 0] * z[:, 1] + z[:, 1] ** 2
    step_nll = (
        LOG_2PI
        + np.log(sigma).sum(axis=1)
        + 0.5 * np.log(one_minus)
        + quad / (2.0 * one_minus)
    )
    maneuver = -np.log(max(dist.lat_probs[i], PROB_FLOOR)) - np.log(
        max(dist.lon_probs[j], PROB_FLOOR)
    )
    return float(step_nll.mean() + maneuver)


def mse_loss(dist: ForecastDistribution, truth: np.ndarray, true_maneuver) -> float:
    """Mean squared Euclidean error of the true mode's means."""
    i, j = _resolve_maneuver(true_maneuver)
    mu = dist.trajectories[i, j, :, 0:2]
    return float(((mu - truth) ** 2).sum(axis=1).mean())
