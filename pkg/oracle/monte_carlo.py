"""
Monte Carlo pricing of the lambda-adjusted Heston dynamics

Full-truncation Euler on (ln S, v):
    ln S += (r - v+/2) dt + sqrt(v+ dt) Z1
    v    += (kappa (gamma - v+) - xi lambda sqrt(v+)) dt + xi sqrt(v+ dt) Z2
with corr(Z1, Z2) = rho and v+ = max(v, 0).
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from config.settings import CONFIG
from core.errors import ValidationError

logger = logging.getLogger('hjbpricer.oracle.monte_carlo')


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100000
    n_steps: int = 200
    seed: int = 12345
    antithetic: bool = False
    scheme: str = 'full_truncation_euler'


def _batch_sizes(n_paths, batch, antithetic):
    unit = 2 if antithetic else 1
    batch = max(unit, batch - batch % unit)
    sizes = [batch] * (n_paths // batch)
    rest = n_paths - sum(sizes)
    if rest:
        sizes.append(rest + (rest % unit))
    return sizes


def _simulate_batch(params, payoff, lam, S0, v0, n_steps, size, seed_seq, antithetic):
    """
    Discounted payoff samples of one batch

    With antithetic pairing the returned samples are pair averages.
    """
    rng = np.random.default_rng(seed_seq)
    T, r, kappa, gamma, xi, rho = params.T, params.r, params.kappa, params.gamma, params.xi, params.rho
    dt = T / n_steps
    sqrt_dt = math.sqrt(dt)
    c = math.sqrt(1.0 - rho ** 2)
    half = size // 2 if antithetic else size

    x = np.full(size, math.log(S0))
    v = np.full(size, float(v0))
    for _ in range(n_steps):
        z = rng.standard_normal((2, half))
        if antithetic:
            z = np.concatenate([z, -z], axis=1)
        z1 = z[0]
        z2 = rho * z[0] + c * z[1]
        vp = np.maximum(v, 0.0)
        root = np.sqrt(vp)
        x = x + (r - 0.5 * vp) * dt + root * sqrt_dt * z1
        v = v + (kappa * (gamma - vp) - xi * lam * root) * dt + xi * root * sqrt_dt * z2

    samples = math.exp(-r * T) * np.asarray(payoff.evaluate(np.exp(x)), dtype=float)
    if antithetic:
        samples = 0.5 * (samples[:half] + samples[half:])
    return samples.sum(), np.square(samples).sum(), len(samples)


def mc_price(params, payoff, lam, S0, v0, cfg=None):
    """
    Monte Carlo price for a fixed control

    Parameters:
    - params: HestonParams
    - payoff: Payoff
    - lam: market price of volatility risk
    - S0, v0: initial state
    - cfg: McConfig

    Returns:
    - (price estimate, standard error)
    """
    cfg = McConfig() if cfg is None else cfg
    if not S0 > 0 or v0 < 0:
        raise ValidationError("need S0 > 0 and v0 >= 0")
    if cfg.n_paths < 2 or cfg.n_steps < 1:
        raise ValidationError("need at least two paths and one step")

    sizes = _batch_sizes(cfg.n_paths, CONFIG['MC_BATCH_SIZE'], cfg.antithetic)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    def run(args):
        size, seed_seq = args
        return _simulate_batch(params, payoff, lam, S0, v0, cfg.n_steps, size, seed_seq, cfg.antithetic)

    with ThreadPoolExecutor(max_workers=CONFIG['MAX_WORKERS']) as pool:
        results = list(pool.map(run, zip(sizes, seeds)))

    # combined in batch order
    total = sum(r[0] for r in results)
    total_sq = sum(r[1] for r in results)
    count = sum(r[2] for r in results)
    mean = total / count
    variance = max(total_sq / count - mean ** 2, 0.0) * count / max(count - 1, 1)
    stderr = math.sqrt(variance / count)
    logger.info(f"MC lambda={lam} S0={S0} v0={v0}: {mean:.6g} +/- {stderr:.2g} "
                f"({cfg.n_paths} paths, {cfg.n_steps} steps{', antithetic' if cfg.antithetic else ''})")
    return mean, stderr
