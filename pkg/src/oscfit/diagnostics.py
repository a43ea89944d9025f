# Convergence diagnostics for multi-chain MCMC output.
import numpy as np


def _as_chains(draws):
    x = np.asarray(draws, dtype=float)
    if x.ndim < 2:
        raise ValueError("draws must have shape (n_chains, n_draws, ...)")
    if x.shape[1] < 4:
        raise ValueError("need at least 4 draws per chain")
    return x


def split_chains(draws):
    """Halve every chain, giving ``(2 * n_chains, n_draws // 2, ...)``."""
    x = _as_chains(draws)
    half = x.shape[1] // 2
    return np.concatenate((x[:, :half], x[:, x.shape[1] - half:]), axis=0)


def rhat(draws):
    """Split potential scale reduction factor (Gelman-Rubin, split chains).

    Accepts ``(n_chains, n_draws)`` or ``(n_chains, n_draws, k)`` and reduces
    over the first two axes.
    """
    x = split_chains(draws)
    m, n = x.shape[:2]
    chain_mean = x.mean(axis=1)
    chain_var = x.var(axis=1, ddof=1)
    between = n * chain_mean.var(axis=0, ddof=1)
    within = chain_var.mean(axis=0)
    var_plus = (n - 1) / n * within + between / n
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(var_plus / within)
    # constant chains: define R-hat as 1 when all chains agree
    return np.where(within > 0, r, np.where(between > 0, np.inf, 1.0))


def _autocov(x):
    """Autocovariance of each row of ``x`` via FFT (biased, lag 0..n-1)."""
    n = x.shape[-1]
    xc = x - x.mean(axis=-1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size, axis=-1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=-1)[..., :n]
    return acov / n


def _ess_scalar(x):
    m, n = x.shape
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1)
    within = chain_var.mean()
    var_plus = within * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus <= 0:
        return float(m * n)
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer's initial monotone positive sequence over lag pairs
    tau = -1.0
    prev = np.inf
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)


def ess(draws):
    """Effective sample size across chains (split chains, Geyer truncation)."""
    x = split_chains(draws)
    if x.ndim == 2:
        return _ess_scalar(x)
    flat = x.reshape(x.shape[0], x.shape[1], -1)
    out = np.array([_ess_scalar(flat[:, :, j]) for j in range(flat.shape[2])])
    return out.reshape(x.shape[2:])


def mcse_mean(draws):
    """Monte-Carlo standard error of the posterior mean."""
    x = _as_chains(draws)
    sd = x.reshape(-1, *x.shape[2:]).std(axis=0, ddof=1)
    return sd / np.sqrt(ess(x))
