"""Continuous-time, fixed-K dynamic topic model.

Each (topic, word) natural parameter follows Brownian drift with variance
sigma2_rate per day of elapsed time. Inference is variational: Gaussian
pseudo-observations beta_hat (with per-time noise nu2) define the topic-chain
posterior through a Kalman filter + RTS smoother; per-token responsibilities
phi and per-document Dirichlet parameters gamma handle the document side.
Coordinate ascent alternates mean-field document updates with a backtracking
gradient step on the pseudo-observations.

elbo() reports the coordinate-ascent objective these updates maximize: the
word-emission term plugs in log pi (pi ∝ exp(m + V/2)) directly, so every
update provably does not decrease it. It sits above the conservative
zeta-bound by sum(phi*V/2), which shrinks as the pseudo-observations tighten.
"""

from __future__ import annotations

import json
from calendar import monthrange
from dataclasses import dataclass, field
from datetime import date

import numpy as np
from scipy.special import digamma, gammaln, logsumexp

from .corpus import Corpus, Vocabulary, days_since_epoch
from .errors import ConvergenceStallError
from . import lda as _lda

_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


# ---------------------------------------------------------------------------
# epochs

@dataclass
class EpochedCorpus:
    """Corpus documents grouped into strictly increasing observation times."""

    times: np.ndarray  # [T] real-valued days
    docs: list[list[np.ndarray]]  # per epoch: token index arrays
    doc_index: list[list[int]]  # per epoch: position of each doc in the source corpus
    n_words: int
    vocabulary: Vocabulary | None = None
    n_docs_total: int = 0

    @property
    def n_epochs(self) -> int:
        return len(self.times)

    def epoch_token_counts(self) -> list[int]:
        return [int(sum(len(tk) for tk in d)) for d in self.docs]


def group_by_month(corpus: Corpus) -> EpochedCorpus:
    """Group documents by calendar month; epoch time = mid-month in real days,
    so gaps between consecutive epochs are irregular."""
    buckets: dict[tuple[int, int], list[int]] = {}
    for i, doc in enumerate(corpus.documents):
        d = date.fromordinal(int(doc.timestamp) + _EPOCH_ORDINAL)
        buckets.setdefault((d.year, d.month), []).append(i)
    keys = sorted(buckets)
    times = []
    docs: list[list[np.ndarray]] = []
    doc_index: list[list[int]] = []
    for (year, month) in keys:
        ndays = monthrange(year, month)[1]
        times.append(days_since_epoch(date(year, month, 1)) + ndays / 2.0)
        doc_index.append(buckets[(year, month)])
        docs.append([corpus.documents[i].tokens for i in buckets[(year, month)]])
    return EpochedCorpus(
        times=np.array(times, dtype=np.float64),
        docs=docs,
        doc_index=doc_index,
        n_words=corpus.n_words,
        vocabulary=corpus.vocabulary,
        n_docs_total=len(corpus),
    )


# ---------------------------------------------------------------------------
# Kalman filtering / smoothing (vectorized over trailing axes)

@dataclass
class FilterResult:
    means: np.ndarray
    variances: np.ndarray
    loglik: np.ndarray  # per-chain sum of observed prediction-error log densities


@dataclass
class SmoothResult:
    means: np.ndarray
    variances: np.ndarray


def _check_times(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or len(times) < 1:
        raise ValueError("times must be a nonempty 1-d array")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    return times


def _filter(y: np.ndarray, r: np.ndarray, times: np.ndarray, sigma2_rate: float, v0: float):
    """Gaussian filter with process variance sigma2_rate*dt between times and
    prior N(0, v0). Entries with r = +inf carry no observation."""
    t_count = len(times)
    m = np.empty_like(y, dtype=np.float64)
    v = np.empty_like(y, dtype=np.float64)
    ll = np.zeros(y.shape[1:], dtype=np.float64)
    pred_m = np.zeros(y.shape[1:], dtype=np.float64)
    pred_v = np.full(y.shape[1:], float(v0), dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for t in range(t_count):
            if t > 0:
                pred_m = m[t - 1]
                pred_v = v[t - 1] + sigma2_rate * (times[t] - times[t - 1])
            rt = r[t]
            observed = np.isfinite(rt)
            s = pred_v + rt
            gain = np.where(observed, pred_v / s, 0.0)
            m[t] = pred_m + gain * (y[t] - pred_m)
            v[t] = (1.0 - gain) * pred_v
            ll += np.where(
                observed,
                -0.5 * (np.log(2.0 * np.pi * s) + (y[t] - pred_m) ** 2 / s),
                0.0,
            )
    return m, v, ll


def kalman_forward(values, obs_vars, times, sigma2_rate: float, v0: float) -> FilterResult:
    """Filter a single (topic, word) chain of pseudo-observations."""
    times = _check_times(times)
    y = np.asarray(values, dtype=np.float64)
    r = np.asarray(obs_vars, dtype=np.float64)
    if y.shape != r.shape or y.shape[0] != len(times):
        raise ValueError("values/obs_vars must align with times")
    if np.any(r <= 0):
        raise ValueError("observation variances must be positive (+inf = missing)")
    if v0 <= 0:
        raise ValueError("v0 must be positive")
    m, v, ll = _filter(y, r, times, sigma2_rate, v0)
    return FilterResult(means=m, variances=v, loglik=ll)


def _smooth(fm: np.ndarray, fv: np.ndarray, times: np.ndarray, sigma2_rate: float):
    ms = fm.copy()
    vs = fv.copy()
    for t in range(len(times) - 2, -1, -1):
        q = sigma2_rate * (times[t + 1] - times[t])
        pp = fv[t] + q
        gain = np.divide(fv[t], pp, out=np.zeros_like(fv[t]), where=pp > 0)
        ms[t] = fm[t] + gain * (ms[t + 1] - fm[t])
        vs[t] = fv[t] + gain**2 * (vs[t + 1] - pp)
    return ms, vs


def kalman_smooth(filtered: FilterResult, times, sigma2_rate: float) -> SmoothResult:
    """Fixed-interval (RTS) backward pass over filtered output."""
    times = _check_times(times)
    if filtered.means.shape[0] != len(times):
        raise ValueError("filtered output does not match times")
    ms, vs = _smooth(filtered.means, filtered.variances, times, sigma2_rate)
    return SmoothResult(means=ms, variances=vs)


def _word_probs(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """pi ∝ exp(m + V/2), normalized along the last axis (overflow-guarded)."""
    x = m + 0.5 * v
    x = x - x.max(axis=-1, keepdims=True)
    e = np.exp(x)
    return e / e.sum(axis=-1, keepdims=True)


def expected_word_probs(m: np.ndarray, v: np.ndarray, t: int | None = None, k: int | None = None) -> np.ndarray:
    """Word distribution for one (epoch, topic); pass 1-d slices directly or
    full [T,K,N] arrays with indices."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if t is not None and k is not None:
        m = m[t, k]
        v = v[t, k]
    return _word_probs(m, v)


# ---------------------------------------------------------------------------
# document-side mean field

@dataclass
class EStepResult:
    phi: list[np.ndarray]  # per document [len, K]
    gamma: np.ndarray  # [D, K]
    counts: np.ndarray  # [K, N] expected topic-word counts


def e_step_epoch(
    documents: list[np.ndarray],
    pi: np.ndarray,
    alpha: float,
    max_rounds: int = 100,
    tol: float = 1e-6,
) -> EStepResult:
    """Mean-field updates for one epoch's documents given the epoch's topic
    word distributions: phi[n,k] ∝ exp(psi(gamma_k)) * pi[k, w_n], then
    gamma = alpha + sum_n phi, iterated to a fixed point."""
    k_topics, n_words = pi.shape
    phis: list[np.ndarray] = []
    gammas = np.empty((len(documents), k_topics), dtype=np.float64)
    counts = np.zeros((k_topics, n_words), dtype=np.float64)
    for j, tokens in enumerate(documents):
        n_t = len(tokens)
        if n_t == 0:
            phis.append(np.zeros((0, k_topics)))
            gammas[j] = alpha
            continue
        lik = pi[:, tokens].T  # [n, K]
        gamma = np.full(k_topics, alpha + n_t / k_topics)
        phi = np.zeros((n_t, k_topics))
        for _ in range(max_rounds):
            w = np.exp(digamma(gamma))[None, :] * lik
            rows = w.sum(axis=1, keepdims=True)
            new_phi = np.where(rows > 0, w / np.where(rows > 0, rows, 1.0), 1.0 / k_topics)
            change = float(np.abs(new_phi - phi).max())
            phi = new_phi
            gamma = alpha + phi.sum(axis=0)
            if change < tol:
                break
        phis.append(phi)
        gammas[j] = gamma
        for k in range(k_topics):
            np.add.at(counts[k], tokens, phi[:, k])
    return EStepResult(phi=phis, gamma=gammas, counts=counts)


# ---------------------------------------------------------------------------
# pseudo-observation update (the beta_hat coordinate)

def pseudo_obs_objective(
    beta_hat: np.ndarray,
    counts: np.ndarray,
    nu2: np.ndarray,
    times: np.ndarray,
    sigma2_rate: float,
    v0: float,
):
    """The beta_hat-dependent part of the ELBO: expected word emissions plus
    the chain term E_q[log p(beta)/q(beta)]. Returns (value, SmoothResult)."""
    fm, fv, ll = _filter(beta_hat, nu2, times, sigma2_rate, v0)
    ms, vs = _smooth(fm, fv, times, sigma2_rate)
    lz = logsumexp(ms + 0.5 * vs, axis=-1)  # [T, K]
    emission = float(np.sum(counts * (ms + 0.5 * vs)) - np.sum(counts.sum(axis=-1) * lz))
    observed = np.isfinite(nu2)
    with np.errstate(divide="ignore", over="ignore"):
        penalty = np.where(
            observed,
            0.5 * np.log(2.0 * np.pi * nu2) + ((beta_hat - ms) ** 2 + vs) / (2.0 * nu2),
            0.0,
        )
    value = emission + float(ll.sum()) + float(penalty.sum())
    return value, SmoothResult(means=ms, variances=vs)


def _apply_posterior_cov(x: np.ndarray, nu2: np.ndarray, times: np.ndarray, sigma2_rate: float, v0: float) -> np.ndarray:
    """Multiply by the chain posterior covariance: solve (P^-1 + diag(1/nu2)) sol = x.

    The Brownian-chain prior precision P^-1 is tridiagonal, so this is a
    vectorized Thomas solve; sigma2_rate = 0 collapses every chain to a single
    shared state with scalar posterior variance.
    """
    t_count = len(times)
    inv_r = np.where(np.isfinite(nu2), 1.0 / nu2, 0.0)
    if sigma2_rate == 0.0:
        post_var = 1.0 / (1.0 / v0 + inv_r.sum(axis=0))
        return np.broadcast_to(post_var * x.sum(axis=0), x.shape).copy()
    q = sigma2_rate * np.diff(times)  # [T-1], all > 0
    diag = inv_r.copy()
    diag[0] += 1.0 / v0
    for t in range(t_count - 1):
        diag[t] += 1.0 / q[t]
        diag[t + 1] += 1.0 / q[t]
    off = -1.0 / q  # off[t] couples t and t+1
    cp = np.zeros_like(x)
    dp = np.zeros_like(x)
    denom = diag[0]
    if t_count > 1:
        cp[0] = off[0] / denom
    dp[0] = x[0] / denom
    for t in range(1, t_count):
        denom = diag[t] - off[t - 1] * cp[t - 1]
        if t < t_count - 1:
            cp[t] = off[t] / denom
        dp[t] = (x[t] - off[t - 1] * dp[t - 1]) / denom
    sol = np.empty_like(x)
    sol[-1] = dp[-1]
    for t in range(t_count - 2, -1, -1):
        sol[t] = dp[t] - cp[t] * sol[t + 1]
    return sol


def pseudo_obs_gradient(
    beta_hat: np.ndarray,
    counts: np.ndarray,
    nu2: np.ndarray,
    times: np.ndarray,
    sigma2_rate: float,
    v0: float,
    smoothed: SmoothResult | None = None,
) -> np.ndarray:
    """Exact gradient of pseudo_obs_objective w.r.t. beta_hat.

    Smoothed means are linear in beta_hat (m = Sigma_post @ (beta_hat/nu2)),
    so the chain rule reduces to one covariance solve per chain.
    """
    if smoothed is None:
        fm, fv, _ = _filter(beta_hat, nu2, times, sigma2_rate, v0)
        ms, vs = _smooth(fm, fv, times, sigma2_rate)
    else:
        ms, vs = smoothed.means, smoothed.variances
    pi = _word_probs(ms, vs)
    g = counts - counts.sum(axis=-1, keepdims=True) * pi
    inv_r = np.where(np.isfinite(nu2), 1.0 / nu2, 0.0)
    resid = (beta_hat - ms) * inv_r
    return _apply_posterior_cov(g - resid, nu2, times, sigma2_rate, v0) * inv_r


@dataclass
class PseudoObsUpdate:
    beta_hat: np.ndarray
    smoothed: SmoothResult
    objective: float
    step_size: float


def update_pseudo_observations(
    counts: np.ndarray,
    beta_hat: np.ndarray,
    nu2: np.ndarray,
    times: np.ndarray,
    sigma2_rate: float,
    v0: float,
    min_step: float = 1e-12,
) -> PseudoObsUpdate:
    """One ascent step on the ELBO w.r.t. beta_hat: full gradient, then halve
    the step until the objective does not decrease."""
    base, smoothed = pseudo_obs_objective(beta_hat, counts, nu2, times, sigma2_rate, v0)
    grad = pseudo_obs_gradient(beta_hat, counts, nu2, times, sigma2_rate, v0, smoothed)
    if float(np.abs(grad).max(initial=0.0)) == 0.0:
        return PseudoObsUpdate(beta_hat=beta_hat, smoothed=smoothed, objective=base, step_size=0.0)
    step = 1.0
    while step >= min_step:
        cand = beta_hat + step * grad
        value, cand_smooth = pseudo_obs_objective(cand, counts, nu2, times, sigma2_rate, v0)
        if value >= base:
            return PseudoObsUpdate(beta_hat=cand, smoothed=cand_smooth, objective=value, step_size=step)
        step *= 0.5
    raise ConvergenceStallError(f"line search underflowed below {min_step:g}")


# ---------------------------------------------------------------------------
# model containers, ELBO, fit

@dataclass
class CdtmModel:
    k: int
    times: np.ndarray
    sigma2_rate: float
    v0: float
    alpha: float
    m: np.ndarray  # [T, K, N] smoothed natural-parameter means
    v: np.ndarray  # [T, K, N] smoothed variances
    pi: np.ndarray  # [T, K, N] derived word probabilities
    vocabulary: Vocabulary | None = None

    @property
    def n_words(self) -> int:
        return self.m.shape[2]

    def top_words(self, topic: int, epoch: int | None = None, n: int = 10) -> list[str]:
        probs = self.pi[:, topic, :].mean(axis=0) if epoch is None else self.pi[epoch, topic]
        order = np.argsort(-probs)[:n]
        return [self.vocabulary.words[i] for i in order] if self.vocabulary else [str(i) for i in order]


@dataclass
class VariationalState:
    beta_hat: np.ndarray  # [T, K, N]
    nu2: np.ndarray  # [T, K, N] pseudo-observation variances (+inf = no obs)
    phi: list[list[np.ndarray]]  # per epoch, per doc [len, K]
    gamma: list[np.ndarray]  # per epoch [D_t, K]
    counts: np.ndarray  # [T, K, N] expected topic-word counts
    n_tokens: list[int] = field(default_factory=list)
    elbo_trace: list[float] = field(default_factory=list)


def elbo(model: CdtmModel, state: VariationalState, epochs: EpochedCorpus) -> float:
    """Coordinate-ascent objective: chain terms + plug-in word emissions +
    document-side Dirichlet/assignment terms and entropies."""
    k = model.k
    alpha = model.alpha
    chain_and_emit, _ = pseudo_obs_objective(
        state.beta_hat, state.counts, state.nu2, model.times, model.sigma2_rate, model.v0
    )
    total = chain_and_emit
    for t in range(epochs.n_epochs):
        gammas = state.gamma[t]
        for j in range(len(epochs.docs[t])):
            gamma = gammas[j]
            phi = state.phi[t][j]
            gsum = gamma.sum()
            elog = digamma(gamma) - digamma(gsum)
            total += float(
                gammaln(k * alpha) - k * gammaln(alpha)
                + np.sum((alpha - gamma) * elog)
                + np.sum(gammaln(gamma)) - gammaln(gsum)
            )
            if len(phi):
                with np.errstate(divide="ignore", invalid="ignore"):
                    ent = np.where(phi > 0, phi * np.log(phi), 0.0)
                total += float(np.sum(phi * elog[None, :]) - np.sum(ent))
    return float(total)


def _init_from_lda(epochs: EpochedCorpus, k: int, alpha: float, seed: int, iterations: int, burn_in: int):
    """Deterministic symmetry-breaking: a short static fit supplies centered
    log word distributions as pseudo-observations and expected counts for nu2."""
    if epochs.vocabulary is None:
        raise ValueError("epochs must carry a vocabulary for initialization")
    from .corpus import Document

    docs = []
    flat_tokens: list[tuple[int, int]] = []
    for t in range(epochs.n_epochs):
        for j, tokens in enumerate(epochs.docs[t]):
            flat_tokens.append((t, j))
            docs.append(Document(tokens=tokens, timestamp=0.0, event_id=f"init-{t}-{j}", fips="", year=0))
    flat = Corpus(vocabulary=epochs.vocabulary, documents=docs)
    model0, theta0 = _lda.fit_gibbs(
        flat, k, alpha=alpha, eta=0.01, iterations=iterations, burn_in=burn_in, seed=seed, check_counts=False
    )
    t_count = epochs.n_epochs
    n = epochs.n_words
    log_b = np.log(model0.beta)
    row = log_b - log_b.mean(axis=1, keepdims=True)
    beta_hat = np.broadcast_to(row, (t_count, k, n)).copy()
    counts0 = np.zeros((t_count, k, n))
    for pos, (t, j) in enumerate(flat_tokens):
        tokens = epochs.docs[t][j]
        if len(tokens) == 0:
            continue
        resp = theta0[pos][:, None] * model0.beta[:, tokens]
        resp /= resp.sum(axis=0, keepdims=True)
        for kk in range(k):
            np.add.at(counts0[t, kk], tokens, resp[kk])
    nu2 = 1.0 / (counts0 + 1.0)
    for t, n_tok in enumerate(epochs.epoch_token_counts()):
        if n_tok == 0:
            nu2[t] = np.inf
    return beta_hat, nu2


def fit_cdtm(
    epochs: EpochedCorpus,
    k: int,
    alpha: float | None = None,
    sigma2_rate: float = 1e-4,
    v0: float = 1.0,
    max_iters: int = 100,
    tol: float = 1e-4,
    seed: int = 0,
    init_iterations: int = 120,
    init_burn_in: int = 60,
) -> tuple[CdtmModel, VariationalState]:
    """Coordinate ascent over (phi, gamma) and beta_hat with Kalman smoothing
    of every (topic, word) chain after each pseudo-observation step."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if epochs.n_epochs < 1:
        raise ValueError("need at least one epoch")
    if alpha is None:
        alpha = 50.0 / k
    times = _check_times(epochs.times)
    beta_hat, nu2 = _init_from_lda(epochs, k, alpha, seed, init_iterations, init_burn_in)
    _, smoothed = pseudo_obs_objective(beta_hat, np.zeros_like(beta_hat), nu2, times, sigma2_rate, v0)
    pi = _word_probs(smoothed.means, smoothed.variances)

    model = CdtmModel(
        k=k, times=times, sigma2_rate=sigma2_rate, v0=v0, alpha=alpha,
        m=smoothed.means, v=smoothed.variances, pi=pi, vocabulary=epochs.vocabulary,
    )
    state = VariationalState(
        beta_hat=beta_hat, nu2=nu2, phi=[], gamma=[],
        counts=np.zeros_like(beta_hat), n_tokens=epochs.epoch_token_counts(),
    )
    prev = None
    for _ in range(max_iters):
        counts = np.zeros_like(beta_hat)
        state.phi = []
        state.gamma = []
        for t in range(epochs.n_epochs):
            res = e_step_epoch(epochs.docs[t], model.pi[t], alpha)
            state.phi.append(res.phi)
            state.gamma.append(res.gamma)
            counts[t] = res.counts
        state.counts = counts
        stalled = False
        try:
            upd = update_pseudo_observations(counts, state.beta_hat, nu2, times, sigma2_rate, v0)
            state.beta_hat = upd.beta_hat
            model.m = upd.smoothed.means
            model.v = upd.smoothed.variances
            model.pi = _word_probs(model.m, model.v)
        except ConvergenceStallError:
            stalled = True  # objective cannot improve along this coordinate
        value = elbo(model, state, epochs)
        state.elbo_trace.append(value)
        if stalled or (prev is not None and value - prev < tol):
            break
        prev = value
    return model, state


def theta_matrix(state: VariationalState, epochs: EpochedCorpus) -> np.ndarray:
    """Per-document mixtures (normalized gamma) realigned to source corpus order."""
    k = state.beta_hat.shape[1]
    theta = np.full((epochs.n_docs_total, k), 1.0 / k)
    for t in range(epochs.n_epochs):
        for j, pos in enumerate(epochs.doc_index[t]):
            g = state.gamma[t][j]
            theta[pos] = g / g.sum()
    return theta


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_json(model: CdtmModel) -> bytes:
    def arr3(a: np.ndarray) -> str:
        return "[" + ",".join(
            "[" + ",".join("[" + ",".join(_fmt(x) for x in row) + "]" for row in mat) + "]"
            for mat in a
        ) + "]"

    payload = '{"k":%d,"times":[%s],"sigma2_rate":%s,"v0":%s,"m":%s,"V":%s}' % (
        model.k,
        ",".join(_fmt(t) for t in model.times),
        _fmt(model.sigma2_rate),
        _fmt(model.v0),
        arr3(model.m),
        arr3(model.v),
    )
    return payload.encode("utf-8")


def model_from_json(data: bytes, vocabulary: Vocabulary | None = None, alpha: float = 1.0) -> CdtmModel:
    obj = json.loads(data.decode("utf-8"))
    m = np.array(obj["m"], dtype=np.float64)
    v = np.array(obj["V"], dtype=np.float64)
    return CdtmModel(
        k=int(obj["k"]),
        times=np.array(obj["times"], dtype=np.float64),
        sigma2_rate=float(obj["sigma2_rate"]),
        v0=float(obj["v0"]),
        alpha=alpha,
        m=m,
        v=v,
        pi=_word_probs(m, v),
        vocabulary=vocabulary,
    )
