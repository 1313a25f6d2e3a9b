"""Static finite-topic model: collapsed Gibbs training, fold-in inference,
generative sampling, and perplexity.

The sampler state is the per-token topic assignment vector z plus count
tables; the full conditional for one token is

    p(z = k | rest) ∝ (n_dk + alpha) * (n_kw + eta) / (n_k + N*eta)

Sweeps run in a numba-compiled kernel driven by a self-contained
xorshift64* stream, so a seed pins the output bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .corpus import Corpus, Document, Vocabulary
from .errors import VocabularyMismatchError

_MASK64 = (1 << 64) - 1


def _seed_state(seed: int) -> np.ndarray:
    """splitmix64 of the seed -> initial xorshift64* state (never zero)."""
    x = (int(seed) + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    x = x ^ (x >> 31)
    if x == 0:
        x = 0x9E3779B97F4A7C15
    return np.array([x], dtype=np.uint64)


@njit(cache=True)
def _rng_uniform(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    y = x * np.uint64(0x2545F4914F6CDD1D)
    return (y >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _init_assignments(n_tokens, k, state):
    z = np.empty(n_tokens, dtype=np.int32)
    for i in range(n_tokens):
        r = int(_rng_uniform(state) * k)
        if r >= k:
            r = k - 1
        z[i] = r
    return z


@njit(cache=True)
def _gibbs_sweep(token_word, token_doc, z, n_dk, n_kw, n_k, alpha, eta, cum, state):
    k_topics = n_kw.shape[0]
    n_eta = n_kw.shape[1] * eta
    for i in range(token_word.shape[0]):
        w = token_word[i]
        d = token_doc[i]
        old = z[i]
        n_dk[d, old] -= 1
        n_kw[old, w] -= 1
        n_k[old] -= 1
        total = 0.0
        for k in range(k_topics):
            total += (n_dk[d, k] + alpha) * (n_kw[k, w] + eta) / (n_k[k] + n_eta)
            cum[k] = total
        u = _rng_uniform(state) * total
        new = 0
        while cum[new] <= u and new < k_topics - 1:
            new += 1
        z[i] = new
        n_dk[d, new] += 1
        n_kw[new, w] += 1
        n_k[new] += 1


@njit(cache=True)
def _fold_sweep(token_word, z, doc_counts, beta, alpha, cum, state):
    k_topics = beta.shape[0]
    for i in range(token_word.shape[0]):
        w = token_word[i]
        old = z[i]
        doc_counts[old] -= 1
        total = 0.0
        for k in range(k_topics):
            total += (doc_counts[k] + alpha) * beta[k, w]
            cum[k] = total
        u = _rng_uniform(state) * total
        new = 0
        while cum[new] <= u and new < k_topics - 1:
            new += 1
        z[i] = new
        doc_counts[new] += 1


@dataclass
class LdaModel:
    k: int
    alpha: float
    eta: float
    beta: np.ndarray  # [K, N] row-stochastic topic-word matrix
    vocabulary: Vocabulary

    @property
    def n_words(self) -> int:
        return self.beta.shape[1]

    def top_words(self, topic: int, n: int = 10) -> list[str]:
        order = np.argsort(-self.beta[topic])[:n]
        return [self.vocabulary.words[i] for i in order]


@dataclass
class GibbsState:
    """Mutable sampler state; counts stay consistent with z after every sweep."""

    z: np.ndarray
    token_word: np.ndarray
    token_doc: np.ndarray
    n_dk: np.ndarray
    n_kw: np.ndarray
    n_k: np.ndarray
    seed: int
    iteration: int = 0

    def check_consistency(self) -> None:
        k = self.n_kw.shape[0]
        n_dk = np.zeros_like(self.n_dk)
        np.add.at(n_dk, (self.token_doc, self.z), 1)
        n_kw = np.zeros_like(self.n_kw)
        np.add.at(n_kw, (self.z, self.token_word), 1)
        if not np.array_equal(n_dk, self.n_dk) or not np.array_equal(n_kw, self.n_kw):
            raise AssertionError("gibbs counts inconsistent with assignments")
        if not np.array_equal(self.n_k, np.bincount(self.z, minlength=k).astype(self.n_k.dtype)):
            raise AssertionError("topic totals inconsistent with assignments")


def _flatten(corpus: Corpus) -> tuple[np.ndarray, np.ndarray]:
    token_word = np.concatenate([d.tokens for d in corpus.documents]) if corpus.documents else np.empty(0, np.int32)
    token_doc = np.concatenate(
        [np.full(len(d), i, dtype=np.int32) for i, d in enumerate(corpus.documents)]
    ) if corpus.documents else np.empty(0, np.int32)
    return token_word.astype(np.int32), token_doc


def _validate_fit_args(corpus: Corpus, k: int, alpha: float, eta: float, iterations: int, burn_in: int) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(corpus) < 1:
        raise ValueError("corpus is empty")
    if alpha <= 0 or eta <= 0:
        raise ValueError("priors must be positive")
    if not (iterations > burn_in >= 0):
        raise ValueError("need iterations > burn_in >= 0")


def _sample_sweeps(iterations: int, burn_in: int, every: int = 10) -> list[int]:
    sweeps = [s for s in range(burn_in + 1, iterations + 1) if (s - burn_in) % every == 0]
    if iterations not in sweeps:
        sweeps.append(iterations)
    return sweeps


def fit_gibbs(
    corpus: Corpus,
    k: int,
    alpha: float | None = None,
    eta: float = 0.01,
    iterations: int = 2000,
    burn_in: int = 1000,
    seed: int = 0,
    check_counts: bool = True,
) -> tuple[LdaModel, np.ndarray]:
    """Collapsed Gibbs fit; returns the model and the D x K document-mixture
    matrix, both averaged over every 10th post-burn-in sweep."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if alpha is None:
        alpha = 50.0 / k
    _validate_fit_args(corpus, k, alpha, eta, iterations, burn_in)
    n = corpus.n_words
    d_count = len(corpus)
    token_word, token_doc = _flatten(corpus)
    state = _seed_state(seed)
    z = _init_assignments(len(token_word), k, state)
    n_dk = np.zeros((d_count, k), dtype=np.int64)
    n_kw = np.zeros((k, n), dtype=np.int64)
    np.add.at(n_dk, (token_doc, z), 1)
    np.add.at(n_kw, (z, token_word), 1)
    n_k = np.bincount(z, minlength=k).astype(np.int64)
    n_d = np.bincount(token_doc, minlength=d_count).astype(np.float64)
    gibbs = GibbsState(z, token_word, token_doc, n_dk, n_kw, n_k, seed)

    sample_at = set(_sample_sweeps(iterations, burn_in))
    cum = np.empty(k, dtype=np.float64)
    beta_acc = np.zeros((k, n))
    theta_acc = np.zeros((d_count, k))
    n_samples = 0
    for sweep in range(1, iterations + 1):
        _gibbs_sweep(token_word, token_doc, z, n_dk, n_kw, n_k, alpha, eta, cum, state)
        gibbs.iteration = sweep
        if check_counts and sweep in (burn_in, iterations):
            gibbs.check_consistency()
        if sweep in sample_at:
            beta_acc += (n_kw + eta) / (n_k + n * eta)[:, None]
            theta_acc += (n_dk + alpha) / (n_d + k * alpha)[:, None]
            n_samples += 1
    beta = beta_acc / n_samples
    theta = theta_acc / n_samples
    model = LdaModel(k=k, alpha=alpha, eta=eta, beta=beta, vocabulary=corpus.vocabulary)
    return model, theta


def collect_assignment_samples(
    corpus: Corpus,
    k: int,
    alpha: float,
    eta: float,
    n_samples: int,
    burn_in: int,
    seed: int = 0,
) -> np.ndarray:
    """One assignment-vector sample per post-burn-in sweep; rows are full z
    vectors over the flattened corpus. Feeds the enumeration oracle."""
    if k < 1 or n_samples < 1:
        raise ValueError("k and n_samples must be >= 1")
    n = corpus.n_words
    token_word, token_doc = _flatten(corpus)
    state = _seed_state(seed)
    z = _init_assignments(len(token_word), k, state)
    n_dk = np.zeros((len(corpus), k), dtype=np.int64)
    n_kw = np.zeros((k, n), dtype=np.int64)
    np.add.at(n_dk, (token_doc, z), 1)
    np.add.at(n_kw, (z, token_word), 1)
    n_k = np.bincount(z, minlength=k).astype(np.int64)
    cum = np.empty(k, dtype=np.float64)
    out = np.empty((n_samples, len(token_word)), dtype=np.int32)
    for sweep in range(burn_in + n_samples):
        _gibbs_sweep(token_word, token_doc, z, n_dk, n_kw, n_k, alpha, eta, cum, state)
        if sweep >= burn_in:
            out[sweep - burn_in] = z
    return out


def infer_theta(
    model: LdaModel,
    document: Document,
    iterations: int = 200,
    burn_in: int = 100,
    seed: int = 0,
) -> np.ndarray:
    """Fold-in Gibbs for one held-out document, holding the topic-word
    distributions fixed; returns the averaged smoothed mixture."""
    if not (iterations > burn_in >= 0):
        raise ValueError("need iterations > burn_in >= 0")
    if len(document) and int(document.tokens.max()) >= model.n_words:
        raise VocabularyMismatchError("document indexes beyond the model vocabulary")
    k = model.k
    if len(document) == 0:
        return np.full(k, 1.0 / k)
    token_word = document.tokens.astype(np.int32)
    state = _seed_state(seed)
    z = _init_assignments(len(token_word), k, state)
    doc_counts = np.bincount(z, minlength=k).astype(np.int64)
    beta = np.ascontiguousarray(model.beta)
    cum = np.empty(k, dtype=np.float64)
    acc = np.zeros(k)
    n_samples = 0
    n_d = float(len(token_word))
    sample_at = set(_sample_sweeps(iterations, burn_in))
    for sweep in range(1, iterations + 1):
        _fold_sweep(token_word, z, doc_counts, beta, model.alpha, cum, state)
        if sweep in sample_at:
            acc += (doc_counts + model.alpha) / (n_d + k * model.alpha)
            n_samples += 1
    return acc / n_samples


def infer_theta_matrix(model: LdaModel, corpus: Corpus, iterations: int = 200, burn_in: int = 100, seed: int = 0) -> np.ndarray:
    rows = [infer_theta(model, doc, iterations, burn_in, seed + i) for i, doc in enumerate(corpus.documents)]
    return np.vstack(rows)


def perplexity(model: LdaModel, theta: np.ndarray, corpus: Corpus) -> float:
    """exp(-mean token log-likelihood) under the mixture theta @ beta."""
    if theta.shape[0] != len(corpus):
        raise ValueError("theta rows do not align with corpus documents")
    total = corpus.total_tokens
    if total == 0:
        raise ValueError("corpus has no tokens")
    loglik = 0.0
    for d, doc in enumerate(corpus.documents):
        if len(doc) == 0:
            continue
        probs = theta[d] @ model.beta[:, doc.tokens]
        if np.any(probs <= 0.0):
            raise ValueError("token with zero probability under the model")
        loglik += float(np.log(probs).sum())
    return float(np.exp(-loglik / total))


def _draw_documents(
    model: LdaModel,
    n_docs: int,
    doc_length_law: int | Callable[[np.random.Generator], int],
    rng: np.random.Generator,
) -> tuple[list[np.ndarray], np.ndarray, list[np.ndarray]]:
    """Generative draws: theta ~ Dir(alpha), z ~ Cat(theta), w ~ Cat(beta_z).
    Returns (token lists, thetas, topic assignment lists)."""
    thetas = rng.dirichlet(np.full(model.k, model.alpha), size=n_docs)
    token_lists = []
    z_lists = []
    for d in range(n_docs):
        length = doc_length_law if isinstance(doc_length_law, int) else int(doc_length_law(rng))
        zs = rng.choice(model.k, size=length, p=thetas[d])
        words = np.empty(length, dtype=np.int32)
        for k in range(model.k):
            mask = zs == k
            if mask.any():
                words[mask] = rng.choice(model.n_words, size=int(mask.sum()), p=model.beta[k])
        token_lists.append(words)
        z_lists.append(zs.astype(np.int32))
    return token_lists, thetas, z_lists


def sample_corpus(
    model: LdaModel,
    n_docs: int,
    doc_length_law: int | Callable[[np.random.Generator], int],
    seed: int = 0,
) -> Corpus:
    """Sample a synthetic corpus from the model's generative process."""
    if n_docs < 1:
        raise ValueError("n_docs must be >= 1")
    rng = np.random.default_rng(seed)
    token_lists, _, _ = _draw_documents(model, n_docs, doc_length_law, rng)
    docs = [
        Document(tokens=toks, timestamp=0.0, event_id=f"synthetic-{i}", fips="", year=0)
        for i, toks in enumerate(token_lists)
    ]
    return Corpus(vocabulary=model.vocabulary, documents=docs)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_json(model: LdaModel) -> bytes:
    """Serialize with floats at 17 significant digits (round-trip exact)."""
    rows = ",".join("[" + ",".join(_fmt(v) for v in row) + "]" for row in model.beta)
    payload = (
        '{"k":%d,"alpha":%s,"eta":%s,"vocab":%s,"beta":[%s]}'
        % (model.k, _fmt(model.alpha), _fmt(model.eta), json.dumps(list(model.vocabulary.words)), rows)
    )
    return payload.encode("utf-8")


def model_from_json(data: bytes) -> LdaModel:
    obj = json.loads(data.decode("utf-8"))
    vocab = Vocabulary.from_words(list(obj["vocab"]))
    beta = np.array(obj["beta"], dtype=np.float64)
    return LdaModel(k=int(obj["k"]), alpha=float(obj["alpha"]), eta=float(obj["eta"]), beta=beta, vocabulary=vocab)
