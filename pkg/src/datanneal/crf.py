"""Linear-chain CRF tagger with a shared hashed encoder and per-domain heads.

One dense encoder matrix turns hashed sparse token features into a tanh
hidden vector; each domain (source, target) owns a separate head holding
emission and transition weights over its own label set. Training through
either head updates the shared encoder, which is the only channel through
which source-domain exposure can help the target task.

Transitions use two virtual states appended after the K real labels:
BOS = K and EOS = K + 1. Cells that can never occur (into BOS, out of
EOS, BOS directly to EOS) are pinned at -inf and are never read by the
dynamic programs, so no -inf value ever enters an arithmetic expression.

All inference is in log space with max-shifted logsumexp. Optimization
is adagrad with L2 applied lazily, only to parameters touched by the
current batch; `gradient_bundle` itself excludes the L2 term so its
output matches finite-difference checks of the plain mean NLL.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import LabelMismatchError
from .features import FeatureExtractor
from .sampling import Domain

_MAGIC = b"DNCK1\n"
_INIT_SCALE = 0.1
_ADAGRAD_EPS = 1e-8


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(
        np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m, axis=axis
    )


def transition_mask(num_labels: int) -> np.ndarray:
    """Boolean mask of transition cells that a non-empty sentence can use."""
    k = num_labels
    mask = np.zeros((k + 2, k + 2), dtype=bool)
    mask[:k, :k] = True  # label -> label
    mask[k, :k] = True  # BOS -> label
    mask[:k, k + 1] = True  # label -> EOS
    return mask


def _chain_parts(transition: np.ndarray):
    """Split a (K+2, K+2) transition matrix into its finite pieces."""
    k = transition.shape[0] - 2
    return transition[:k, :k], transition[k, :k], transition[:k, k + 1]


def chain_log_partition(emissions: np.ndarray, transition: np.ndarray) -> float:
    """log sum over all K^T label paths of exp(path score)."""
    inner, start, end = _chain_parts(transition)
    alpha = start + emissions[0]
    for t in range(1, emissions.shape[0]):
        alpha = emissions[t] + _logsumexp(alpha[:, None] + inner, axis=0)
    return float(_logsumexp((alpha + end)[None, :], axis=1)[0])


def chain_marginals(
    emissions: np.ndarray, transition: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Posterior (unary (T, K), pairwise (T-1, K, K), log partition)."""
    inner, start, end = _chain_parts(transition)
    n, k = emissions.shape

    log_alpha = np.empty((n, k))
    log_alpha[0] = start + emissions[0]
    for t in range(1, n):
        log_alpha[t] = emissions[t] + _logsumexp(log_alpha[t - 1][:, None] + inner, axis=0)

    log_beta = np.empty((n, k))
    log_beta[n - 1] = end
    for t in range(n - 2, -1, -1):
        log_beta[t] = _logsumexp(inner + (emissions[t + 1] + log_beta[t + 1])[None, :], axis=1)

    log_z = float(_logsumexp((log_alpha[n - 1] + end)[None, :], axis=1)[0])
    unary = np.exp(log_alpha + log_beta - log_z)
    pairwise = np.empty((max(n - 1, 0), k, k))
    for t in range(n - 1):
        pairwise[t] = np.exp(
            log_alpha[t][:, None]
            + inner
            + (emissions[t + 1] + log_beta[t + 1])[None, :]
            - log_z
        )
    return unary, pairwise, log_z


def chain_viterbi(emissions: np.ndarray, transition: np.ndarray) -> np.ndarray:
    """Maximum-scoring path as label indices, ties toward the lowest index.

    np.argmax returns the first maximizer, which is exactly the
    lowest-index tie-break at every backtrack decision.
    """
    inner, start, end = _chain_parts(transition)
    n, k = emissions.shape
    score = start + emissions[0]
    back = np.empty((n, k), dtype=np.int64)
    for t in range(1, n):
        cand = score[:, None] + inner
        back[t] = np.argmax(cand, axis=0)
        score = emissions[t] + cand[back[t], np.arange(k)]
    score = score + end
    path = [int(np.argmax(score))]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t][path[-1]]))
    path.reverse()
    return np.asarray(path, dtype=np.int64)


@dataclass
class TaskHead:
    """Emission and transition parameters over one domain's label set."""

    labels: tuple[str, ...]
    emission: np.ndarray  # (hidden_dim, K)
    transition: np.ndarray  # (K + 2, K + 2), -inf outside transition_mask
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {label: i for i, label in enumerate(self.labels)}

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def bos(self) -> int:
        return self.num_labels

    @property
    def eos(self) -> int:
        return self.num_labels + 1

    def label_ids(self, labels: tuple[str, ...]) -> np.ndarray:
        try:
            return np.asarray([self.index[lab] for lab in labels], dtype=np.int64)
        except KeyError as exc:
            raise LabelMismatchError(
                f"label {exc.args[0]!r} not in head label set {list(self.labels)}"
            ) from None


def _new_head(
    labels: tuple[str, ...], hidden_dim: int, rng: np.random.Generator | None
) -> TaskHead:
    k = len(labels)
    mask = transition_mask(k)
    transition = np.full((k + 2, k + 2), -np.inf)
    if rng is None:
        emission = np.zeros((hidden_dim, k))
        transition[mask] = 0.0
    else:
        emission = rng.uniform(-_INIT_SCALE, _INIT_SCALE, (hidden_dim, k))
        transition[mask] = rng.uniform(-_INIT_SCALE, _INIT_SCALE, int(mask.sum()))
    return TaskHead(labels=tuple(labels), emission=emission, transition=transition)


@dataclass
class GradientBundle:
    """Mean-NLL gradients for one batch, sparse in encoder rows."""

    encoder_rows: np.ndarray  # unique sorted row indices into W
    encoder_grad: np.ndarray  # (len(encoder_rows), hidden_dim)
    heads: dict[Domain, tuple[np.ndarray, np.ndarray]]  # domain -> (dE, dT)


class NeuralCrfModel:
    def __init__(
        self,
        extractor: FeatureExtractor,
        encoder: np.ndarray,
        heads: dict[Domain, TaskHead],
    ):
        if encoder.shape[0] != extractor.hash_dim:
            raise ValueError(
                f"encoder has {encoder.shape[0]} rows, extractor hashes into "
                f"{extractor.hash_dim}"
            )
        self.extractor = extractor
        self.encoder = encoder
        self.heads = heads
        self._feature_cache: dict[tuple[str, ...], list[np.ndarray]] = {}

    @property
    def hidden_dim(self) -> int:
        return self.encoder.shape[1]

    @classmethod
    def initialized(
        cls,
        labels_source: tuple[str, ...],
        labels_target: tuple[str, ...],
        hash_dim: int,
        hidden_dim: int,
        seed: int,
    ) -> "NeuralCrfModel":
        """Fresh model, all free parameters uniform on [-0.1, 0.1].

        Encoder and each head draw from independent substreams of the
        seed, so e.g. the target head's initial values do not shift when
        the source label set changes.
        """

        def stream(k: int) -> np.random.Generator:
            return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, k])))

        encoder = stream(0).uniform(-_INIT_SCALE, _INIT_SCALE, (hash_dim, hidden_dim))
        heads = {
            Domain.SOURCE: _new_head(tuple(labels_source), hidden_dim, stream(1)),
            Domain.TARGET: _new_head(tuple(labels_target), hidden_dim, stream(2)),
        }
        return cls(FeatureExtractor(hash_dim), encoder, heads)

    @classmethod
    def zeros(
        cls,
        labels_source: tuple[str, ...],
        labels_target: tuple[str, ...],
        hash_dim: int,
        hidden_dim: int,
    ) -> "NeuralCrfModel":
        """All-zero model (finite transition cells at 0); handy in tests."""
        encoder = np.zeros((hash_dim, hidden_dim))
        heads = {
            Domain.SOURCE: _new_head(tuple(labels_source), hidden_dim, None),
            Domain.TARGET: _new_head(tuple(labels_target), hidden_dim, None),
        }
        return cls(FeatureExtractor(hash_dim), encoder, heads)

    # -- encoding ------------------------------------------------------------

    def _features(self, tokens: tuple[str, ...]) -> list[np.ndarray]:
        cached = self._feature_cache.get(tokens)
        if cached is None:
            cached = self.extractor.sentence_indices(tokens)
            self._feature_cache[tokens] = cached
        return cached

    def _hidden(self, feats: list[np.ndarray]) -> np.ndarray:
        pre = np.stack([self.encoder[idx].sum(axis=0) for idx in feats])
        return np.tanh(pre)

    def emission_scores(self, tokens: tuple[str, ...], domain: Domain) -> np.ndarray:
        """(n, K) matrix of per-token label scores under ``domain``'s head."""
        hidden = self._hidden(self._features(tokens))
        return hidden @ self.heads[domain].emission

    # -- inference -------------------------------------------------------------

    def log_partition(self, tokens: tuple[str, ...], domain: Domain) -> float:
        return chain_log_partition(
            self.emission_scores(tokens, domain), self.heads[domain].transition
        )

    def forward_backward(
        self, tokens: tuple[str, ...], domain: Domain
    ) -> tuple[np.ndarray, np.ndarray, float]:
        """Posterior marginals: (unary (n, K), pairwise (n-1, K, K), logZ)."""
        return chain_marginals(
            self.emission_scores(tokens, domain), self.heads[domain].transition
        )

    def sentence_nll(self, sentence, domain: Domain) -> float:
        """Negative log-likelihood of the gold label sequence."""
        head = self.heads[domain]
        y = head.label_ids(sentence.labels)
        inner, start, end = _chain_parts(head.transition)
        emis = self.emission_scores(sentence.tokens, domain)
        gold = float(start[y[0]] + emis[np.arange(len(y)), y].sum() + end[y[-1]])
        if len(y) > 1:
            gold += float(inner[y[:-1], y[1:]].sum())
        return chain_log_partition(emis, head.transition) - gold

    def viterbi(self, tokens: tuple[str, ...], domain: Domain) -> tuple[str, ...]:
        """Highest-scoring label sequence; ties go to the lowest label index."""
        head = self.heads[domain]
        path = chain_viterbi(self.emission_scores(tokens, domain), head.transition)
        return tuple(head.labels[i] for i in path)

    def predict(self, sentences, domain: Domain) -> list[tuple[str, ...]]:
        return [self.viterbi(s.tokens, domain) for s in sentences]

    # -- learning --------------------------------------------------------------

    def gradient_bundle(self, items) -> tuple[float, GradientBundle]:
        """Mean NLL over ``items`` ((sentence, domain) pairs) and its gradients.

        No regularization term is included here; L2 enters only in
        `apply_gradients`, so these values match finite differences of
        the mean NLL directly.
        """
        items = list(items)
        if not items:
            raise ValueError("cannot take gradients of an empty batch")
        scale = 1.0 / len(items)
        total_nll = 0.0
        head_grads: dict[Domain, tuple[np.ndarray, np.ndarray]] = {}
        row_chunks: list[np.ndarray] = []
        gz_chunks: list[np.ndarray] = []

        for sentence, domain in items:
            head = self.heads[domain]
            k = head.num_labels
            if domain not in head_grads:
                head_grads[domain] = (
                    np.zeros_like(head.emission),
                    np.zeros((k + 2, k + 2)),
                )
            d_emission, d_transition = head_grads[domain]

            y = head.label_ids(sentence.labels)
            feats = self._features(sentence.tokens)
            hidden = self._hidden(feats)
            emis = hidden @ head.emission
            inner, start, end = _chain_parts(head.transition)
            n = len(y)

            unary, pairwise, log_z = chain_marginals(emis, head.transition)
            gold = float(start[y[0]] + emis[np.arange(n), y].sum() + end[y[-1]])
            if n > 1:
                gold += float(inner[y[:-1], y[1:]].sum())
            total_nll += log_z - gold

            g_emis = unary.copy()
            g_emis[np.arange(n), y] -= 1.0

            start_grad = unary[0].copy()
            start_grad[y[0]] -= 1.0
            end_grad = unary[n - 1].copy()
            end_grad[y[n - 1]] -= 1.0
            d_transition[head.bos, :k] += scale * start_grad
            d_transition[:k, head.eos] += scale * end_grad
            if n > 1:
                inner_grad = pairwise.sum(axis=0)
                np.subtract.at(inner_grad, (y[:-1], y[1:]), 1.0)
                d_transition[:k, :k] += scale * inner_grad

            d_emission += scale * (hidden.T @ g_emis)
            d_hidden = g_emis @ head.emission.T
            d_pre = d_hidden * (1.0 - hidden * hidden)
            row_chunks.append(np.concatenate(feats))
            gz_chunks.append(
                np.repeat(d_pre, [len(f) for f in feats], axis=0) * scale
            )

        all_rows = np.concatenate(row_chunks)
        all_grads = np.concatenate(gz_chunks)
        rows, inverse = np.unique(all_rows, return_inverse=True)
        encoder_grad = np.zeros((len(rows), self.hidden_dim))
        np.add.at(encoder_grad, inverse, all_grads)
        return total_nll * scale, GradientBundle(rows, encoder_grad, head_grads)


@dataclass
class AdagradState:
    """Per-parameter squared-gradient accumulators plus hyperparameters."""

    learning_rate: float
    l2: float
    encoder_acc: np.ndarray
    head_acc: dict[Domain, tuple[np.ndarray, np.ndarray]]
    eps: float = _ADAGRAD_EPS

    @classmethod
    def for_model(
        cls, model: NeuralCrfModel, learning_rate: float, l2: float
    ) -> "AdagradState":
        return cls(
            learning_rate=learning_rate,
            l2=l2,
            encoder_acc=np.zeros_like(model.encoder),
            head_acc={
                d: (np.zeros_like(h.emission), np.zeros_like(h.transition))
                for d, h in model.heads.items()
            },
        )


def apply_gradients(
    model: NeuralCrfModel, grads: GradientBundle, state: AdagradState
) -> None:
    """Adagrad step over exactly the parameters named in ``grads``.

    L2 shrinkage g + l2 * param is folded into the step here, so weights
    untouched by the batch (unused encoder rows, an idle head) neither
    decay nor advance their accumulators.
    """
    lr, l2, eps = state.learning_rate, state.l2, state.eps

    rows = grads.encoder_rows
    g = grads.encoder_grad + l2 * model.encoder[rows]
    state.encoder_acc[rows] += g * g
    model.encoder[rows] -= lr * g / (np.sqrt(state.encoder_acc[rows]) + eps)

    for domain, (d_emission, d_transition) in grads.heads.items():
        head = model.heads[domain]
        acc_e, acc_t = state.head_acc[domain]

        g = d_emission + l2 * head.emission
        acc_e += g * g
        head.emission -= lr * g / (np.sqrt(acc_e) + eps)

        mask = transition_mask(head.num_labels)
        g = d_transition[mask] + l2 * head.transition[mask]
        acc_t[mask] += g * g
        head.transition[mask] -= lr * g / (np.sqrt(acc_t[mask]) + eps)


def train_step(model: NeuralCrfModel, items, state: AdagradState) -> float:
    """One optimization step on a mixed batch; returns the mean NLL."""
    loss, grads = model.gradient_bundle(items)
    apply_gradients(model, grads, state)
    return loss


# -- checkpoint container ----------------------------------------------------
#
# Layout: magic, u64 header length, canonical JSON header (sorted keys, no
# whitespace), then the raw little-endian float64 bytes of each array in
# header order. Nothing time- or path-dependent is written, so identical
# model/optimizer state always produces identical bytes.


def _array_entries(model: NeuralCrfModel, state: AdagradState):
    entries = [("encoder", model.encoder), ("encoder_acc", state.encoder_acc)]
    for domain in (Domain.SOURCE, Domain.TARGET):
        tag = domain.name.lower()
        head = model.heads[domain]
        acc_e, acc_t = state.head_acc[domain]
        entries += [
            (f"{tag}_emission", head.emission),
            (f"{tag}_transition", head.transition),
            (f"{tag}_emission_acc", acc_e),
            (f"{tag}_transition_acc", acc_t),
        ]
    return entries


def save_checkpoint(path, model: NeuralCrfModel, state: AdagradState) -> None:
    entries = _array_entries(model, state)
    header = {
        "format": 1,
        "hash_dim": model.extractor.hash_dim,
        "hidden_dim": model.hidden_dim,
        "labels_source": list(model.heads[Domain.SOURCE].labels),
        "labels_target": list(model.heads[Domain.TARGET].labels),
        "learning_rate": state.learning_rate,
        "l2": state.l2,
        "eps": state.eps,
        "arrays": [[name, list(arr.shape)] for name, arr in entries],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, arr in entries:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[NeuralCrfModel, AdagradState]:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for name, shape in header["arrays"]:
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated checkpoint array {name!r}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(shape)

    heads = {}
    acc = {}
    for domain in (Domain.SOURCE, Domain.TARGET):
        tag = domain.name.lower()
        heads[domain] = TaskHead(
            labels=tuple(header[f"labels_{tag}"]),
            emission=arrays[f"{tag}_emission"],
            transition=arrays[f"{tag}_transition"],
        )
        acc[domain] = (arrays[f"{tag}_emission_acc"], arrays[f"{tag}_transition_acc"])
    model = NeuralCrfModel(
        FeatureExtractor(header["hash_dim"]), arrays["encoder"], heads
    )
    state = AdagradState(
        learning_rate=header["learning_rate"],
        l2=header["l2"],
        eps=header["eps"],
        encoder_acc=arrays["encoder_acc"],
        head_acc=acc,
    )
    return model, state
