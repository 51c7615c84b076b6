"""Independent reference implementations used to cross-check the package.

Everything here is written the slow, obvious way (explicit loops, per-query
table scans, recursion) and shares no code with the implementations under
test. Only suitable for tiny inputs.
"""

from __future__ import annotations

import functools
import math
from collections import Counter

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class KNOracle:
    """Interpolated modified Kneser-Ney by direct summation.

    The backoff mass of a context is computed as the per-gram sum of
    discounts rather than via bucket counts, so the two implementations
    agree only if both derivations are right.
    """

    def __init__(self, sentences, order, fallback=0.75):
        self.order = order
        self.vocab = sorted({w for s in sentences for w in s} | {BOS, EOS, UNK})

        window = {m: Counter() for m in range(1, order + 1)}
        for s in sentences:
            seq = [BOS] * (order - 1) + list(s) + [EOS]
            for m in range(1, order + 1):
                for i in range(len(seq) - m + 1):
                    window[m][tuple(seq[i : i + m])] += 1

        self.eff = {order: Counter(window[order])}
        for m in range(order - 1, 0, -1):
            cont = Counter()
            for gram in window[m + 1]:
                cont[gram[1:]] += 1
            self.eff[m] = cont

        self.disc = {}
        for m in range(1, order + 1):
            coc = Counter(self.eff[m].values())
            n1, n2, n3, n4 = coc[1], coc[2], coc[3], coc[4]
            if min(n1, n2, n3, n4) == 0:
                self.disc[m] = (fallback, fallback, fallback)
            else:
                y = n1 / (n1 + 2.0 * n2)
                self.disc[m] = tuple(
                    max(0.0, v)
                    for v in (
                        1.0 - 2.0 * y * n2 / n1,
                        2.0 - 3.0 * y * n3 / n2,
                        3.0 - 4.0 * y * n4 / n3,
                    )
                )

    def _discount_of(self, m, count):
        d1, d2, d3 = self.disc[m]
        return d1 if count == 1 else d2 if count == 2 else d3

    def _interp(self, ctx, w):
        m = len(ctx) + 1
        lower = 1.0 / len(self.vocab) if m == 1 else self._interp(ctx[1:], w)
        members = {g: c for g, c in self.eff[m].items() if g[:-1] == ctx}
        total = sum(members.values())
        if total == 0:
            return lower
        c = members.get(ctx + (w,), 0)
        seen = (c - self._discount_of(m, c)) / total if c > 0 else 0.0
        gamma = sum(self._discount_of(m, cc) for cc in members.values()) / total
        return max(seen, 0.0) + gamma * lower

    def prob(self, word, context=()):
        w = word if word in self.vocab else UNK
        ctx = tuple(t if t in self.vocab else UNK for t in context)
        if self.order > 1:
            ctx = ctx[len(ctx) - min(len(ctx), self.order - 1) :]
        else:
            ctx = ()
        return self._interp(ctx, w)


def oracle_perplexity(model, sentences):
    order = model.order
    logs = []
    for s in sentences:
        seq = [BOS] * (order - 1) + list(s) + [EOS]
        for i in range(order - 1, len(seq)):
            ctx = tuple(seq[max(0, i - order + 1) : i])
            logs.append(math.log(model.prob(seq[i], ctx)))
    return math.exp(-sum(logs) / len(logs))


def dft_power_oracle(frame):
    """|DFT|^2 for real input, naive O(n^2), bins 0..n/2."""
    n = len(frame)
    out = []
    for k in range(n // 2 + 1):
        re = 0.0
        im = 0.0
        for t in range(n):
            angle = -2.0 * math.pi * k * t / n
            re += frame[t] * math.cos(angle)
            im += frame[t] * math.sin(angle)
        out.append(re * re + im * im)
    return out


def hamming_oracle(n):
    return [0.54 - 0.46 * math.cos(2.0 * math.pi * i / (n - 1)) for i in range(n)]


def mel_energy_oracle(power_bins, n_filters, sample_rate, fft_size):
    """Triangular mel filter energies from first principles."""

    def to_mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def from_mel(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    top = to_mel(sample_rate / 2.0)
    points = [from_mel(top * i / (n_filters + 1)) for i in range(n_filters + 2)]
    energies = []
    for f in range(n_filters):
        lo, mid, hi = points[f], points[f + 1], points[f + 2]
        acc = 0.0
        for k, p in enumerate(power_bins):
            freq = k * sample_rate / fft_size
            if lo < freq < hi:
                weight = (freq - lo) / (mid - lo) if freq <= mid else (hi - freq) / (hi - mid)
                acc += weight * p
            elif freq == mid:
                acc += p
        energies.append(acc)
    return energies


def dct2_ortho_oracle(values):
    n = len(values)
    out = []
    for k in range(n):
        s = 0.0
        for i in range(n):
            s += values[i] * math.cos(math.pi * (i + 0.5) * k / n)
        scale = math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n)
        out.append(scale * s)
    return out


def edit_distance_oracle(ref, hyp):
    """Plain recursive minimum edit distance with unit costs."""
    ref = tuple(ref)
    hyp = tuple(hyp)

    @functools.lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            d(i - 1, j - 1) + (0 if ref[i - 1] == hyp[j - 1] else 1),
            d(i - 1, j) + 1,
            d(i, j - 1) + 1,
        )

    return d(len(ref), len(hyp))
