#!/usr/bin/env python3
# Copyright 2026 The Shapalign Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Independent reference computations for the golden values frozen in tests/.

Plain-Python re-derivation: no code is shared with the C++ library. The
pseudo-random generator is re-implemented from its documented definition
(README, "Random numbers") so the fixtures double as a portability check.

Run: python3 tests/oracles/golden_values.py
"""

import itertools
import math

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)

    def below(self, n):
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next()
            if r >= threshold:
                return r % n

    def uniform(self):
        return (self.next() >> 11) * (1.0 / (1 << 53))

    def normal(self):
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def derive_seed(master, *stream):
    h = master & MASK
    for s in stream:
        h = mix64((h + GOLDEN * (s + 1)) & MASK)
    return h


def shuffle(items, rng):
    p = list(items)
    for i in range(len(p) - 1, 0, -1):
        j = rng.below(i + 1)
        p[i], p[j] = p[j], p[i]
    return p


# ---------------------------------------------------------------- game


def utility(sims, members, tau):
    if not members:
        return 0.0
    w = [math.exp(sims[i] / tau) for i in members]
    z = sum(w)
    return sum(wi / z * sims[i] for wi, i in zip(w, members))


def exact_subsets(sims, tau):
    k = len(sims)
    phi = []
    for i in range(k):
        others = [a for a in range(k) if a != i]
        total = 0.0
        for r in range(k):
            for s in itertools.combinations(others, r):
                total += (utility(sims, list(s) + [i], tau) - utility(sims, list(s), tau)) / math.comb(k - 1, r)
        phi.append(total / k)
    return phi


def cyclic_from(sims, tau, perm, stride):
    k = len(sims)
    acc = [0.0] * k
    passes = 0
    p = list(perm)
    s = stride
    while s > 0:
        for t in range(k):
            acc[p[t]] += utility(sims, p[: t + 1], tau) - utility(sims, p[:t], tau)
        passes += 1
        s_mod = s % k
        p = p[s_mod:] + p[:s_mod]
        s //= 2
    return [a / passes for a in acc]


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))


DIRECTIONS = {"c2t": 0, "t2c": 1, "c2v": 2, "v2c": 3}


def directional_loss(players, anchors, tau, stride, seed, direction):
    k = len(players)
    total = 0.0
    for j in range(k):
        sims = [cosine(anchors[j], players[i]) for i in range(k)]
        rng = SplitMix64(derive_seed(seed, j, DIRECTIONS[direction]))
        perm = shuffle(range(k), rng)
        phi = cyclic_from(sims, tau, perm, stride)
        total += phi[j] - sum(phi[i] for i in range(k) if i != j)
    return -total / k


# ---------------------------------------------------------------- fusion


def matmul(a, b):
    return [[sum(a[i][t] * b[t][j] for t in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def transpose(a):
    return [list(r) for r in zip(*a)]


def bridging(c):
    D = len(c[0])
    g = matmul(transpose(c), c)
    return [sum(g[d1][d2] for d1 in range(D)) / D / math.sqrt(D) for d2 in range(D)]


def softmax(v):
    m = max(v)
    e = [math.exp(x - m) for x in v]
    z = sum(e)
    return [x / z for x in e]


def attention(q, k, v):
    D = len(q[0])
    out = []
    for qr in q:
        a = softmax([sum(x * y for x, y in zip(qr, kr)) / math.sqrt(D) for kr in k])
        out.append([sum(a[t] * v[t][c] for t in range(len(v))) for c in range(D)])
    return out


def linear_rows(x, w, b):
    return [[sum(w[o][i] * r[i] for i in range(len(r))) + b[o] for o in range(len(w))] for r in x]


def gate_rows(x, bvec, w, b):
    return [[math.tanh(v) for v in row] for row in linear_rows([r + bvec for r in x], w, b)]


def mix(x, g, bvec):
    return [[g[r][c] * x[r][c] + (1 - g[r][c]) * bvec[c] for c in range(len(bvec))] for r in range(len(x))]


def fusion(ht, hc, hv, p):
    q = linear_rows(hv, *p["q"])
    k = linear_rows(ht, *p["k"])
    v = linear_rows(ht, *p["v"])
    c = linear_rows(hc, *p["c"])
    bvec = bridging(c)
    gq = gate_rows(q, bvec, *p["g1"])
    gk = gate_rows(k, bvec, *p["g2"])
    return attention(mix(q, gq, bvec), mix(k, gk, bvec), v)


def main():
    print("# utility sims=[0.8,0.2] tau=1 S={1,2}")
    print(repr(utility([0.8, 0.2], [0, 1], 1.0)))

    print("# exact shapley sims=[0.9,0.5,0.1] tau=1")
    print([repr(x) for x in exact_subsets([0.9, 0.5, 0.1], 1.0)])

    print("# exact shapley sims=[0.6,0.4] tau=1 (permutation average)")
    u12 = utility([0.6, 0.4], [0, 1], 1.0)
    print([repr((0.6 + (u12 - 0.4)) / 2), repr(((u12 - 0.6) + 0.4) / 2)])

    print("# cyclic sims=[0.6,0.4] perm=(1,2) stride=1")
    print([repr(x) for x in cyclic_from([0.6, 0.4], 1.0, [0, 1], 1)])

    print("# first draws of SplitMix64(seed=1234567)")
    rng = SplitMix64(1234567)
    print([hex(rng.next()) for _ in range(3)])
    print("# derive_seed(42, 3, 1)")
    print(hex(derive_seed(42, 3, 1)))
    print("# shuffle(range(8)) under SplitMix64(2024)")
    print(shuffle(range(8), SplitMix64(2024)))

    print("# cyclic sims=[0.3,-0.2,0.8,0.5,0.1] tau=0.5 stride=2 seed=99")
    k = 5
    sims = [0.3, -0.2, 0.8, 0.5, 0.1]
    perm = shuffle(range(k), SplitMix64(99))
    print(perm, [repr(x) for x in cyclic_from(sims, 0.5, perm, 2)])

    contexts = [[1, 0, 0], [0, 1, 0.5], [0.3, 0.2, 1]]
    texts = [[0.9, 0.1, 0], [0.2, 1, 0.3], [0, 0.4, 1]]
    images = [[1, 0.2, 0.1], [0.1, 0.8, 0.6], [0.5, 0, 1]]
    tau, stride, seed = 1.0, 1, 42
    c2t = directional_loss(contexts, texts, tau, stride, seed, "c2t")
    t2c = directional_loss(texts, contexts, tau, stride, seed, "t2c")
    c2v = directional_loss(contexts, images, tau, stride, seed, "c2v")
    v2c = directional_loss(images, contexts, tau, stride, seed, "v2c")
    print("# loss fixture k=3 tau=1 stride=1 seed=42: c2t t2c c2v v2c semantic modality")
    print([repr(x) for x in (c2t, t2c, c2v, v2c, (c2t + t2c) / 2, (c2v + v2c) / 2)])

    print("# bridging term 3x4")
    C = [[0.5, -1, 2, 0.25], [1.5, 0.3, -0.7, 1], [0, 2, 1, -1]]
    print([repr(x) for x in bridging(C)])

    print("# cross attention 2x2")
    print([[repr(x) for x in r] for r in attention([[1, 0], [0.5, -1]], [[0.2, 0.4], [1, -0.5]], [[1, 2], [3, -1]])])

    print("# gates 1x2")
    W1 = [[0.1, 0.2, 0.3, 0.4], [-0.5, 0.1, 0, 0.2]]
    W2 = [[0.3, -0.1, 0.2, 0], [0.1, 0.1, 0.1, 0.1]]
    B = [0.4, 0.6]
    print([repr(x) for x in gate_rows([[0.3, -0.2]], B, W1, [0.05, -0.1])[0]],
          [repr(x) for x in gate_rows([[0.1, 0.5]], B, W2, [0.0, 0.2])[0]])

    print("# fusion forward fixture")
    ht = [[1.0, -0.5], [0.2, 0.8]]
    hc = [[0.3, 0.1], [-0.4, 0.9]]
    hv = [[0.5, -1.0, 0.25], [1.5, 0.0, -0.5]]
    p = {
        "q": ([[0.2, -0.1, 0.4], [0.3, 0.5, -0.2]], [0.1, -0.05]),
        "k": ([[0.6, -0.3], [0.1, 0.7]], [0.0, 0.2]),
        "v": ([[1.0, 0.5], [-0.5, 0.25]], [0.1, 0.0]),
        "c": ([[0.8, 0.1], [-0.2, 0.9]], [0.05, 0.1]),
        "g1": ([[0.1, 0.2, 0.3, 0.4], [-0.5, 0.1, 0.0, 0.2]], [0.05, -0.1]),
        "g2": ([[0.3, -0.1, 0.2, 0.0], [0.1, 0.1, 0.1, 0.1]], [0.0, 0.2]),
    }
    print([[repr(x) for x in r] for r in fusion(ht, hc, hv, p)])

    print("# refine P_t=[0.7,0.3] P_tsp=[0.4,0.6] lambda=1")
    pt, ptsp = [0.7, 0.3], [0.4, 0.6]
    print([repr(x) for x in softmax([b + 1.0 * math.log(b / a) for a, b in zip(pt, ptsp)])])

    print("# pair features n=2 fixture (hidden tanh, width 2)")
    M = [[1.0, -1.0], [0.5, 2.0]]
    W1 = [[0.1, -0.2, 0.3, 0.0, 0.5, -0.1], [0.2, 0.1, -0.3, 0.4, 0.0, 0.2]]
    b1 = [0.01, -0.02]
    W2 = [[1.0, -0.5], [0.3, 0.8]]
    b2 = [0.1, 0.0]
    for i in range(2):
        for j in range(2):
            x = M[i] + M[j] + [a - b for a, b in zip(M[i], M[j])]
            h = [math.tanh(sum(w * v for w, v in zip(row, x)) + bb) for row, bb in zip(W1, b1)]
            out = [sum(w * v for w, v in zip(row, h)) + bb for row, bb in zip(W2, b2)]
            print(i, j, [repr(v) for v in out])

    print("# word-pair loss n=2, gold [0,1,2,1]")
    final = [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.25, 0.25, 0.5], [0.6, 0.3, 0.1]]
    print(repr(-sum(math.log(row[y]) for row, y in zip(final, [0, 1, 2, 1]))))

    print("# synth k=16 d=32 sigma=0.8 seed=7: mean diagonal sim(context, text)")
    rng = SplitMix64(7)
    kk, d, sigma = 16, 32, 0.8

    def normalize(v):
        n = math.sqrt(sum(x * x for x in v))
        return [x / n for x in v]

    lat = [normalize([rng.normal() for _ in range(d)]) for _ in range(kk)]
    txt = [normalize([lat[i][c] + sigma * rng.normal() for c in range(d)]) for i in range(kk)]
    print(repr(sum(cosine(lat[i], txt[i]) for i in range(kk)) / kk))
    hits = 0
    for i in range(kk):
        s = [cosine(lat[i], txt[j]) for j in range(kk)]
        hits += int(max(range(kk), key=lambda j: (s[j], -j)) == i)
    print("# initial context->text top-1 accuracy", hits / kk)


if __name__ == "__main__":
    main()
