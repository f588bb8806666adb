"""Golden values for the acceptance tests, computed symbolically with sympy.

Writes crates/core/tests/golden/oracle.json. Sample points are drawn with
the same generator as the Rust crate (SplitMix64-seeded xoshiro256**), and
the points themselves are stored so the table is self-contained.

    python3 tools/oracle.py
"""

import json
import math
import pathlib

import sympy as sp

MASK = (1 << 64) - 1


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK


class Xoshiro256StarStar:
    def __init__(self, seed):
        sm = seed & MASK
        state = []
        for _ in range(4):
            sm = (sm + 0x9E3779B97F4A7C15) & MASK
            z = sm
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
            state.append(z ^ (z >> 31))
        self.s = state

    def next_u64(self):
        s = self.s
        result = (rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def unit(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def random_points(domain, count, seed):
    rng = Xoshiro256StarStar(seed)
    return [[lo + rng.unit() * (hi - lo) for lo, hi in domain] for _ in range(count)]


def christoffel(g, x):
    n = len(x)
    gi = g.inv()
    return [[[sp.simplify(sum(gi[l, s] * (sp.diff(g[s, m], x[nn]) + sp.diff(g[s, nn], x[m]) - sp.diff(g[m, nn], x[s]))
                              for s in range(n)) / 2)
              for nn in range(n)] for m in range(n)] for l in range(n)]


def riemann_up(g, x):
    """R^k_{lmn} = d_m G^k_{nl} - d_n G^k_{ml} + G^k_{mp} G^p_{nl} - G^k_{np} G^p_{ml}."""
    n = len(x)
    gam = christoffel(g, x)
    r = {}
    for k in range(n):
        for l in range(n):
            for m in range(n):
                for nn in range(n):
                    v = sp.diff(gam[k][nn][l], x[m]) - sp.diff(gam[k][m][l], x[nn])
                    v += sum(gam[k][m][p] * gam[p][nn][l] - gam[k][nn][p] * gam[p][m][l] for p in range(n))
                    r[k, l, m, nn] = sp.simplify(v)
    return r


def kretschmann(g, x):
    n = len(x)
    gi = g.inv()
    up = riemann_up(g, x)
    down = {(a, b, c, d): sum(g[a, k] * up[k, b, c, d] for k in range(n))
            for a in range(n) for b in range(n) for c in range(n) for d in range(n)}
    total = 0
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    if down[a, b, c, d] == 0:
                        continue
                    total += down[a, b, c, d] ** 2 * gi[a, a] * gi[b, b] * gi[c, c] * gi[d, d]
    return sp.simplify(total)


def schwarzschild_table(count=20, seed=1, mass=1.0):
    r, th, ph, t, m = sp.symbols("r theta phi t M", positive=True)
    x = [r, th, ph, t]
    h = 1 - 2 * m / r
    g = sp.diag(1 / h, r**2, r**2 * sp.sin(th) ** 2, -h)
    k = kretschmann(g, x)
    assert sp.simplify(k - 48 * m**2 / r**6) == 0, k
    domain = [(2.5 * mass, 10.0 * mass), (0.3, math.pi - 0.3), (0.0, 2.0 * math.pi), (0.0, 1.0)]
    rows = []
    for p in random_points(domain, count, seed):
        value = k.subs({m: sp.Float(mass, 40), r: sp.Float(p[0], 40)}).evalf(30)
        rows.append({"point": p, "kretschmann": float(value)})
    return {"M": mass, "seed": seed, "symbolic": str(k), "rows": rows}


def kerr_pontryagin():
    """P = (1/2) *R^ab_cd R_ab^cd for Kerr, from the closed form of *R R."""
    r, th = sp.symbols("r theta", positive=True)
    m, a = sp.Rational(1), sp.Rational(3, 5)
    c = sp.cos(th)
    s2 = r**2 + a**2 * c**2
    closed = 96 * m**2 * a * r * c * (3 * r**2 - a**2 * c**2) * (r**2 - 3 * a**2 * c**2) / s2**6
    value = (closed / 2).subs({r: 5, th: sp.pi / 4}).evalf(30)
    return {"M": 1.0, "a": 0.6, "point": [5.0, math.pi / 4, 0.0, 0.0], "p": float(value)}


def main():
    out = {
        "schwarzschild_kretschmann": schwarzschild_table(),
        "kerr_pontryagin": kerr_pontryagin(),
    }
    path = pathlib.Path(__file__).resolve().parent.parent / "crates/core/tests/golden/oracle.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
