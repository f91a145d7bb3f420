"""Reference numbers for the frozen tests, from mpmath / fractions only.

Nothing from ``macrotypes`` is imported. Run with ``python tests/oracles/derive.py``.
"""
from fractions import Fraction
from math import comb

import mpmath as mp

mp.mp.dps = 40


def show(name, v):
    print(f"{name:40s} {mp.nstr(v, 17) if not isinstance(v, Fraction) else v}")


# multinomial / types
show("pmf N=4 R=(.9,.1) L=(3,1)", mp.mpf(4) * mp.mpf("0.9") ** 3 * mp.mpf("0.1"))
show("log class (2,2)", mp.log(6))
show("typical N=100 d=2 eps=.5", mp.e ** (-100 * (mp.mpf("0.25") - 2 * mp.log(101) / 100)))
show("gauss density s=.1 r=.1", (2 * mp.pi * mp.mpf("0.01")) ** -1 * mp.e ** mp.mpf("-0.5"))

# G(L, L') = int sqrt(q_L q_L') d ell for 1D Gaussian, sigma=.05, |L-L'|=.1
s, r = mp.mpf("0.05"), mp.mpf("0.1")
g = mp.quad(lambda x: mp.sqrt(mp.npdf(x, 0, s) * mp.npdf(x, r, s)), [-1, r / 2, 1])
show("G quad s=.05 r=.1", g)

# sigma = 0 fidelity, balanced: sum binom(N,k)^2 / 4^N
show("F0 N=4", Fraction(sum(comb(4, k) ** 2 for k in range(5)), 4**4))
for N in (100, 400, 3200):
    f = mp.mpf(sum(comb(N, k) ** 2 for k in range(N + 1))) / mp.mpf(4) ** N
    show(f"F0 N={N}", f)
    show(f"  stirling 2/sqrt(2piN)", 2 / mp.sqrt(2 * mp.pi * N))

# closed-form bound
y = mp.mpf(10**4) * mp.mpf("0.05") ** 2 * 2
show("bound N=1e4 s=.05", 1 - (1 + mp.log(2 * y)) / y)

# small-sigma series
show("2*0.01/sqrt(pi)", 2 * mp.mpf("0.01") / mp.sqrt(mp.pi))


# exact F, N=2000, sigma = 0.1/sqrt(N), full kernel on (x, 1-x): |L-L'|_2 = sqrt2 |k-k'|/N
def exact_F(N, sig, full=True):
    m = [mp.mpf(comb(N, k)) / mp.mpf(2) ** N for k in range(N + 1)]
    tot = mp.mpf(0)
    fac = 2 if full else 1
    for k in range(N + 1):
        for j in range(N + 1):
            dk = (k - j) / mp.mpf(N)
            tot += m[k] * m[j] * mp.e ** (-fac * dk * dk / (8 * sig * sig))
    return tot


mp.mp.dps = 20
show("F N=400 s=.1/sqrt(N) full", exact_F(400, mp.mpf("0.1") / mp.sqrt(400)))
show("erf(0.1)", mp.erf(mp.mpf("0.1")))
show("F N=200 s=.05 full", exact_F(200, mp.mpf("0.05")))
mp.mp.dps = 40

# threshold and tail
c = 5 * mp.sqrt(2 * mp.pi) / 8
sg = mp.mpf("0.05")
D = sg * mp.sqrt(2 * mp.log(1 / (c * sg)))
show("Delta*(0.05)", D)
show("tail bound", mp.e ** (-mp.sqrt(8) * D / (mp.sqrt(5 * mp.pi) * sg)))
N = 4000
tail = mp.mpf(0)
for k in range(N + 1):
    p = mp.mpf(comb(N, k)) / mp.mpf(2) ** N
    x = mp.mpf(k) / N
    tail += p * (mp.ncdf((mp.mpf("0.5") - D - x) / sg) + 1 - mp.ncdf((mp.mpf("0.5") + D - x) / sg))
show("tail exact N=4000", tail)


# conditional fidelity, N=4000, sigma=.05, ell = mu + Delta* (1D kernel)
def cond_F(N, mu, sig, ell):
    m = [mp.mpf(comb(N, k)) * mu**k * (1 - mu) ** (N - k) for k in range(N + 1)]
    q = [mp.npdf(ell, mp.mpf(k) / N, sig) for k in range(N + 1)]
    a = sum(mp.sqrt(qi) * mi for qi, mi in zip(q, m))
    return a * a / sum(qi * mi for qi, mi in zip(q, m))


mp.mp.dps = 30
show("condF N=4000 ell=mu+D*", cond_F(4000, mp.mpf("0.5"), sg, mp.mpf("0.5") + D))
show("condF N=4000 ell=mu", cond_F(4000, mp.mpf("0.5"), sg, mp.mpf("0.5")))
show("condF N=6 mu=.7 s=.15 ell=.4", cond_F(6, mp.mpf("0.7"), mp.mpf("0.15"), mp.mpf("0.4")))
mp.mp.dps = 40

# diagonal mixed state, sigma=0: sum m(L,R)^2
R = mp.mpf("0.8")
show("sum m^2 N=6 R=.8", sum((comb(6, k) * R**k * (1 - R) ** (6 - k)) ** 2 for k in range(7)))

# thermal qubit
z = mp.e ** mp.mpf("-0.5") + mp.e ** mp.mpf("0.5")
show("thermal p0", mp.e ** mp.mpf("-0.5") / z)

# Bayes with two diagonal candidates, N=100, z basis, sigma=.05, ell=.9 (1D kernel)
def dens(R, N, sig, ell):
    return sum(comb(N, k) * R**k * (1 - R) ** (N - k) * mp.npdf(ell, mp.mpf(k) / N, sig) for k in range(N + 1))


a, b = dens(mp.mpf("0.9"), 100, sg, mp.mpf("0.9")), dens(mp.mpf("0.5"), 100, sg, mp.mpf("0.9"))
show("bayes first weight", a / (a + b))
