"""Independent high-precision oracles for the frozen values in the core test suite.

Run with `python3 oracles.py`; every value printed here is pasted verbatim into
the Rust tests. Nothing in this file shares code with the Rust implementation.
"""

from mpmath import mp, mpf, digamma, loggamma, log, exp, tanh, polyroots, matrix, sqrt

mp.dps = 50


def digamma_series(x, terms=50):
    """psi(x) by shifting x above 60 and summing a 50-term asymptotic series."""
    x = mpf(x)
    acc = mpf(0)
    while x < 60:
        acc -= 1 / x
        x += 1
    # Bernoulli numbers B_2k via mpmath
    from mpmath import bernoulli

    s = log(x) - 1 / (2 * x)
    for k in range(1, terms + 1):
        s -= bernoulli(2 * k) / (2 * k * x ** (2 * k))
    return acc + s


def lda_hand_case():
    alpha = [mpf(1), mpf(1)]
    beta = [[mpf("0.7"), mpf("0.2"), mpf("0.1")], [mpf("0.1"), mpf("0.2"), mpf("0.7")]]
    words = [(0, 2)]
    k = 2
    total = sum(c for _, c in words)
    gamma = [a + mpf(total) / k for a in alpha]
    phi = None
    for _ in range(10000):
        e = [exp(digamma(g)) for g in gamma]
        phi = []
        for w, _ in words:
            row = [e[i] * beta[i][w] for i in range(k)]
            s = sum(row)
            phi.append([r / s for r in row])
        new = [alpha[i] + sum(c * phi[n][i] for n, (_, c) in enumerate(words)) for i in range(k)]
        delta = sum(abs(new[i] - gamma[i]) for i in range(k)) / k
        gamma = new
        if delta < mpf(10) ** -40:
            break
    g0 = sum(gamma)
    theta = [g / g0 for g in gamma]
    # evidence lower bound of the document at the fixed point
    a0 = sum(alpha)
    dig = [digamma(g) - digamma(g0) for g in gamma]
    elbo = loggamma(a0) - sum(loggamma(a) for a in alpha)
    elbo += sum((alpha[i] - 1) * dig[i] for i in range(k))
    for n, (w, c) in enumerate(words):
        for i in range(k):
            p = phi[n][i]
            elbo += c * p * (dig[i] + log(beta[i][w]) - log(p))
    elbo -= loggamma(g0) - sum(loggamma(g) for g in gamma)
    elbo -= sum((gamma[i] - 1) * dig[i] for i in range(k))
    return theta, gamma, elbo


def pca_toy():
    pts = [
        [mpf(2), mpf(0), mpf(1)],
        [mpf(0), mpf(1), mpf(3)],
        [mpf(4), mpf(2), mpf(0)],
        [mpf(1), mpf(5), mpf(2)],
        [mpf(3), mpf(3), mpf(4)],
    ]
    n = len(pts)
    mean = [sum(p[j] for p in pts) / n for j in range(3)]
    c = [[sum((p[a] - mean[a]) * (p[b] - mean[b]) for p in pts) / (n - 1) for b in range(3)] for a in range(3)]
    # characteristic polynomial -l^3 + tr l^2 - m2 l + det  => l^3 - tr l^2 + m2 l - det
    tr = c[0][0] + c[1][1] + c[2][2]
    m2 = (c[0][0] * c[1][1] - c[0][1] * c[1][0]) + (c[0][0] * c[2][2] - c[0][2] * c[2][0]) + (
        c[1][1] * c[2][2] - c[1][2] * c[2][1]
    )
    det = matrix(c).__class__(c)
    from mpmath import det as mdet

    d = mdet(matrix(c))
    roots = sorted([r.real for r in polyroots([1, -tr, m2, -d], maxsteps=200, extraprec=200)], reverse=True)
    comps = []
    for lam in roots:
        a = [[c[i][j] - (lam if i == j else 0) for j in range(3)] for i in range(3)]
        # eigenvector = largest cross product of two rows of (C - lam I)
        best = None
        for r1, r2 in [(0, 1), (0, 2), (1, 2)]:
            u, v = a[r1], a[r2]
            x = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
            nx = sqrt(sum(t * t for t in x))
            if best is None or nx > best[0]:
                best = (nx, x)
        x = [t / best[0] for t in best[1]]
        # sign convention: largest-magnitude entry positive (first on ties)
        j = max(range(3), key=lambda i: abs(x[i]))
        if x[j] < 0:
            x = [-t for t in x]
        comps.append(x)
    probe = [mpf(1), mpf(2), mpf(3)]
    proj = [sum(comp[j] * (probe[j] - mean[j]) for j in range(3)) for comp in comps]
    return roots, comps, proj


def mlp_hand():
    # V=2, K=2, two-layer: hidden 4
    w1 = [[mpf("0.5"), mpf("-0.25")], [mpf("-1.0"), mpf("0.75")], [mpf("0.2"), mpf("0.1")], [mpf("0.0"), mpf("1.5")]]
    b1 = [mpf("0.1"), mpf("0.0"), mpf("-0.3"), mpf("0.2")]
    w2 = [[mpf("1.0"), mpf("-0.5"), mpf("0.25"), mpf("0.0")], [mpf("-0.75"), mpf("0.5"), mpf("0.0"), mpf("1.0")]]
    b2 = [mpf("0.05"), mpf("-0.05")]
    x = [mpf(1), mpf(0)]
    h = [tanh(sum(w1[j][i] * x[i] for i in range(2)) + b1[j]) for j in range(4)]
    z = [sum(w2[k][j] * h[j] for j in range(4)) + b2[k] for k in range(2)]
    m = max(z)
    e = [exp(t - m) for t in z]
    s = sum(e)
    return [t / s for t in e]


def probe_hand():
    # V=2, K=1, two-layer: hidden 2
    w1 = [[mpf("0.3"), mpf("-1.2")], [mpf("2.0"), mpf("0.4")]]
    b1 = [mpf("-0.1"), mpf("0.25")]
    return [[tanh(w1[j][w] + b1[j]) for j in range(2)] for w in range(2)]


if __name__ == "__main__":
    mp.dps = 50
    print("digamma(1)   =", mp.nstr(digamma(1), 25))
    print("digamma(10)  =", mp.nstr(digamma_series(10), 25), " (mpmath:", mp.nstr(digamma(10), 25), ")")
    print("digamma(1e-3)=", mp.nstr(digamma_series(mpf("0.001")), 25))
    print("digamma(0.5) =", mp.nstr(digamma_series(mpf("0.5")), 25))
    print("digamma(123.456) =", mp.nstr(digamma_series(mpf("123.456")), 25))
    theta, gamma, elbo = lda_hand_case()
    print("lda theta  =", [mp.nstr(t, 20) for t in theta])
    print("lda gamma  =", [mp.nstr(t, 20) for t in gamma])
    print("lda elbo   =", mp.nstr(elbo, 20))
    roots, comps, proj = pca_toy()
    print("pca eig    =", [mp.nstr(r, 20) for r in roots])
    for c in comps:
        print("pca comp   =", [mp.nstr(t, 20) for t in c])
    print("pca proj   =", [mp.nstr(t, 20) for t in proj])
    print("mlp out    =", [mp.nstr(t, 20) for t in mlp_hand()])
    print("probe act  =", [[mp.nstr(t, 20) for t in r] for r in probe_hand()])
