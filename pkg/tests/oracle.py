"""Independent high-precision reference values built on mpmath."""

import mpmath as mp

mp.mp.dps = 40


def erfc(x):
    return mp.erfc(mp.mpf(x))


def Q(x):
    return mp.erfc(mp.mpf(x) / mp.sqrt(2)) / 2


def H(p):
    p = mp.mpf(p)
    if p == 0 or p == 1:
        return mp.mpf(0)
    return -(p * mp.log(p, 2) + (1 - p) * mp.log(1 - p, 2))


def mutual_information(q, p10, p01):
    """I(X;Y) in bits for P(X=1)=q and the two crossover probabilities."""
    q, p10, p01 = mp.mpf(q), mp.mpf(p10), mp.mpf(p01)
    p_one = q * (1 - p01) + (1 - q) * p10
    return H(p_one) - (1 - q) * H(p10) - q * H(p01)


def threshold_mi(q, snr_h, t):
    return mutual_information(q, Q(t), Q(mp.mpf(snr_h) - t))


def lower_bound(snr_hb, snr_he):
    """[H(eps_e) - H(eps_b)]^+ with eps = Q(snr h / 2)."""
    v = H(Q(mp.mpf(snr_he) / 2)) - H(Q(mp.mpf(snr_hb) / 2))
    return max(v, mp.mpf(0))


def lognormal_pdf(h, sigma2, mu=None):
    h, s2 = mp.mpf(h), mp.mpf(sigma2)
    mu = -s2 / 2 if mu is None else mp.mpf(mu)
    return mp.exp(-(mp.log(h) - mu) ** 2 / (2 * s2)) / (h * mp.sqrt(2 * mp.pi * s2))


def joint_lognormal_pdf(hb, he, sb2, se2, rho):
    hb, he, sb2, se2, rho = map(mp.mpf, (hb, he, sb2, se2, rho))
    sb, se = mp.sqrt(sb2), mp.sqrt(se2)
    a = (mp.log(hb) + sb2 / 2) / sb
    b = (mp.log(he) + se2 / 2) / se
    quad = (a * a - 2 * rho * a * b + b * b) / (2 * (1 - rho * rho))
    return mp.exp(-quad) / (2 * mp.pi * sb * se * mp.sqrt(1 - rho * rho) * hb * he)


def rytov(cn2, wavelength, length):
    k = 2 * mp.pi / mp.mpf(wavelength)
    return mp.mpf("1.23") * mp.mpf(cn2) * k ** (mp.mpf(7) / 6) * mp.mpf(length) ** (mp.mpf(11) / 6)
