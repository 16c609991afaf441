# Independent high-precision evaluation of the four-term Cole-Cole law used to
# freeze golden values in tests/dispersion.rs. Run: python3 cole_cole_golden.py
from mpmath import mp, mpf, mpc, pi, exp, log10, ceil

mp.dps = 40
EPS0 = mpf("8.8541878128e-12")
MEAN = [4, 0.02, 45, 7.96e-12, 0.1, 400, 15.92e-9, 0.15,
        2e5, 106.10e-6, 0.22, 4.5e7, 5.31e-3, 0]


def f(p, w):
    p = [mpf(repr(x)) for x in p]
    w = mpf(w)
    val = p[0] + p[1] / (mpc(0, 1) * w * EPS0)
    for n in range(4):
        de, tau, al = p[2 + 3 * n], p[3 + 3 * n], p[4 + 3 * n]
        x = (w * tau) ** (1 - al)
        z = x * exp(mpc(0, 1) * (1 - al) * pi / 2)
        val += de / (1 + z)
    return val


def show(label, w):
    v = f(MEAN, w)
    kappa = -(EPS0 * w * v).imag
    adm = mpc(kappa, w * EPS0 * v.real)
    print(label, "f =", mp.nstr(v.real, 17), mp.nstr(v.imag, 17))
    print(label, "eps =", mp.nstr(v.real, 17), "kappa =", mp.nstr(kappa, 17))
    print(label, "admittivity =", mp.nstr(adm.real, 17), mp.nstr(adm.imag, 17))


show("w=2pi*130", 2 * pi * 130)
show("w=2pi*1e3", 2 * pi * 1000)
show("w=2pi*5e5", 2 * pi * 5e5)
span = log10(mpf(5e5) / 130)
print("log10 span", mp.nstr(span, 17), "K", int(ceil(span / mpf("0.004"))))
