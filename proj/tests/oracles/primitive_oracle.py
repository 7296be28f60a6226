"""Independent high-precision oracle for the F0 / Finf primitives.

F0(s)   = int_0^s sqrt(t) (1/2 + sin(1/t)) dt
        = s^{3/2}/3 + int_{1/s}^inf x^{-5/2} sin(x) dx        (t = 1/x)
Finf(s) = int_0^s sqrt(t) (1/2 + sin t) dt

Values printed here are frozen into tests/test_function_model.cpp.
"""
import mpmath as mp

mp.mp.dps = 30


def f0_primitive(s):
    s = mp.mpf(s)
    big_x = 1 / s
    g = lambda x: x ** mp.mpf(-2.5) * mp.sin(x)
    n0 = int(mp.ceil(big_x / mp.pi))
    # head up to the first zero of sin, then an alternating sum over half periods
    head = mp.quad(g, [big_x, n0 * mp.pi])
    rest = mp.nsum(lambda n: mp.quad(g, [n * mp.pi, (n + 1) * mp.pi]), [n0, mp.inf])
    return s ** mp.mpf(1.5) / 3 + head + rest


def finf_primitive(s):
    s = mp.mpf(s)
    pts = [mp.mpf(0)] + [mp.mpf(k) for k in range(1, int(s) + 1)] + [s]
    pts = sorted(set(pts))
    return mp.quad(lambda t: mp.sqrt(t) * (mp.mpf(1) / 2 + mp.sin(t)), pts)


if __name__ == "__main__":
    for s in ["0.25", "0.0001", "0.001", "0.01", "0.02", "0.05", "0.1", "0.3", "1", "2.5"]:
        print("F0", s, mp.nstr(f0_primitive(s), 20))
    for s in ["0.5", "1", "3.7", "10", "25.5", "60"]:
        print("Finf", s, mp.nstr(finf_primitive(s), 20))
