"""Generates tests/oracles/channel_cases.inc: random channel inputs with outputs
evaluated at 50 significant digits by mpmath, independent of the C++ code.

Run with: python3 tests/oracles/channel_cases.py > tests/oracles/channel_cases.inc
"""
import random

from mpmath import mp, mpf, exp, log, log10, pi

mp.dps = 50
C = mpf(299792458)
A, B = mpf("4.88"), mpf("0.43")
ETA_LOS, ETA_NLOS = mpf("0.1"), mpf(21)
N0 = mpf("1e-13")
LAM = C / mpf("3.5e9")
N_CASES = 120


def p_los(theta):
    return 1 / (1 + A * exp(-B * (theta - A)))


def excess(theta):
    p = p_los(theta)
    return ETA_LOS * p + ETA_NLOS * (1 - p)


def pl(d, theta):
    return 20 * log10(4 * pi * d / LAM) + excess(theta)


def prx(p, d, theta):
    return p * mpf(10) ** (-pl(d, theta) / 10)


def s(x):
    return mp.nstr(x, 25, strip_zeros=False)


def f(x):
    return repr(float(x))


rng = random.Random(20240611)
print("// generated by channel_cases.py; do not edit")

print("struct AngleCase { double theta, p_los, excess; };")
print("inline const AngleCase kAngleCases[] = {")
for _ in range(N_CASES):
    t = rng.uniform(0.0, 90.0)
    print(f"    {{{f(t)}, {s(p_los(mpf(t)))}, {s(excess(mpf(t)))}}},")
print("};")

print("struct PathLossCase { double distance, theta, path_loss_db; };")
print("inline const PathLossCase kPathLossCases[] = {")
for _ in range(N_CASES):
    d, t = rng.uniform(1.0, 3000.0), rng.uniform(0.0, 90.0)
    print(f"    {{{f(d)}, {f(t)}, {s(pl(mpf(d), mpf(t)))}}},")
print("};")

print("struct SinrCase { double power[3], distance[3], theta[3]; int serving; double bw, sinr, throughput; };")
print("inline const SinrCase kSinrCases[] = {")
for _ in range(N_CASES):
    ps = [rng.uniform(0.01, 10.0) for _ in range(3)]
    ds = [rng.uniform(100.0, 2500.0) for _ in range(3)]
    ts = [rng.uniform(2.0, 90.0) for _ in range(3)]
    serving = rng.randrange(3)
    bw = 10 ** rng.uniform(4.0, 8.8)
    rx = [prx(mpf(p), mpf(d), mpf(t)) for p, d, t in zip(ps, ds, ts)]
    sig = rx[serving]
    intf = sum(rx) - sig
    snr = sig / (intf + N0 * mpf(bw))
    thr = mpf(bw) * log(1 + snr) / log(2)
    arr = lambda xs: "{" + ", ".join(f(x) for x in xs) + "}"
    print(f"    {{{arr(ps)}, {arr(ds)}, {arr(ts)}, {serving}, {f(bw)}, {s(snr)}, {s(thr)}}},")
print("};")

print("struct DelayCase { double distance, throughput, per, packet_bits, arrival; bool handover;")
print("                   double total, utilization, p_drop; };")
print("inline const DelayCase kDelayCases[] = {")
profiles = [(12000, 200), (256, 100), (128, 1)]
for _ in range(N_CASES):
    d = rng.uniform(100.0, 3000.0)
    thr = 10 ** rng.uniform(3.0, 8.0)
    per = rng.uniform(0.0, 1.0)
    L, lam = profiles[rng.randrange(3)]
    ho = rng.random() < 0.3
    T, Lm, lamm, pm = mpf(thr), mpf(L), mpf(lam), mpf(per)
    ceiling = mpf(10)
    trans = min(ceiling, Lm / T)
    mu = T / Lm
    rho = lamm / mu
    queue = min(ceiling, rho / (2 * mu * (1 - rho))) if rho < 1 else ceiling
    retx = trans * (pm + pm ** 2 + pm ** 3)
    total = mpf(d) / C + trans + retx + queue + (mpf("0.05") if ho else 0) + mpf("0.003")
    pdrop = min(mpf(1), rho ** 20) if rho < 1 else mpf(1)
    print(f"    {{{f(d)}, {f(thr)}, {f(per)}, {L}, {lam}, {'true' if ho else 'false'}, "
          f"{s(total)}, {s(rho)}, {s(pdrop)}}},")
print("};")

print("struct ReliabilityCase { double per, p_drop, reliability; };")
print("inline const ReliabilityCase kReliabilityCases[] = {")
for _ in range(N_CASES):
    per, pd = rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)
    print(f"    {{{f(per)}, {f(pd)}, {s((1 - mpf(per)) ** 4 * (1 - mpf(pd)))}}},")
print("};")
