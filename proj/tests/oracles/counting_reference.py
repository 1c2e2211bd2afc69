#!/usr/bin/env python3
"""High-precision reference values for the photon-counting model, computed
with mpmath at 60 significant digits. Used to freeze expected values into
the C++ test suite.

The count distribution for an emitter that starts at rate r_i, may switch
irreversibly to rate r_f at a random Exp(r_l) time, over a window t:

  p_total(n) = exp(-r_l t) * pois(n; r_i t) + p_switch(n)
  p_switch(n) = integral_0^t r_l exp(-r_f t) exp(-(r_i - r_f + r_l) tau)
                   * (r_i tau + r_f (t - tau))^n / n!  dtau

evaluated here by mpmath.quad on the analytic integrand.
"""
import mpmath as mp

mp.mp.dps = 60

def pois(n, mean):
    return mp.exp(-mean) * mean**n / mp.factorial(n)

def p_switch(n, t, ri, rf, rl):
    def f(tau):
        m = ri * tau + rf * (t - tau)
        return rl * mp.exp(-rf * t - (ri - rf + rl) * tau) * m**n / mp.factorial(n)
    return mp.quad(f, [0, t])

def p_total(n, t, ri, rf, rl):
    return mp.exp(-rl * t) * pois(n, ri * t) + p_switch(n, t, ri, rf, rl)

def emit(name, value):
    print(f"inline constexpr double {name} = {mp.nstr(value, 18)};")

# Poisson pmf at n=3, t=100 us, r=40 kcps
emit("kPois3_t100us_r40k", pois(3, mp.mpf('40e3') * mp.mpf('100e-6')))

# switch-term pmf at n=2, t=160 us, rates (40.45k, 1.05k, 1.31k) cps
emit("kSwitch2_160us", p_switch(2, mp.mpf('160e-6'), mp.mpf('40.45e3'), mp.mpf('1.05e3'), mp.mpf('1.31e3')))

# total pmf n=0..5 for the same rate triple at t=160 us
for n in range(6):
    emit(f"kTotal{n}_160us", p_total(n, mp.mpf('160e-6'), mp.mpf('40.45e3'), mp.mpf('1.05e3'), mp.mpf('1.31e3')))

# below-threshold probability at t=200 us, threshold 1:
# detected bright rate = 39.4k + 1.05k, background 1.05k, leak 1.31k
emit("kBelow1_200us", p_total(0, mp.mpf('200e-6'), mp.mpf('40.45e3'), mp.mpf('1.05e3'), mp.mpf('1.31e3')))

# below-threshold probability, threshold 2, t = 160 us, background 0.7k
v = p_total(0, mp.mpf('160e-6'), mp.mpf('40.1e3'), mp.mpf('0.7e3'), mp.mpf('1.31e3')) + \
    p_total(1, mp.mpf('160e-6'), mp.mpf('40.1e3'), mp.mpf('0.7e3'), mp.mpf('1.31e3'))
emit("kBelow2_160us_bg07", v)

# Poisson tail P(N>=2) at mean 0.112
tail = 1 - pois(0, mp.mpf('0.112')) - pois(1, mp.mpf('0.112'))
emit("kPoisTail2_mean0p112", tail)
