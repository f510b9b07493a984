"""Large and moderate deviations seen through convergence scans.

For drift mu*sqrt(r), P(T >= z) decays like exp(-r mu^2 z / 2). The scans
below print the normalised log-probabilities, which stay finite long after
the probabilities themselves underflow, and their extrapolated limits.
"""

from lastzero import CrossingWindow, ModerateScale, RGrid, crossing_scan, ldp_scan, md_scan


def show(table, label, second=False):
    print(label)
    for row in table.active_rows():
        extra = f"  scaled_2={row.scaled_2:.6f}" if second else ""
        print(f"  r={row.r:<12.4g} log P={row.raw_log:<14.6g} scaled={row.scaled:.6f}{extra}")
    print(f"  extrapolated {table.extrapolated:.7f}   theory {table.rows[-1].theory}")
    if second:
        print(f"  extrapolated_2 {table.extrapolated_2:.7f}   theory_2 {table.rows[-1].theory_2:.7f}")
    print()


show(ldp_scan(1.0, 1.0, 0.4, RGrid(10, 1e4, 7)), "(1/r) log P(T >= 0.4), limit -0.2")

for beta in (0.25, 0.5, 0.75):
    table = md_scan(1.0, 1.0, 1.0, ModerateScale(beta), RGrid(10, 1e6, 7))
    show(table, f"r^-{beta} log P(r^(1-{beta}) T >= 1), limit -0.5")

show(crossing_scan(1.0, CrossingWindow(0.5, 1.0), RGrid(10, 1e4, 7)),
     "crossing in [0.5, 1]: (1/r) log Psi -> -0.25 and the prefactor -> sqrt(4/pi)", second=True)

far = ldp_scan(1.0, 1.0, 0.4, RGrid(1e4, 1e8, 3))
print("Far out: r = 1e8 gives log P =", far.rows[-1].raw_log, "(the probability is exp of that)")
