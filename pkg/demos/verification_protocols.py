"""Compare the three ways of checking that teleportation worked.

full     - apply the switched correction, then test photon 2 against a
           polarizer aligned with the message. Every kept trial passes.
merged   - skip the correction; the checking station picks one of the four
           uncorrected branch states at random as its polarizer setting.
           Matched setting/click cells pass with certainty, mismatched
           cells pass at the overlap of the two branch states.
direct   - same idea without the polarization decoder, testing the bare
           direction amplitudes of photon 2.

The merged and direct expected tables are identical: the decoder is a
relabeling, not a filter. Loss only thins the sample.

Run it:  python3 demos/verification_protocols.py
"""

import numpy as np

from teleoptics import (
    JonesVector,
    overlap_table,
    overlap_table_direct,
    verify_direct,
    verify_full,
    verify_nonlocal,
)

message = JonesVector.from_bloch(1.1, 0.4)
np.set_printoptions(precision=4, suppress=True)

print("expected pass-rate table (rows: station setting, cols: click):")
expected = overlap_table(message)
print(expected)

gap = np.max(np.abs(expected - overlap_table_direct(message)))
print(f"\nmerged vs direct expected tables differ by at most {gap:.2e}")

# ---- full protocol --------------------------------------------------------

report = verify_full(message, 20000, 0.9, 3)
print(f"\nfull protocol, 20000 trials at efficiency 0.9:")
print(f"  lost {report.n_lost}, kept {report.n_trials - report.n_lost}")
print(f"  matched pass rate: {report.matched_pass_rate()}")
assert report.matched_pass_rate() == 1.0

# ---- merged (uncorrected, four-setting) protocol ---------------------------

report = verify_nonlocal(message, 40000, 1.0, 4)
print("\nmerged protocol, empirical pass-rate table:")
print(report.empirical_table())
print("matched cells still pass with certainty:",
      report.matched_pass_rate())

# ---- direct (rail-basis) protocol ------------------------------------------

report = verify_direct(message, 40000, 1.0, 5)
print("\ndirect protocol, empirical pass-rate table:")
print(report.empirical_table())

largest = np.nanmax(np.abs(report.empirical_table() - expected))
print(f"largest deviation from the expected table: {largest:.4f} "
      "(shrinks like 1/sqrt(n))")
