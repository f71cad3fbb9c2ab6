"""Frozen implicit constants for the norm inequalities.

The derivative and composition inequalities come with unspecified constants;
these values were calibrated once against the fixed corpus in
``scripts/calibrate_norm_constants.py`` and then frozen with headroom.  The
property tests assert against them; they are not sharp and make no claim
beyond the scanned corpus.
"""

# Max observed ratio of sum_{|l|=p} |d^l g|_{alpha, L/2} to |g|_{alpha, L}
# over the corpus (p <= 2, alpha in [1, 2], L <= 0.3) was ~= 302; frozen at 2x.
DERIVATIVE_BOUND_CONSTANT = 650.0

# Radius contraction for which |f o Phi|_{alpha, C L} <= |f|_{alpha, L}
# held corpus-wide with near-identity displacements (the analytic-case value
# of the per-stage Gevrey radius ratio).
COMPOSITION_RADIUS_RATIO = 1.0 / 16.0
