"""Simulation kernel selection.

The compiled extension (depbandits._fast) and the pure-Python twin
implement the same run loops with identical arithmetic, so results are
bit-identical; the compiled one is just fast. Selection happens once at
import: the extension if it built, else the pure fallback. Set
DEPBANDITS_FORCE_PURE=1 to skip the extension deliberately.
"""

import os

if os.environ.get("DEPBANDITS_FORCE_PURE"):
    from . import pure as impl

    IMPLEMENTATION = "pure"
else:
    try:
        from depbandits import _fast as impl

        IMPLEMENTATION = "compiled"
    except ImportError:
        from . import pure as impl

        IMPLEMENTATION = "pure"

run_ucb_d_bernoulli = impl.run_ucb_d_bernoulli
run_ucb_d_gaussian = impl.run_ucb_d_gaussian
run_vanilla = impl.run_vanilla
