"""The unit-disk dichotomy on the demo corpus.

Each marked run either converges to a fixed point of the base map away
from the punctures (realized) or falls into a repelling fixed puncture at
rate 1/|g'(p)| (obstructed). One base map can exhibit both outcomes under
different branch data.
"""

import math

from pullbacklab import (BranchDatum, RationalMap, classify_run, init_run,
                         run_until)

CORPUS = [
    ("chebyshev, principal branch", RationalMap([-2, 0, 1]),
     BranchDatum(0.0, math.sqrt(2)), ()),
    ("chebyshev, negative branch", RationalMap([-2, 0, 1]),
     BranchDatum(0.0, -math.sqrt(2)), ()),
    ("basilica, negative branch", RationalMap([-1, 0, 1]),
     BranchDatum(-0.6, -math.sqrt(0.4)), ()),
    ("squaring, b = 1/2", RationalMap([0, 0, 1]),
     BranchDatum(0.5, math.sqrt(0.5)), (1.0,)),
    ("squaring, b = 1/2 + i/4", RationalMap([0, 0, 1]),
     BranchDatum(0.5 + 0.25j, (0.5 + 0.25j) ** 0.5), (1.0,)),
]

for name, g, datum, extra in CORPUS:
    run = init_run(g, [datum], extra_punctures=extra)
    trace, status = run_until(run, max_iters=2000)
    cls = classify_run(trace, g, run.punctures)
    print("%-28s -> %s" % (name, cls))
    if cls.verdict == "obstructed":
        print("%29s rate %.4f = 1/|g'(%s)|"
              % ("", cls.rate_estimate, cls.puncture))
