# Checking each closed-form block update against a numeric minimiser
#
# Every ADMM block has a closed form.  The oracle suite draws small random
# problems, minimises each block objective with a general-purpose solver and
# reports the largest relative gap per block.

import sys

from tvgraph import oracles

passed, worst = oracles.run_suite(20, seed=5, tol=1e-6, stream=sys.stdout)
print("all blocks agree:", passed)
