"""Named random substreams.

Every random draw in the package comes from
``Generator(PCG64(SeedSequence(seed, spawn_key=(stream, ...))))``:

==========  ===========================================
stream      used for
==========  ===========================================
0           dataset time stamps
1, i, j     measurement noise of dataset cell (i, j)
2           network weight initialisation
3           Fourier feature frequencies
4, epoch    collocation points of one epoch
==========  ===========================================
"""

import numpy as np

TIMES = 0
NOISE = 1
INIT = 2
FOURIER = 3
COLLOCATION = 4


def stream(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))
