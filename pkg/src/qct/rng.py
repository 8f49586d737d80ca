"""Counter-style random substreams derived from one master seed.

Every draw is keyed by (seed, stream, block, chunk).  Trajectory i lives in
column i % BLOCK of block i // BLOCK, and step k of a run lies in chunk
k // CHUNK.  Blocks always draw their full width, so the normals seen by a
trajectory depend only on (seed, i, k): never on the ensemble size, the
worker count or how the run is cut into segments.
"""

import numpy as np

STREAMS = {"ensemble": 0, "lyapunov": 1, "hyperbolic": 2, "bootstrap": 3}
BLOCK = 1024
CHUNK = 256


def generator(seed, stream, *key):
    """A Philox generator for one named substream and integer key path."""
    sid = STREAMS[stream] if isinstance(stream, str) else int(stream)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(sid, *map(int, key)))
    return np.random.Generator(np.random.Philox(ss))


def block_normals(seed, stream, block, step0, nsteps, width=BLOCK):
    """Standard normals for steps [step0, step0 + nsteps) of one block.

    Returns an array of shape (nsteps, width) whose row r belongs to absolute
    step step0 + r.  Chunks are generated whole and sliced, so any cut of the
    step range gives the same numbers.
    """
    out = np.empty((nsteps, width))
    k = step0
    end = step0 + nsteps
    while k < end:
        c = k // CHUNK
        lo = k - c * CHUNK
        hi = min(CHUNK, end - c * CHUNK)
        z = generator(seed, stream, block, c).standard_normal((CHUNK, BLOCK))
        out[k - step0:k - step0 + hi - lo] = z[lo:hi, :width]
        k = c * CHUNK + hi
    return out


def n_blocks(n):
    return (n + BLOCK - 1) // BLOCK
