"""Deterministic random number generation.

Every random draw in the library flows through :class:`Rng`, a
counter-style splitmix64 generator.  The update rule is the published
one: the state advances by the odd constant 0x9E3779B97F4A7C15 per draw
and each output is the finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

applied to the advanced state, all in 64-bit modular arithmetic.
Uniform doubles take the top 53 bits; standard normals come from the
Box-Muller transform.  Equal seeds therefore give byte-identical
sample sequences run to run (and across platforms up to libm rounding
of log/cos/sin).
"""

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z = z & _MASK
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


class Rng:
    """Seeded splitmix64 stream.

    Parameters
    ----------
    seed : int
        64-bit seed.  Values outside [0, 2**64) are reduced mod 2**64.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._state = self.seed

    def derive(self, *keys) -> "Rng":
        """Child generator keyed by ints or strings, independent of draw
        position.

        Used for per-iteration / per-epoch streams so that a run resumed
        from a checkpoint replays the exact same randomness.
        """
        h = self.seed
        for k in keys:
            if isinstance(k, str):
                for byte in k.encode("utf-8"):
                    h = _mix64(h ^ _mix64(byte + _GAMMA))
            else:
                h = _mix64(h ^ _mix64((int(k) & _MASK) + _GAMMA))
        return Rng(h)

    def next_u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs as a uint64 array."""
        idx = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + idx * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
            z = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK
        return z

    def uniform(self, shape) -> np.ndarray:
        """I.i.d. uniforms in [0, 1) with 53-bit resolution, float64."""
        shape = _as_shape(shape)
        n = int(np.prod(shape)) if shape else 1
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape)

    def normal(self, shape) -> np.ndarray:
        """I.i.d. standard normals via Box-Muller, float64."""
        shape = _as_shape(shape)
        n = int(np.prod(shape)) if shape else 1
        m = (n + 1) // 2
        # u1 in (0, 1] so log never sees zero
        u1 = ((self.next_u64(m) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (self.next_u64(m) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1).ravel()[:n]
        return z.reshape(shape)

    def integers(self, n: int, upper: int) -> np.ndarray:
        """``n`` integers uniform on [0, upper).

        Plain modulo reduction; the bias is < upper/2**64, negligible for
        the index ranges used here.
        """
        if upper <= 0:
            raise ValueError(f"upper must be positive, got {upper}")
        return (self.next_u64(n) % np.uint64(upper)).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic random permutation of range(n).

        Argsort of raw 64-bit keys with a stable sort, so the (vanishingly
        rare) key collision still orders deterministically.
        """
        return np.argsort(self.next_u64(n), kind="stable")


def _as_shape(shape):
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(s) for s in shape)
