"""Independent counter-based random streams keyed by (seed, stream id).

Each stream is a Philox generator whose 128-bit key packs the 64-bit seed
and the stream id, so draws on one stream never shift another.
"""

from __future__ import annotations

import numpy as np

TRANSITION = 0
DISCOVERY = 1
REVEAL = 2
STREAM_NAMES = {TRANSITION: "transition", DISCOVERY: "discovery", REVEAL: "reveal"}

_SEED_MASK = (1 << 64) - 1


def stream(seed: int, stream_id: int) -> np.random.Generator:
    if not 0 <= seed <= _SEED_MASK:
        raise ValueError("seed must fit in 64 unsigned bits")
    return np.random.Generator(np.random.Philox(key=seed | (stream_id << 64)))


class Streams:
    def __init__(self, seed: int):
        self.seed = seed
        self.gens = {sid: stream(seed, sid) for sid in STREAM_NAMES}

    def uniform(self, stream_id: int) -> float:
        return float(self.gens[stream_id].random())

    def choice_index(self, stream_id: int, n: int) -> int:
        return int(self.gens[stream_id].integers(n))

    def state(self) -> dict:
        out = {}
        for sid, name in STREAM_NAMES.items():
            st = self.gens[sid].bit_generator.state
            out[name] = {
                "counter": [int(x) for x in st["state"]["counter"]],
                "key": [int(x) for x in st["state"]["key"]],
                "buffer": [int(x) for x in st["buffer"]],
                "buffer_pos": int(st["buffer_pos"]),
                "has_uint32": int(st["has_uint32"]),
                "uinteger": int(st["uinteger"]),
            }
        return out

    def set_state(self, data: dict):
        for sid, name in STREAM_NAMES.items():
            st = data[name]
            self.gens[sid].bit_generator.state = {
                "bit_generator": "Philox",
                "state": {
                    "counter": np.array(st["counter"], dtype=np.uint64),
                    "key": np.array(st["key"], dtype=np.uint64),
                },
                "buffer": np.array(st["buffer"], dtype=np.uint64),
                "buffer_pos": st["buffer_pos"],
                "has_uint32": st["has_uint32"],
                "uinteger": st["uinteger"],
            }
