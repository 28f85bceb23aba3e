"""Splittable seed derivation.

Each seeded component gets ``sha256("<master>:<component>")`` truncated to
32 bits, so adding or removing a component never shifts another
component's random stream.
"""

import hashlib

COMPONENTS = ("split", "resample", "imputer", "learner", "post_intervention")


def derive_seed(master: int, component: str) -> int:
    digest = hashlib.sha256(f"{int(master)}:{component}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def component_seeds(master: int) -> dict[str, int]:
    return {name: derive_seed(master, name) for name in COMPONENTS}
