"""Skeleton topology: joint tree, limb groups, and channel ordering.

The topology fixes everything structural that the rest of the toolkit
depends on: the ordered joint list, the parent tree rooted at the hips,
the limb each joint belongs to, and the canonical channel order
``JOINT.x, JOINT.y, JOINT.z`` per joint. Mirror partners (used for
inter-limb synergy terms) are derived by pairing joints of opposed limbs
at equal chain depth; non-serial partners default to the joints exactly
two steps away along the kinematic chain and can be overridden per joint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

AXES = ("x", "y", "z")

#: Limb names that mirror each other.
_MIRROR_LIMBS = {
    "left-arm": "right-arm",
    "right-arm": "left-arm",
    "left-leg": "right-leg",
    "right-leg": "left-leg",
}


class TopologyError(ValueError):
    """Raised when a skeleton description is structurally invalid."""


@dataclass(frozen=True)
class SkeletonTopology:
    """Joint graph with limb groupings and canonical channel naming.

    Attributes
    ----------
    joints : tuple[str, ...]
        Ordered joint identifiers; channel order is joint-major.
    parent : dict[str, str | None]
        Parent of each joint; exactly one joint (the root) has ``None``.
    limb_of : dict[str, str]
        Limb group of each joint (``spine``, ``left-arm``, ``right-arm``,
        ``left-leg``, ``right-leg``).
    nonserial : dict[str, tuple[str, ...]]
        Non-serial partner joints per joint. Defaults to the two-hop
        chain neighbours (grandparent and grandchildren).
    """

    joints: tuple[str, ...]
    parent: dict[str, str | None]
    limb_of: dict[str, str]
    nonserial: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        joints = tuple(self.joints)
        object.__setattr__(self, "joints", joints)
        if len(set(joints)) != len(joints):
            raise TopologyError("duplicate joint names")
        roots = [j for j in joints if self.parent.get(j) is None]
        if set(self.parent) != set(joints) or len(roots) != 1:
            raise TopologyError("parent map must cover every joint with a single root")
        for j, p in self.parent.items():
            if p is not None and p not in self.parent:
                raise TopologyError(f"unknown parent {p!r} of joint {j!r}")
        # Walking to the root must terminate for every joint (single tree).
        for j in joints:
            seen = set()
            cur = j
            while cur is not None:
                if cur in seen:
                    raise TopologyError(f"parent cycle through joint {j!r}")
                seen.add(cur)
                cur = self.parent[cur]
        if set(self.limb_of) != set(joints):
            raise TopologyError("every joint must belong to exactly one limb group")
        ns = {j: tuple(v) for j, v in self.nonserial.items()}
        for j, partners in ns.items():
            if j not in self.parent:
                raise TopologyError(f"nonserial override for unknown joint {j!r}")
            for p in partners:
                if p not in self.parent:
                    raise TopologyError(f"unknown nonserial partner {p!r} of {j!r}")
        if not ns:
            ns = {j: self._two_hop(j) for j in joints}
        else:
            ns = {j: ns.get(j, self._two_hop(j)) for j in joints}
        object.__setattr__(self, "nonserial", ns)

    # -- structure queries --------------------------------------------------

    @property
    def root(self) -> str:
        return next(j for j in self.joints if self.parent[j] is None)

    @property
    def n_channels(self) -> int:
        return len(self.joints) * len(AXES)

    @property
    def channel_names(self) -> tuple[str, ...]:
        return tuple(f"{j}.{a}" for j in self.joints for a in AXES)

    def channel_index(self, name: str) -> int:
        try:
            return self.channel_names.index(name)
        except ValueError:
            raise TopologyError(f"unknown channel {name!r}") from None

    def joint_of(self, channel: str) -> str:
        joint, _, axis = channel.rpartition(".")
        if axis not in AXES or joint not in self.parent:
            raise TopologyError(f"unknown channel {channel!r}")
        return joint

    def children(self, joint: str) -> tuple[str, ...]:
        return tuple(j for j in self.joints if self.parent[j] == joint)

    def depth(self, joint: str) -> int:
        d = 0
        cur = self.parent[joint]
        while cur is not None:
            d += 1
            cur = self.parent[cur]
        return d

    def _two_hop(self, joint: str) -> tuple[str, ...]:
        partners = []
        p = self.parent[joint]
        if p is not None and self.parent[p] is not None:
            partners.append(self.parent[p])
        for c in self.children(joint):
            partners.extend(self.children(c))
        return tuple(partners)

    def mirror_of(self, joint: str) -> str | None:
        """Homologous joint on the opposed limb, paired by chain depth."""
        limb = self.limb_of[joint]
        other = _MIRROR_LIMBS.get(limb)
        if other is None:
            return None
        mine = [j for j in self.joints if self.limb_of[j] == limb]
        theirs = [j for j in self.joints if self.limb_of[j] == other]
        mine.sort(key=self.depth)
        theirs.sort(key=self.depth)
        try:
            pos = mine.index(joint)
        except ValueError:  # pragma: no cover - limb_of is validated
            return None
        return theirs[pos] if pos < len(theirs) else None

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "joints": list(self.joints),
            "parent": {j: self.parent[j] for j in self.joints},
            "limbs": {j: self.limb_of[j] for j in self.joints},
            "nonserial": {j: list(v) for j, v in self.nonserial.items()},
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_topology(path) -> SkeletonTopology:
    """Load a topology JSON document (``joints``/``parent``/``limbs``)."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        joints = tuple(doc["joints"])
        parent = {j: doc["parent"].get(j) for j in joints}
        limbs = {j: doc["limbs"][j] for j in joints}
    except KeyError as exc:
        raise TopologyError(f"topology document missing key {exc}") from None
    nonserial = {j: tuple(v) for j, v in doc.get("nonserial", {}).items()}
    return SkeletonTopology(joints=joints, parent=parent, limb_of=limbs, nonserial=nonserial)


def default_topology() -> SkeletonTopology:
    """The 19-joint full-body skeleton (57 channels).

    Hips root, five-segment spine chain up to the head, two-segment
    shoulder pairs feeding each arm, and two-segment legs. Fingers and
    feet are not modeled.
    """
    parent = {
        "H": None,
        "SP": "H", "SP1": "SP", "SP2": "SP1", "SP3": "SP2",
        "NK": "SP3", "HD": "NK",
        "LSH1": "SP3", "LSH2": "LSH1", "LA": "LSH2", "LFA": "LA",
        "RSH1": "SP3", "RSH2": "RSH1", "RA": "RSH2", "RFA": "RA",
        "LUL": "H", "LCA": "LUL",
        "RUL": "H", "RCA": "RUL",
    }
    limbs = {}
    for j in ("H", "SP", "SP1", "SP2", "SP3", "NK", "HD"):
        limbs[j] = "spine"
    for j in ("LSH1", "LSH2", "LA", "LFA"):
        limbs[j] = "left-arm"
    for j in ("RSH1", "RSH2", "RA", "RFA"):
        limbs[j] = "right-arm"
    limbs["LUL"] = limbs["LCA"] = "left-leg"
    limbs["RUL"] = limbs["RCA"] = "right-leg"
    joints = (
        "H", "SP", "SP1", "SP2", "SP3", "NK", "HD",
        "LSH1", "LSH2", "LA", "LFA",
        "RSH1", "RSH2", "RA", "RFA",
        "LUL", "LCA", "RUL", "RCA",
    )
    return SkeletonTopology(joints=joints, parent=parent, limb_of=limbs)
