"""Parsers for the fenced answer blocks returned by the oracle.

All parsers are pure. Keys, fence names and enum tokens are matched
case-insensitively and whitespace is tolerated anywhere between tokens.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from ..errors import ParseError
from .prompts import Cardinality, Purpose

JOINT_TYPES = ("fixed", "prismatic", "revolute", "continuous", "floating")
ARROW_COLORS = ("red", "yellow", "blue", "green")

FENCES = {
    Purpose.PART_LIST: "part_list",
    Purpose.ARTICULATION_TREE: "articulation tree",
    Purpose.HINGE_TOPOLOGY: "hinge_info",
    Purpose.HINGE_POINTS: "hinge points",
    Purpose.PRISMATIC_CLASS: "translation_axis_info",
    Purpose.SLIDING_ARROW: "sliding direction",
}


class HingeTopology(str, Enum):
    BOTH_ON_SURFACE = "BothOnSurface"
    ONE_INSIDE = "OneInside"


class PrismaticClass(str, Enum):
    IN_OUT = "InOut"
    SURFACE = "Surface"


@dataclass
class JointDecl:
    name: str
    joint_type: str
    parent_link: str
    child_link: str
    limit: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "joint_type": self.joint_type, "parent_link": self.parent_link,
                "child_link": self.child_link, "limit": None if self.limit is None else list(self.limit)}


@dataclass
class TreeDecl:
    parts: list[tuple[str, str]] = field(default_factory=list)
    links: list[str] = field(default_factory=list)
    joints: list[JointDecl] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"parts": [list(p) for p in self.parts], "links": list(self.links),
                "joints": [j.to_dict() for j in self.joints]}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeDecl":
        joints = [JointDecl(j["name"], j["joint_type"], j["parent_link"], j["child_link"],
                            None if j["limit"] is None else tuple(j["limit"])) for j in d["joints"]]
        return cls([tuple(p) for p in d["parts"]], list(d["links"]), joints)


def _fence_pattern(fence: str) -> re.Pattern:
    words = r"\s*[ _]?\s*".join(re.escape(w) for w in re.split(r"[ _]", fence))
    return re.compile(r"```[ \t]*" + words + r"[ \t]*\r?\n(.*?)```", re.IGNORECASE | re.DOTALL)


_FENCE_RE = {p: _fence_pattern(f) for p, f in FENCES.items()}


def extract_block(reply: str, purpose: Purpose) -> str:
    """Body of the first fenced block for ``purpose``."""
    text = (reply or "").replace("\r\n", "\n").replace("\r", "\n")
    m = _FENCE_RE[purpose].search(text)
    if m is None:
        raise ParseError(f"missing fenced block: expected a ```{FENCES[purpose]} block")
    return m.group(1)


def _field(block: str, key: str, fence: str) -> str:
    words = r"\s+".join(re.escape(w) for w in key.split())
    m = re.search(r"^[ \t]*" + words + r"[ \t]*:[ \t]*(.*?)[ \t]*$", block, re.IGNORECASE | re.MULTILINE)
    if m is None:
        raise ParseError(f"```{fence} block has no '{key}:' line")
    return m.group(1)


_ITEM_RE = re.compile(r"^\s*\(\s*\d+\s*\)\s*(.*)$")


def _items(line_body: str) -> dict[str, str]:
    out = {}
    for piece in line_body.split(";"):
        if not piece.strip():
            continue
        if ":" not in piece:
            raise ParseError(f"malformed entry {piece.strip()!r}: expected 'key: value'")
        k, v = piece.split(":", 1)
        out[re.sub(r"\s+", "_", k.strip().lower())] = v.strip()
    return out


def parse_part_list(reply: str) -> list[tuple[str, str]]:
    block = extract_block(reply, Purpose.PART_LIST)
    parts = []
    for line in block.splitlines():
        m = _ITEM_RE.match(line)
        if not m:
            continue
        kv = _items(m.group(1))
        if "part_name" not in kv or not kv["part_name"]:
            raise ParseError(f"part entry without part_name: {line.strip()!r}")
        parts.append((kv["part_name"], kv.get("description", "")))
    if not parts:
        raise ParseError("```part_list block lists no parts")
    return parts


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_LIMIT_RE = re.compile(r"^\[?\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\]?$")


def _parse_limit(text: str, joint: str) -> tuple[float, float] | None:
    t = text.strip().rstrip(";").strip()
    if t.lower() in ("", "none", "null", "n/a"):
        return None
    m = _LIMIT_RE.match(t)
    if m is None:
        raise ParseError(f"joint {joint!r}: joint_limit {text!r} is not two numbers")
    lo, hi = float(m.group(1)), float(m.group(2))
    if lo > hi:
        raise ParseError(f"joint {joint!r}: joint_limit lower {lo} exceeds upper {hi}")
    return (lo, hi)


def parse_articulation_tree(reply: str) -> TreeDecl:
    block = extract_block(reply, Purpose.ARTICULATION_TREE)
    section = None
    decl = TreeDecl()
    raw_joints = []
    for line in block.splitlines():
        head = re.match(r"^\s*(parts|links|joints)\s*:\s*$", line, re.IGNORECASE)
        if head:
            section = head.group(1).lower()
            continue
        m = _ITEM_RE.match(line)
        if not m:
            continue
        if section is None:
            raise ParseError(f"entry outside a parts/links/joints section: {line.strip()!r}")
        kv = _items(m.group(1))
        if section == "parts":
            if not kv.get("part_name"):
                raise ParseError(f"part entry without part_name: {line.strip()!r}")
            decl.parts.append((kv["part_name"], kv.get("description", "")))
        elif section == "links":
            if not kv.get("link_name"):
                raise ParseError(f"link entry without link_name: {line.strip()!r}")
            decl.links.append(kv["link_name"])
        else:
            raw_joints.append((kv, line.strip()))
    if not decl.links:
        raise ParseError("```articulation tree block declares no links")
    canon = {name.lower(): name for name in decl.links}
    for kv, line in raw_joints:
        missing = [k for k in ("joint_name", "joint_type", "parent_link", "child_link") if not kv.get(k)]
        if missing:
            raise ParseError(f"joint entry missing {', '.join(missing)}: {line!r}")
        name = kv["joint_name"]
        jtype = kv["joint_type"].lower()
        if jtype not in JOINT_TYPES:
            raise ParseError(f"unknown joint type {kv['joint_type']!r} in joint {name!r}")
        refs = []
        for key in ("parent_link", "child_link"):
            ref = canon.get(kv[key].lower())
            if ref is None:
                raise ParseError(f"joint {name!r}: {key} {kv[key]!r} is not among the declared links")
            refs.append(ref)
        limit = _parse_limit(kv.get("joint_limit", "None"), name)
        if jtype in ("revolute", "prismatic") and limit is None:
            raise ParseError(f"joint {name!r}: a {jtype} joint needs a two-number joint_limit")
        decl.joints.append(JointDecl(name, jtype, refs[0], refs[1], limit))
    return decl


def parse_hinge_topology(reply: str) -> HingeTopology:
    value = _field(extract_block(reply, Purpose.HINGE_TOPOLOGY), "choice", "hinge_info")
    found = set(re.findall(r"\(\s*([0-9]+)\s*\)|(?<![\w.])([0-9]+)(?![\w.])", value))
    nums = {a or b for a, b in found}
    if len(nums) != 1:
        raise ParseError(f"hinge_info choice {value!r} is missing or ambiguous; expected (1) or (2)")
    n = nums.pop()
    if n == "1":
        return HingeTopology.BOTH_ON_SURFACE
    if n == "2":
        return HingeTopology.ONE_INSIDE
    raise ParseError(f"hinge_info choice {value!r} is out of domain; expected (1) or (2)")


def parse_prismatic_class(reply: str) -> PrismaticClass:
    value = _field(extract_block(reply, Purpose.PRISMATIC_CLASS), "choice", "translation_axis_info").lower()
    inout = bool(re.search(r"\b(out|in)wards?\b|\bin\s*/\s*out\b|\bout\s*/\s*in\b", value))
    surface = "surface" in value
    if inout == surface:
        raise ParseError(f"translation_axis_info choice {value!r} is missing or ambiguous; "
                         "expected outward/inward or surface")
    return PrismaticClass.IN_OUT if inout else PrismaticClass.SURFACE


def parse_hinge_points(reply: str, expected: Cardinality | str) -> list[int]:
    expected = Cardinality(expected)
    value = _field(extract_block(reply, Purpose.HINGE_POINTS), "selected IDs", "hinge points")
    tokens = [t for t in re.split(r"\s*(?:,|;|\band\b|\s)\s*", value.strip().rstrip(".")) if t]
    if not tokens:
        raise ParseError("hinge points block selects no ids")
    ids = []
    for t in tokens:
        t2 = t.lstrip("#")
        if not re.fullmatch(r"\d+", t2):
            raise ParseError(f"selected id {t!r} is not an integer")
        ids.append(int(t2))
    if expected is Cardinality.AT_LEAST_TWO and len(set(ids)) < 2:
        raise ParseError(f"expected two or more selected ids, got {ids}")
    if expected is Cardinality.EXACTLY_ONE and len(ids) != 1:
        raise ParseError(f"expected exactly one selected id, got {ids}")
    return list(dict.fromkeys(ids))


def parse_arrow(reply: str) -> str:
    value = _field(extract_block(reply, Purpose.SLIDING_ARROW), "selected arrow", "sliding direction").lower()
    colors = {c for c in re.findall(r"[a-z]+", value)} & set(ARROW_COLORS)
    words = [w for w in re.findall(r"[a-z]+", value) if w not in ("the", "arrow", "color", "colour")]
    if len(colors) != 1:
        raise ParseError(f"selected arrow {value!r} names no single palette color "
                         f"(expected one of {', '.join(ARROW_COLORS)})")
    if any(w not in ARROW_COLORS for w in words):
        raise ParseError(f"selected arrow {value!r} contains words outside the palette")
    return colors.pop()


def parse_reply(purpose: Purpose | str, reply: str, cardinality: Cardinality | str | None = None):
    """Dispatch to the parser for ``purpose``."""
    purpose = Purpose(purpose)
    if purpose is Purpose.PART_LIST:
        return parse_part_list(reply)
    if purpose is Purpose.ARTICULATION_TREE:
        return parse_articulation_tree(reply)
    if purpose is Purpose.HINGE_TOPOLOGY:
        return parse_hinge_topology(reply)
    if purpose is Purpose.HINGE_POINTS:
        if cardinality is None:
            raise ParseError("hinge points parsing needs the expected cardinality")
        return parse_hinge_points(reply, cardinality)
    if purpose is Purpose.PRISMATIC_CLASS:
        return parse_prismatic_class(reply)
    return parse_arrow(reply)


def to_jsonable(parsed):
    if isinstance(parsed, TreeDecl):
        return parsed.to_dict()
    if isinstance(parsed, Enum):
        return parsed.value
    if isinstance(parsed, list):
        return [list(p) if isinstance(p, tuple) else p for p in parsed]
    return parsed
