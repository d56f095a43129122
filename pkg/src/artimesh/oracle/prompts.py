"""Build oracle requests from the fixed templates."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from ..errors import PromptError
from . import templates as T


class Purpose(str, Enum):
    PART_LIST = "PartList"
    ARTICULATION_TREE = "ArticulationTree"
    HINGE_TOPOLOGY = "HingeTopology"
    HINGE_POINTS = "HingePoints"
    PRISMATIC_CLASS = "PrismaticClass"
    SLIDING_ARROW = "SlidingArrow"


class Cardinality(str, Enum):
    AT_LEAST_TWO = "AtLeastTwo"
    EXACTLY_ONE = "ExactlyOne"


@dataclass
class PromptRequest:
    purpose: Purpose
    system_text: str
    user_text: str
    images: list = field(default_factory=list)  # AnnotatedView objects
    temperature: float = 0.0
    context: dict = field(default_factory=dict)

    def image_digests(self) -> list[str]:
        return [im.digest() for im in self.images]

    def to_dict(self) -> dict:
        return {"purpose": self.purpose.value, "system_text": self.system_text, "user_text": self.user_text,
                "images": self.image_digests(), "temperature": self.temperature, "context": self.context}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _need(value, what: str, purpose: Purpose) -> str:
    if value is None or (isinstance(value, str) and not value.strip()):
        raise PromptError(f"missing placeholder value: {what} is required for {purpose.value}")
    return value


def build_prompt(purpose: Purpose | str, object_name: str | None = None, part_name: str | None = None,
                 parts: Sequence[str] | None = None, cardinality: Cardinality | str | None = None,
                 images: Sequence = (), temperature: float = 0.0) -> PromptRequest:
    """Fill the template for ``purpose``.

    Substitution is plain text replacement of ``{object_name}``, ``{part_name}``,
    ``OBJECT_NAME`` and ``RECOGNIZED_PARTS``; nothing else in the template is
    touched. Purposes whose template has no placeholders send it as the system
    message and name the object and part in a short user message.
    """
    purpose = Purpose(purpose)
    ctx: dict = {}
    if purpose is Purpose.PART_LIST:
        system, user = T.PART_LIST_SYSTEM, ""
    elif purpose is Purpose.ARTICULATION_TREE:
        obj = _need(object_name, "object name", purpose)
        if not parts:
            raise PromptError("missing placeholder value: recognized parts are required for ArticulationTree")
        system = T.ARTICULATION_TREE_SYSTEM
        user = T.ARTICULATION_TREE_USER.replace("OBJECT_NAME", obj).replace("RECOGNIZED_PARTS", ", ".join(parts))
        ctx = {"object_name": obj, "parts": list(parts)}
    elif purpose in (Purpose.HINGE_TOPOLOGY, Purpose.PRISMATIC_CLASS):
        obj = _need(object_name, "object name", purpose)
        part = _need(part_name, "part name", purpose)
        system = T.HINGE_TOPOLOGY_SYSTEM if purpose is Purpose.HINGE_TOPOLOGY else T.PRISMATIC_CLASS_SYSTEM
        user = f"Object: {obj}\nPart: {part}"
        ctx = {"object_name": obj, "part_name": part}
    elif purpose in (Purpose.HINGE_POINTS, Purpose.SLIDING_ARROW):
        obj = _need(object_name, "object name", purpose)
        part = _need(part_name, "part name", purpose)
        if purpose is Purpose.HINGE_POINTS:
            card = Cardinality(_need(cardinality, "cardinality", purpose))
            template = T.HINGE_POINTS_BOTH_ENDS if card is Cardinality.AT_LEAST_TWO else T.HINGE_POINTS_ONE_END
            ctx = {"cardinality": card.value}
        else:
            template = T.SLIDING_ARROW
        system = ""
        user = template.replace("{object_name}", obj).replace("{part_name}", part)
        ctx.update(object_name=obj, part_name=part)
    else:  # pragma: no cover
        raise PromptError(f"unknown purpose {purpose}")
    return PromptRequest(purpose, system, user, list(images), float(temperature), ctx)
