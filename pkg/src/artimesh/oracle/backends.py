"""Oracle backends and the query loop.

Every backend answers ``complete(request, messages) -> str``. ``messages`` is
the chat history for this request; the first user turn carries the images.
Each call is keyed by a hash of the messages (images by PNG digest), which is
what the replay backend looks up.
"""
from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import httpx
import numpy as np

from ..errors import AuthenticationError, OracleError, ParseError
from .parsing import ARROW_COLORS, TreeDecl, parse_reply, to_jsonable
from .prompts import Cardinality, PromptRequest, Purpose

log = logging.getLogger(__name__)

REPROMPT_TEXT = ("Your previous answer did not match the required format ({error}). "
                 "Please answer again using exactly the requested format.")


def message_key(request: PromptRequest, messages: Sequence[dict]) -> str:
    """Content hash of one backend call."""
    body = {"purpose": request.purpose.value, "temperature": request.temperature,
            "images": request.image_digests(), "messages": list(messages)}
    return hashlib.sha256(json.dumps(body, sort_keys=True, ensure_ascii=False).encode("utf-8")).hexdigest()


def initial_messages(request: PromptRequest) -> list[dict]:
    msgs = []
    if request.system_text:
        msgs.append({"role": "system", "content": request.system_text})
    msgs.append({"role": "user", "content": request.user_text})
    return msgs


# ---------------------------------------------------------------- remote


class RemoteOracle:
    """Chat-completion HTTP endpoint; credential read from an environment variable."""

    name = "Remote"
    transient_status = {408, 409, 425, 429, 500, 502, 503, 504}

    def __init__(self, endpoint: str, model: str, api_key_env: str = "ARTIMESH_API_KEY", max_retries: int = 3,
                 backoff: float = 1.0, timeout: float = 120.0, client: httpx.Client | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        if not endpoint:
            raise OracleError("remote oracle needs an endpoint URL")
        key = os.environ.get(api_key_env)
        if not key:
            raise AuthenticationError(f"remote oracle credential missing: set ${api_key_env}")
        self.endpoint, self.model, self.max_retries, self.backoff = endpoint, model, max_retries, backoff
        self._headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def payload(self, request: PromptRequest, messages: Sequence[dict]) -> dict:
        wire = []
        first_user = True
        for m in messages:
            if m["role"] == "user" and first_user:
                content = [{"type": "text", "text": m["content"]}]
                for im in request.images:
                    b64 = base64.b64encode(im.png_bytes()).decode("ascii")
                    content.append({"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}})
                wire.append({"role": "user", "content": content})
                first_user = False
            else:
                wire.append(dict(m))
        return {"model": self.model, "messages": wire, "temperature": request.temperature}

    def complete(self, request: PromptRequest, messages: Sequence[dict]) -> str:
        body = self.payload(request, messages)
        last = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.endpoint, json=body, headers=self._headers)
            except httpx.TransportError as exc:
                last = f"network error: {exc}"
                log.warning("oracle request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthenticationError(f"oracle rejected the credential (HTTP {resp.status_code})")
            if resp.status_code in self.transient_status:
                last = f"HTTP {resp.status_code}"
                log.warning("oracle returned HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise OracleError(f"oracle request failed with HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise OracleError(f"unexpected chat-completion response shape: {exc}") from exc
        raise OracleError(f"oracle unreachable after {self.max_retries} retries ({last})")


# ---------------------------------------------------------------- replay


class ReplayOracle:
    """Answers from stored transcripts; never touches the network."""

    name = "Replay"

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise OracleError(f"replay directory not found: {self.directory}")
        self._replies: dict[str, str] = {}
        for path in sorted(self.directory.rglob("*.json")):
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, ValueError):
                continue
            if isinstance(data, dict):
                for ex in data.get("exchanges", []):
                    if "key" in ex and "reply" in ex:
                        self._replies[ex["key"]] = ex["reply"]
        self.calls = 0

    def complete(self, request: PromptRequest, messages: Sequence[dict]) -> str:
        key = message_key(request, messages)
        self.calls += 1
        if key not in self._replies:
            raise OracleError(f"no stored reply for request {key[:12]} ({request.purpose.value})")
        return self._replies[key]


# ---------------------------------------------------------------- mock


def _line_distance(points: np.ndarray, origin, direction) -> np.ndarray:
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    rel = np.asarray(points, dtype=np.float64) - np.asarray(origin, dtype=np.float64)
    return np.linalg.norm(rel - np.outer(rel @ d, d), axis=1)


class MockOracle:
    """Deterministic oracle answering from fixture ground truth.

    ``truth`` is a fixture truth record (normalized frame). Hinge points are
    chosen from the marks recorded on the annotated image: every candidate
    within the joint tolerance of the true axis, or the nearest ones if too
    few qualify.
    """

    name = "Mock"

    def __init__(self, truth: dict):
        self.truth = truth
        self.calls = 0

    def _joint_for(self, part: str) -> dict:
        for j in self.truth["joints"]:
            if j["child"] == part:
                return j
        raise OracleError(f"mock oracle: no ground-truth joint moves part {part!r}")

    def complete(self, request: PromptRequest, messages: Sequence[dict]) -> str:
        self.calls += 1
        purpose = request.purpose
        ctx = request.context
        if purpose is Purpose.PART_LIST:
            desc = self.truth.get("descriptions", {})
            rows = [f"({i}) part_name: {n}; description: {desc.get(n, n)}" for i, n in
                    enumerate(self.truth["links"], 1)]
            return "```part_list\n" + "\n".join(rows) + "\n```"
        if purpose is Purpose.ARTICULATION_TREE:
            return self._tree()
        joint = self._joint_for(ctx["part_name"])
        if purpose is Purpose.HINGE_TOPOLOGY:
            choice = "(1)" if joint.get("topology") == "BothOnSurface" else "(2)"
            return f"```hinge_info\ndescription: hinge of the {ctx['part_name']}\nchoice: {choice}\n```"
        if purpose is Purpose.PRISMATIC_CLASS:
            choice = "surface" if joint.get("prismatic_class") == "Surface" else "outward/inward"
            return f"```translation_axis_info\ndescription: translation of the {ctx['part_name']}\nchoice: {choice}\n```"
        if purpose is Purpose.HINGE_POINTS:
            ids = self._hinge_ids(request, joint)
            return ("```hinge points\ndescription: points on the rotation axis\n"
                    f"selected IDs: {', '.join(str(i) for i in ids)}\n```")
        color = self._arrow(request, joint)
        return f"```sliding direction\ndescription: the part slides this way\nselected arrow: {color}\n```"

    def _tree(self) -> str:
        links = self.truth["links"]
        lines = ["parts:"] + [f"({i}) part_name: {n};" for i, n in enumerate(links, 1)]
        lines += ["", "links:"] + [f"({i}) link_name: {n};" for i, n in enumerate(links, 1)]
        lines += ["", "joints:"]
        for i, j in enumerate(self.truth["joints"], 1):
            lim = "None" if j["limits"] is None else f"[{j['limits'][0]:g}, {j['limits'][1]:g}]"
            lines.append(f"({i}) joint_name: {j['name']}; joint_type: {j['type']}; parent_link: {j['parent']}; "
                         f"child_link: {j['child']}; joint_limit: {lim};")
        return "```articulation tree\n" + "\n".join(lines) + "\n```"

    def _hinge_ids(self, request: PromptRequest, joint: dict) -> list[int]:
        marks = [m for im in request.images for m in im.marks]
        if not marks:
            raise OracleError("mock oracle: hinge-points image carries no marks")
        pts = np.array([m.point3d for m in marks])
        dist = _line_distance(pts, joint["origin"], joint["direction"])
        order = np.argsort(dist, kind="stable")
        if request.context.get("cardinality") == Cardinality.EXACTLY_ONE.value:
            return [marks[order[0]].id]
        close = [marks[i].id for i in order if dist[i] <= joint.get("tolerance", 0.0)]
        if len(close) < 2:
            close = [marks[i].id for i in order[:2]]
        return sorted(close)

    def _arrow(self, request: PromptRequest, joint: dict) -> str:
        arrows = [a for im in request.images for a in im.arrows]
        if not arrows:
            raise OracleError("mock oracle: sliding-arrow image carries no arrows")
        truth = np.asarray(joint["direction"], dtype=np.float64)
        best = max(arrows, key=lambda a: float(np.dot(a.in_plane if a.in_plane is not None else a.direction3d,
                                                      truth)))
        assert best.color in ARROW_COLORS
        return best.color


# ---------------------------------------------------------------- transcripts


@dataclass
class OracleTranscript:
    request: PromptRequest
    raw_reply: str | None
    parsed: object
    backend: str
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    exchanges: list[dict] = field(default_factory=list)
    error: str | None = None

    @property
    def key(self) -> str:
        return self.request.digest()

    def to_dict(self) -> dict:
        return {"key": self.key, "request": self.request.to_dict(), "raw_reply": self.raw_reply,
                "parsed": None if self.parsed is None else to_jsonable(self.parsed), "backend": self.backend,
                "timestamp": self.timestamp, "exchanges": self.exchanges, "error": self.error}

    def reparse(self):
        """Parse ``raw_reply`` again; equals ``parsed`` for every successful transcript."""
        return parse_reply(self.request.purpose, self.raw_reply, self.request.context.get("cardinality"))


class TranscriptStore:
    """One JSON file per request under ``directory``, named by request hash."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def write(self, transcript: OracleTranscript) -> Path:
        path = self.directory / f"{transcript.key}.json"
        with self._lock:
            path.write_text(json.dumps(transcript.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8")
        return path


def query(request: PromptRequest, backend, store: TranscriptStore | None = None,
          validate: Callable[[object], None] | None = None) -> OracleTranscript:
    """Send ``request``, parse the reply, reprompt once on a malformed answer.

    ``validate`` may raise ParseError for replies that parse but are unusable
    (for example an id outside the candidate set); they get the same single
    reprompt.
    """
    messages = initial_messages(request)
    transcript = OracleTranscript(request, None, None, getattr(backend, "name", type(backend).__name__))
    try:
        for attempt in range(2):
            key = message_key(request, messages)
            raw = backend.complete(request, messages)
            transcript.exchanges.append({"key": key, "reply": raw})
            transcript.raw_reply = raw
            try:
                parsed = parse_reply(request.purpose, raw, request.context.get("cardinality"))
                if validate is not None:
                    validate(parsed)
            except ParseError as exc:
                transcript.exchanges[-1]["parse_error"] = str(exc)
                if attempt == 1:
                    raise OracleError(f"malformed {request.purpose.value} reply after reprompt: {exc}") from exc
                messages = messages + [{"role": "assistant", "content": raw},
                                       {"role": "user", "content": REPROMPT_TEXT.format(error=exc)}]
                continue
            transcript.parsed = parsed
            return transcript
    except OracleError as exc:
        transcript.error = str(exc)
        raise
    finally:
        if store is not None:
            store.write(transcript)
    raise AssertionError("unreachable")  # pragma: no cover


def tree_of(transcript: OracleTranscript) -> TreeDecl:
    if not isinstance(transcript.parsed, TreeDecl):
        raise OracleError("transcript does not hold an articulation tree")
    return transcript.parsed
