"""Vision-language oracle: prompt construction, backends and reply parsing."""
from .prompts import Cardinality, PromptRequest, Purpose, build_prompt
from .parsing import (ARROW_COLORS, HingeTopology, JointDecl, PrismaticClass, TreeDecl, parse_arrow,
                      parse_articulation_tree, parse_hinge_points, parse_hinge_topology, parse_part_list,
                      parse_prismatic_class, parse_reply)
from .backends import (MockOracle, OracleTranscript, RemoteOracle, ReplayOracle, TranscriptStore, query)

__all__ = [
    "ARROW_COLORS", "Cardinality", "HingeTopology", "JointDecl", "MockOracle", "OracleTranscript", "PrismaticClass",
    "PromptRequest", "Purpose", "RemoteOracle", "ReplayOracle", "TranscriptStore", "TreeDecl", "build_prompt",
    "parse_arrow", "parse_articulation_tree", "parse_hinge_points", "parse_hinge_topology", "parse_part_list",
    "parse_prismatic_class", "parse_reply", "query",
]
