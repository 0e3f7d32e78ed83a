from .metrics import FabricMetrics, GlobalMetrics, LinkMetrics, NodeMetrics
from .network import (
    MESH_DECL_BASE,
    PUBLISHER,
    ROUTED_DECL_BASE,
    SAMPLE_HEADER,
    SUBSCRIBER,
    Network,
    create_network,
)
from .spec import (
    DanglingLink,
    DuplicateNode,
    FabricError,
    LinkSpec,
    NodeSpec,
    NotAPublisher,
    TimeInPast,
    TopologySpec,
    UnknownEndpoint,
    UnknownLink,
    UnknownNode,
    load_topology,
)

__all__ = [
    "FabricMetrics",
    "GlobalMetrics",
    "LinkMetrics",
    "NodeMetrics",
    "Network",
    "create_network",
    "TopologySpec",
    "NodeSpec",
    "LinkSpec",
    "load_topology",
    "FabricError",
    "DuplicateNode",
    "DanglingLink",
    "UnknownNode",
    "UnknownEndpoint",
    "UnknownLink",
    "NotAPublisher",
    "TimeInPast",
    "SUBSCRIBER",
    "PUBLISHER",
    "MESH_DECL_BASE",
    "ROUTED_DECL_BASE",
    "SAMPLE_HEADER",
]
