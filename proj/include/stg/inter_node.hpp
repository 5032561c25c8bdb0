#pragma once

#include "stg/intra_node.hpp"

namespace stg {

/// Hill-climbs over single-op moves across adjacent cluster boundaries. Scans
/// boundaries left to right, takes the first move that lowers the larger of the
/// two affected loads, and repeats until no move helps.
ClusterPartition rebalance(const ClusterPartition &partition, const OpGraph &graph);

/// Same search on a bare weight sequence; returns the new cluster sizes.
std::vector<std::size_t> rebalance_sizes(const std::vector<std::int64_t> &weights, std::vector<std::size_t> sizes);

/// Per node: user-supplied entries pass through unchanged; otherwise the node's
/// op graph is enumerated (clustered points rebalanced). Throws StructuralError
/// for a node with neither.
ImplementationLibrary build_library(const Application &app, const ImplementationLibrary &supplied, int nf = 4);

/// CSV with columns version_tag,ii,area,provenance (one section per node when
/// the application has several, each preceded by "# node" line).
std::string library_csv(const Application &app, const ImplementationLibrary &library);

} // namespace stg
