#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atlas/matrix.hpp"

namespace atlas::productspace {

/// φ_pp' = min of the two co-export conditional probabilities; zero diagonal.
struct ProximityMatrix {
    Registry products;
    Eigen::MatrixXd phi;
};

ProximityMatrix proximity(const matrix::AdvantageMatrix& adv);

/// Proximity over the element-wise OR of several periods' advantage matrices,
/// aligned by country and product code.
ProximityMatrix pooled_proximity(std::span<const matrix::AdvantageMatrix> periods);

struct SpaceNode {
    std::string id;
    double size = 0.0;  // world trade of the product in the period
    std::optional<double> pgi;
    std::optional<double> pci;
};

struct SpaceLink {
    std::size_t source = 0;  // node indices, source < target
    std::size_t target = 0;
    double phi = 0.0;
    bool tree = false;       // part of the maximum spanning forest
};

struct SpaceGraph {
    std::vector<SpaceNode> nodes;
    std::vector<SpaceLink> links;  // sorted by (source, target)
};

inline constexpr double kDefaultBackboneThreshold = 0.55;

/// Maximum spanning forest over φ > 0 plus every edge with φ >= threshold.
SpaceGraph backbone(const ProximityMatrix& phi, double threshold = kDefaultBackboneThreshold);

/// Fills node sizes and PGI/PCI overlays by product code. Nodes without an
/// entry keep `std::nullopt` (size defaults to 0).
void attach_overlays(SpaceGraph& graph, const std::map<std::string, double, std::less<>>& size,
                     const std::map<std::string, double, std::less<>>& pgi,
                     const std::map<std::string, double, std::less<>>& pci);

/// Σ_c X_cp per product code.
std::map<std::string, double, std::less<>> world_trade(const matrix::ExportMatrix& x);

}  // namespace atlas::productspace
