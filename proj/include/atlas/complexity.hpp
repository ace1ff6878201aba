#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "atlas/matrix.hpp"

namespace atlas::complexity {

struct EigenOptions {
    Eigen::Index dense_limit = 512;  // dense symmetric solver up to this many nodes
    double tol = 1e-12;              // power iteration convergence
    int max_iter = 10000;
    double degeneracy_tol = 1e-10;   // minimum gap between 2nd and 3rd eigenvalue
};

/// M̃ together with its second eigenpair. `mtilde` is filled only on the dense
/// path.
struct CouplingMatrix {
    Eigen::MatrixXd mtilde;
    Eigen::VectorXd eigenvector;  // K, over the retained component
    double eigenvalue = 0.0;
    int iterations = 0;           // 0 on the dense path
};

/// Standardized scores over one side (countries for ECI, products for PCI) of
/// an AdvantageMatrix. Nodes outside the largest connected component have no
/// score.
struct IndexResult {
    Registry nodes;
    std::vector<std::optional<double>> score;
    std::vector<std::string> excluded;  // disconnected from the main component
    CouplingMatrix coupling;
    std::vector<std::size_t> component;  // indices into `nodes` the eigenvector covers
};

/// Coupling matrix between the rows of `b` (rows are nodes, columns the shared
/// features): (1/k_row) Σ_f b_rf b_r'f / k_f.
Eigen::MatrixXd coupling_matrix(const Eigen::SparseMatrix<double>& b);

/// Economic Complexity Index, oriented so corr(ECI, diversity) >= 0.
IndexResult eci(const matrix::AdvantageMatrix& adv, const EigenOptions& opts = {});

/// Product Complexity Index, oriented so corr(PCI, ubiquity) <= 0.
IndexResult pci(const matrix::AdvantageMatrix& adv, const EigenOptions& opts = {});

struct FitnessResult {
    Eigen::VectorXd fitness;  // per country, mean 1
    Eigen::VectorXd quality;  // per product, mean 1
    int iterations = 0;
    bool converged = false;
    double last_change = 0.0;
};

/// Fitness/quality fixed point iteration from F = Q = 1, both renormalized to
/// mean 1 each step. Converged when max|Δx| / max x < tol for both vectors.
FitnessResult fitness(const matrix::AdvantageMatrix& adv, double tol = 1e-12,
                      int max_iter = 10000);

/// Shannon entropy (nats) of each row of shares.
Eigen::VectorXd entropy(const matrix::ShareMatrix& s);

/// Herfindahl-Hirschman index of each row of shares.
Eigen::VectorXd hhi(const matrix::ShareMatrix& s);

/// All per-period country and product scores.
struct ComplexityScores {
    std::string period;
    Registry countries;
    std::vector<std::optional<double>> eci;
    std::vector<std::optional<double>> fitness;
    std::vector<double> entropy;
    std::vector<double> hhi;
    Registry products;
    std::vector<std::optional<double>> pci;
    std::vector<std::optional<double>> product_quality;
    bool fitness_converged = false;
    int fitness_iterations = 0;
    std::vector<std::string> eci_missing;
    std::vector<std::string> pci_missing;
};

/// Computes every index for one period. `shares` must cover every country in
/// `adv`; `adv` is pruned internally before the eigen and fitness steps.
ComplexityScores compute_scores(const std::string& period,
                                const matrix::AdvantageMatrix& adv,
                                const matrix::ShareMatrix& shares,
                                const EigenOptions& opts = {});

}  // namespace atlas::complexity
