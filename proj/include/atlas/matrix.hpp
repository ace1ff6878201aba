#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "atlas/common.hpp"

namespace atlas::matrix {

/// Country x product export values X_cp (USD) for one period.
struct ExportMatrix {
    Registry countries;
    Registry products;
    Eigen::MatrixXd values;  // countries.size() x products.size(), all >= 0

    double total() const { return values.sum(); }
};

/// Builds an ExportMatrix from parallel (country, product, value) cells.
/// Repeated cells are summed. Throws on negative or non-finite values.
ExportMatrix make_exports(const std::vector<std::string>& countries,
                          const std::vector<std::string>& products,
                          const std::vector<double>& values);

/// Wraps a dense matrix with explicit registries; codes must already be sorted
/// and unique.
ExportMatrix make_exports(Registry countries, Registry products, Eigen::MatrixXd values);

/// Removes all-zero rows and columns.
ExportMatrix compact(const ExportMatrix& x, DropReport* dropped = nullptr);

struct RcaMatrix {
    Registry countries;
    Registry products;
    Eigen::MatrixXd values;
    DropReport dropped;
};

/// Balassa revealed comparative advantage on the rows/columns with positive
/// totals. Throws Error{"matrix","empty_world_trade"} when the matrix sums to 0.
RcaMatrix rca(const ExportMatrix& x);

/// Binary advantage matrix with its marginals.
struct AdvantageMatrix {
    Registry countries;
    Registry products;
    Eigen::SparseMatrix<double> m;  // entries are exactly 1.0
    std::vector<int> diversity;     // k_c0, row sums
    std::vector<int> ubiquity;      // k_p0, column sums

    bool has(Eigen::Index c, Eigen::Index p) const { return m.coeff(c, p) != 0.0; }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(m); }
    Eigen::Index ones() const { return m.nonZeros(); }
};

/// M_cp = 1 iff RCA_cp >= 1.
AdvantageMatrix advantage(const RcaMatrix& r);

/// Builds an AdvantageMatrix straight from a 0/1 matrix.
AdvantageMatrix advantage_from_binary(Registry countries, Registry products,
                                      const Eigen::MatrixXd& binary);

/// Drops zero-diversity countries and zero-ubiquity products.
AdvantageMatrix prune(const AdvantageMatrix& a, DropReport* dropped = nullptr);

/// Per-country export shares s_cp; every row sums to 1.
struct ShareMatrix {
    Registry countries;
    Registry products;
    Eigen::MatrixXd values;
    DropReport dropped;
};

ShareMatrix shares(const ExportMatrix& x);

/// Registry of sequential codes "prefix0", "prefix1", ... zero-padded so that
/// lexicographic order equals numeric order.
Registry numbered_registry(const std::string& prefix, std::size_t n);

}  // namespace atlas::matrix
