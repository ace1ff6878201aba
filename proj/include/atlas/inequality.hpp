#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "atlas/complexity.hpp"
#include "atlas/matrix.hpp"

namespace atlas::inequality {

using GiniMap = std::map<std::string, double, std::less<>>;

struct Contributor {
    std::string country;
    double weight = 0.0;  // M_cp * s_cp
    double gini = 0.0;
};

struct ProductGini {
    std::string product;
    double pgi = 0.0;
    double normalizer = 0.0;                // N_p
    std::vector<Contributor> contributors;  // weight descending, ties by country code
};

/// Product Gini Index per product. Products whose advantage exporters all
/// lack Gini data are listed in `excluded`.
struct ProductGiniTable {
    std::vector<ProductGini> rows;  // sorted by product code
    std::vector<std::string> excluded;

    const ProductGini* find(std::string_view product) const;
};

/// PGI_p = Σ_c M_cp s_cp Gini_c / Σ_c M_cp s_cp over countries with Gini data.
/// `adv` and `s` must share registries.
ProductGiniTable pgi_table(const matrix::AdvantageMatrix& adv, const matrix::ShareMatrix& s,
                           const GiniMap& gini);

/// One product in a country's basket.
struct Holding {
    std::string product;
    double share = 0.0;
    bool advantage = false;
};

/// Country basket: every product with a positive share.
std::vector<Holding> portfolio(std::string_view country, const matrix::AdvantageMatrix& adv,
                               const matrix::ShareMatrix& s);

/// Weighted mean PGI over the country's advantage products. Missing when no
/// advantage product carries a PGI.
std::optional<double> expected_gini(std::span<const Holding> basket,
                                    const ProductGiniTable& table);

std::optional<double> expected_gini(std::string_view country, const matrix::AdvantageMatrix& adv,
                                    const matrix::ShareMatrix& s, const ProductGiniTable& table);

struct WhatIfRequest {
    std::string country;
    std::vector<std::string> add;
    std::vector<std::string> remove;
    /// Optional explicit M·s weight for added products; products not listed get
    /// the world-mean contributor weight N_p / #contributors.
    std::map<std::string, double> add_weights;
};

struct BasketEdit {
    std::string product;
    std::string action;  // "add" | "remove"
    double weight = 0.0; // normalized weight in the scenario basket, 0 for removals
    std::optional<double> pgi;
};

struct WhatIfResult {
    std::string country;
    double baseline = 0.0;
    double scenario = 0.0;
    double delta = 0.0;
    std::vector<BasketEdit> edits;
};

/// Re-evaluates expected Gini after adding/removing products with the PGI
/// table held fixed. `products` is the registry edits are validated against.
WhatIfResult whatif(const WhatIfRequest& request, std::span<const Holding> basket,
                    const ProductGiniTable& table, const Registry& products);

WhatIfResult whatif(const WhatIfRequest& request, const matrix::AdvantageMatrix& adv,
                    const matrix::ShareMatrix& s, const ProductGiniTable& table);

/// Pearson correlation between PGI and PCI over products carrying both.
std::optional<double> pgi_pci_correlation(const ProductGiniTable& table,
                                          const complexity::ComplexityScores& scores);

}  // namespace atlas::inequality
