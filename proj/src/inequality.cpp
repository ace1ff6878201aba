#include "atlas/inequality.hpp"

#include <cmath>
#include <set>

namespace atlas::inequality {

const ProductGini* ProductGiniTable::find(std::string_view product) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), product,
                               [](const ProductGini& r, std::string_view p) { return r.product < p; });
    return it != rows.end() && it->product == product ? &*it : nullptr;
}

namespace {

std::vector<Eigen::Index> share_rows(const matrix::AdvantageMatrix& adv, const matrix::ShareMatrix& s) {
    std::vector<Eigen::Index> rows(adv.countries.size());
    for (std::size_t i = 0; i < adv.countries.size(); ++i) {
        auto k = s.countries.index_of(adv.countries[i]);
        if (!k) throw Error("inequality", "registry", "no shares for country '" + adv.countries[i] + "'");
        rows[i] = static_cast<Eigen::Index>(*k);
    }
    return rows;
}

std::vector<Eigen::Index> share_cols(const matrix::AdvantageMatrix& adv, const matrix::ShareMatrix& s) {
    std::vector<Eigen::Index> cols(adv.products.size());
    for (std::size_t j = 0; j < adv.products.size(); ++j) {
        auto k = s.products.index_of(adv.products[j]);
        if (!k) throw Error("inequality", "registry", "no shares for product '" + adv.products[j] + "'");
        cols[j] = static_cast<Eigen::Index>(*k);
    }
    return cols;
}

}  // namespace

ProductGiniTable pgi_table(const matrix::AdvantageMatrix& adv, const matrix::ShareMatrix& s,
                           const GiniMap& gini) {
    const auto rows = share_rows(adv, s);
    const auto cols = share_cols(adv, s);

    ProductGiniTable table;
    for (Eigen::Index p = 0; p < adv.m.outerSize(); ++p) {
        ProductGini row;
        row.product = adv.products[p];
        double weighted = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(adv.m, p); it; ++it) {
            const auto& country = adv.countries[it.row()];
            auto g = gini.find(country);
            if (g == gini.end()) continue;
            const double w = it.value() * s.values(rows[it.row()], cols[p]);
            if (!(w > 0.0)) continue;
            row.normalizer += w;
            weighted += w * g->second;
            row.contributors.push_back({country, w, g->second});
        }
        if (row.contributors.empty()) {
            table.excluded.push_back(row.product);
            continue;
        }
        double lo = row.contributors.front().gini;
        double hi = lo;
        for (const auto& c : row.contributors) {
            lo = std::min(lo, c.gini);
            hi = std::max(hi, c.gini);
        }
        // A weighted mean lies within its inputs; clamp away the last-ulp rounding.
        row.pgi = std::clamp(weighted / row.normalizer, lo, hi);
        std::sort(row.contributors.begin(), row.contributors.end(),
                  [](const Contributor& a, const Contributor& b) {
                      return a.weight != b.weight ? a.weight > b.weight : a.country < b.country;
                  });
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<Holding> portfolio(std::string_view country, const matrix::AdvantageMatrix& adv,
                               const matrix::ShareMatrix& s) {
    auto ci = adv.countries.index_of(country);
    auto si = s.countries.index_of(country);
    if (!ci || !si)
        throw Error("inequality", "unknown_country", "unknown country '" + std::string(country) + "'");
    std::vector<Holding> out;
    for (std::size_t j = 0; j < s.products.size(); ++j) {
        const double share = s.values(static_cast<Eigen::Index>(*si), static_cast<Eigen::Index>(j));
        if (!(share > 0.0)) continue;
        auto aj = adv.products.index_of(s.products[j]);
        const bool has = aj && adv.has(static_cast<Eigen::Index>(*ci), static_cast<Eigen::Index>(*aj));
        out.push_back({s.products[j], share, has});
    }
    return out;
}

std::optional<double> expected_gini(std::span<const Holding> basket, const ProductGiniTable& table) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& h : basket) {
        if (!h.advantage) continue;
        const auto* row = table.find(h.product);
        if (!row) continue;
        num += h.share * row->pgi;
        den += h.share;
    }
    if (!(den > 0.0)) return std::nullopt;
    return num / den;
}

std::optional<double> expected_gini(std::string_view country, const matrix::AdvantageMatrix& adv,
                                    const matrix::ShareMatrix& s, const ProductGiniTable& table) {
    const auto basket = portfolio(country, adv, s);
    return expected_gini(basket, table);
}

WhatIfResult whatif(const WhatIfRequest& request, std::span<const Holding> basket,
                    const ProductGiniTable& table, const Registry& products) {
    const std::set<std::string> add(request.add.begin(), request.add.end());
    const std::set<std::string> remove(request.remove.begin(), request.remove.end());
    if (add.size() != request.add.size() || remove.size() != request.remove.size())
        throw Error("inequality", "duplicate_edit", "a product is listed twice in the same edit list");
    for (const auto& p : add)
        if (remove.count(p))
            throw Error("inequality", "overlap", "product '" + p + "' is both added and removed");

    std::map<std::string, const Holding*, std::less<>> current;
    for (const auto& h : basket)
        if (h.advantage) current[h.product] = &h;

    for (const auto& p : add) {
        if (!products.contains(p))
            throw Error("inequality", "unknown_product", "unknown product '" + p + "'");
        if (current.count(p))
            throw Error("inequality", "already_in_basket",
                        "product '" + p + "' is already an advantage product of " + request.country);
        if (!table.find(p))
            throw Error("inequality", "no_pgi", "product '" + p + "' has no PGI in this period");
    }
    for (const auto& p : remove) {
        if (!products.contains(p))
            throw Error("inequality", "unknown_product", "unknown product '" + p + "'");
        if (!current.count(p))
            throw Error("inequality", "not_in_basket",
                        "product '" + p + "' is not an advantage product of " + request.country);
    }
    for (const auto& [p, w] : request.add_weights) {
        if (!add.count(p))
            throw Error("inequality", "invalid_weight", "weight given for product '" + p + "' not being added");
        if (!std::isfinite(w) || !(w > 0.0))
            throw Error("inequality", "invalid_weight", "weight for '" + p + "' must be positive");
    }

    const auto baseline = expected_gini(basket, table);
    if (!baseline)
        throw Error("inequality", "no_baseline",
                    "country '" + request.country + "' has no advantage product with a PGI");

    struct Item {
        double weight;
        double pgi;
    };
    std::map<std::string, Item> scenario;
    for (const auto& [p, h] : current) {
        if (remove.count(p)) continue;
        if (const auto* row = table.find(p)) scenario[p] = {h->share, row->pgi};
    }
    for (const auto& p : add) {
        const auto* row = table.find(p);
        double w = row->normalizer / static_cast<double>(row->contributors.size());
        if (auto it = request.add_weights.find(p); it != request.add_weights.end()) w = it->second;
        scenario[p] = {w, row->pgi};
    }
    if (scenario.empty())
        throw Error("inequality", "empty_basket", "scenario basket has no product with a PGI");

    double total = 0.0;
    double num = 0.0;
    for (const auto& [p, it] : scenario) {
        total += it.weight;
        num += it.weight * it.pgi;
    }

    WhatIfResult r;
    r.country = request.country;
    r.baseline = *baseline;
    r.scenario = num / total;
    r.delta = (add.empty() && remove.empty()) ? 0.0 : r.scenario - r.baseline;
    for (const auto& p : add) {
        const auto& it = scenario.at(p);
        r.edits.push_back({p, "add", it.weight / total, it.pgi});
    }
    for (const auto& p : remove) {
        std::optional<double> pgi;
        if (const auto* row = table.find(p)) pgi = row->pgi;
        r.edits.push_back({p, "remove", 0.0, pgi});
    }
    return r;
}

WhatIfResult whatif(const WhatIfRequest& request, const matrix::AdvantageMatrix& adv,
                    const matrix::ShareMatrix& s, const ProductGiniTable& table) {
    const auto basket = portfolio(request.country, adv, s);
    return whatif(request, basket, table, s.products);
}

std::optional<double> pgi_pci_correlation(const ProductGiniTable& table,
                                          const complexity::ComplexityScores& scores) {
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t j = 0; j < scores.products.size(); ++j) {
        if (!scores.pci[j]) continue;
        if (const auto* row = table.find(scores.products[j])) {
            a.push_back(row->pgi);
            b.push_back(*scores.pci[j]);
        }
    }
    if (a.size() < 3) return std::nullopt;
    const Eigen::Map<const Eigen::VectorXd> x(a.data(), static_cast<Eigen::Index>(a.size()));
    const Eigen::Map<const Eigen::VectorXd> y(b.data(), static_cast<Eigen::Index>(b.size()));
    const Eigen::VectorXd dx = x.array() - x.mean();
    const Eigen::VectorXd dy = y.array() - y.mean();
    const double den = dx.norm() * dy.norm();
    if (!(den > 0.0)) return std::nullopt;
    return dx.dot(dy) / den;
}

}  // namespace atlas::inequality
