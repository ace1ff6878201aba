#include "atlas/productspace.hpp"

#include <numeric>

namespace atlas::productspace {

ProximityMatrix proximity(const matrix::AdvantageMatrix& adv) {
    const Eigen::Index n = adv.m.cols();
    const Eigen::MatrixXd co = Eigen::MatrixXd(adv.m.transpose() * adv.m);
    ProximityMatrix out;
    out.products = adv.products;
    out.phi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = p + 1; q < n; ++q) {
            const int denom = std::max(adv.ubiquity[p], adv.ubiquity[q]);
            const double v = denom > 0 ? co(p, q) / denom : 0.0;
            out.phi(p, q) = v;
            out.phi(q, p) = v;
        }
    return out;
}

ProximityMatrix pooled_proximity(std::span<const matrix::AdvantageMatrix> periods) {
    std::vector<std::string> countries;
    std::vector<std::string> products;
    for (const auto& a : periods) {
        countries.insert(countries.end(), a.countries.begin(), a.countries.end());
        products.insert(products.end(), a.products.begin(), a.products.end());
    }
    Registry cr(std::move(countries));
    Registry pr(std::move(products));
    Eigen::MatrixXd any = Eigen::MatrixXd::Zero(cr.size(), pr.size());
    for (const auto& a : periods)
        for (Eigen::Index p = 0; p < a.m.outerSize(); ++p)
            for (Eigen::SparseMatrix<double>::InnerIterator it(a.m, p); it; ++it)
                any(*cr.index_of(a.countries[it.row()]), *pr.index_of(a.products[p])) = 1.0;
    return proximity(matrix::advantage_from_binary(std::move(cr), std::move(pr), any));
}

namespace {

struct Forest {
    std::vector<std::size_t> parent;
    explicit Forest(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }
};

}  // namespace

SpaceGraph backbone(const ProximityMatrix& phi, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error("productspace", "invalid_threshold", "threshold must lie in [0,1]");
    const auto n = static_cast<std::size_t>(phi.phi.rows());
    if (n == 0) throw Error("productspace", "empty_graph", "proximity matrix has no products");

    std::vector<SpaceLink> candidates;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) {
            const double v = phi.phi(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
            if (v > 0.0) candidates.push_back({p, q, v, false});
        }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].phi > candidates[b].phi;
    });

    Forest forest(n);
    for (auto k : order)
        if (forest.unite(candidates[k].source, candidates[k].target)) candidates[k].tree = true;

    SpaceGraph g;
    g.nodes.reserve(n);
    for (const auto& code : phi.products) g.nodes.push_back({code, 0.0, std::nullopt, std::nullopt});
    for (const auto& link : candidates)
        if (link.tree || link.phi >= threshold) g.links.push_back(link);
    return g;
}

void attach_overlays(SpaceGraph& graph, const std::map<std::string, double, std::less<>>& size,
                     const std::map<std::string, double, std::less<>>& pgi,
                     const std::map<std::string, double, std::less<>>& pci) {
    for (auto& node : graph.nodes) {
        if (auto it = size.find(node.id); it != size.end()) node.size = it->second;
        if (auto it = pgi.find(node.id); it != pgi.end()) node.pgi = it->second;
        else node.pgi.reset();
        if (auto it = pci.find(node.id); it != pci.end()) node.pci = it->second;
        else node.pci.reset();
    }
}

std::map<std::string, double, std::less<>> world_trade(const matrix::ExportMatrix& x) {
    std::map<std::string, double, std::less<>> out;
    const Eigen::RowVectorXd totals = x.values.colwise().sum();
    for (std::size_t j = 0; j < x.products.size(); ++j) out[x.products[j]] = totals(static_cast<Eigen::Index>(j));
    return out;
}

}  // namespace atlas::productspace
