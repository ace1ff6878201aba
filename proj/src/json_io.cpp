#include "atlas/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace atlas::io {

double round12(double v) {
    if (v == 0.0) return 0.0;  // folds -0
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return round12(v);
}

json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json triplet(const Registry& rows, const Registry& cols, const Eigen::MatrixXd& values) {
    json out;
    out["rows"] = rows.codes();
    out["cols"] = cols.codes();
    json entries = json::array();
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            if (values(i, j) != 0.0) entries.push_back(json::array({i, j, number(values(i, j))}));
    out["entries"] = std::move(entries);
    return out;
}

json triplet(const matrix::AdvantageMatrix& adv) {
    return triplet(adv.countries, adv.products, adv.dense());
}

matrix::AdvantageMatrix advantage_from_triplet(const json& j) {
    Registry rows(j.at("rows").get<std::vector<std::string>>());
    Registry cols(j.at("cols").get<std::vector<std::string>>());
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows.size(), cols.size());
    for (const auto& e : j.at("entries")) dense(e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>()) = 1.0;
    return matrix::advantage_from_binary(std::move(rows), std::move(cols), dense);
}

json scores(const complexity::ComplexityScores& s) {
    json out;
    out["period"] = s.period;
    json countries = json::object();
    for (std::size_t i = 0; i < s.countries.size(); ++i) {
        json c;
        c["eci"] = number(s.eci[i]);
        c["fitness"] = number(s.fitness[i]);
        c["entropy"] = number(s.entropy[i]);
        c["hhi"] = number(s.hhi[i]);
        countries[s.countries[i]] = std::move(c);
    }
    out["country"] = std::move(countries);
    json products = json::object();
    for (std::size_t j = 0; j < s.products.size(); ++j) {
        json p;
        p["pci"] = number(s.pci[j]);
        p["quality"] = number(s.product_quality[j]);
        products[s.products[j]] = std::move(p);
    }
    out["product"] = std::move(products);
    out["fitness_converged"] = s.fitness_converged;
    out["fitness_iterations"] = s.fitness_iterations;
    out["eci_missing"] = s.eci_missing;
    out["pci_missing"] = s.pci_missing;
    return out;
}

json pgi(const inequality::ProductGiniTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json contributors = json::array();
        for (const auto& c : r.contributors)
            contributors.push_back({{"country", c.country}, {"weight", number(c.weight)}, {"gini", number(c.gini)}});
        rows.push_back({{"product", r.product},
                        {"pgi", number(r.pgi)},
                        {"n_p", number(r.normalizer)},
                        {"contributors", std::move(contributors)}});
    }
    return {{"products", std::move(rows)}, {"excluded", t.excluded}};
}

inequality::ProductGiniTable pgi_from_json(const json& j) {
    inequality::ProductGiniTable t;
    for (const auto& r : j.at("products")) {
        inequality::ProductGini row;
        row.product = r.at("product").get<std::string>();
        row.pgi = r.at("pgi").get<double>();
        row.normalizer = r.at("n_p").get<double>();
        for (const auto& c : r.at("contributors"))
            row.contributors.push_back(
                {c.at("country").get<std::string>(), c.at("weight").get<double>(), c.at("gini").get<double>()});
        t.rows.push_back(std::move(row));
    }
    t.excluded = j.at("excluded").get<std::vector<std::string>>();
    return t;
}

namespace {

std::string g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string pgi_csv(const inequality::ProductGiniTable& t) {
    std::ostringstream out;
    out << "product,pgi,n_p,top5_contributors\n";
    for (const auto& r : t.rows) {
        out << r.product << ',' << g12(r.pgi) << ',' << g12(r.normalizer) << ',';
        for (std::size_t k = 0; k < r.contributors.size() && k < 5; ++k)
            out << (k ? ";" : "") << r.contributors[k].country << ':' << g12(r.contributors[k].gini);
        out << '\n';
    }
    return out.str();
}

json graph(const productspace::SpaceGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes)
        nodes.push_back({{"id", n.id}, {"size", number(n.size)}, {"pgi", number(n.pgi)}, {"pci", number(n.pci)}});
    json links = json::array();
    for (const auto& l : g.links)
        links.push_back({{"source", g.nodes[l.source].id}, {"target", g.nodes[l.target].id}, {"phi", number(l.phi)}});
    return {{"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

std::string graph_edges_csv(const productspace::SpaceGraph& g) {
    std::ostringstream out;
    out << "source,target,phi,tree\n";
    for (const auto& l : g.links)
        out << g.nodes[l.source].id << ',' << g.nodes[l.target].id << ',' << g12(l.phi) << ','
            << (l.tree ? 1 : 0) << '\n';
    return out.str();
}

json fit(const econometrics::FitResult& f) {
    json coefs = json::array();
    for (std::size_t k = 0; k < f.names.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        coefs.push_back({{"term", f.names[k]},
                         {"estimate", number(f.coefficients(i))},
                         {"std_error", number(f.standard_errors(i))},
                         {"p_value", number(f.p_values(i))}});
    }
    return {{"spec", f.spec},
            {"coefficients", std::move(coefs)},
            {"r2", number(f.r2)},
            {"adjusted_r2", number(f.adjusted_r2)},
            {"f_statistic", number(f.f_statistic)},
            {"df_model", f.df_model},
            {"df_residual", f.df_residual},
            {"residual_std_error", number(f.residual_std_error)},
            {"n_observations", f.n_observations},
            {"fixed_effects", f.groups},
            {"observations", f.observations}};
}

json clarke(const econometrics::ClarkeResult& c) {
    return {{"b_statistic", c.b_statistic},
            {"n", c.n},
            {"ties", c.ties},
            {"share", c.n ? number(static_cast<double>(c.b_statistic) / c.n) : json(nullptr)},
            {"p_value", number(c.p_value)},
            {"preferred", std::string(econometrics::to_string(c.preferred))},
            {"correction", number(c.correction)}};
}

json whatif(const inequality::WhatIfResult& w) {
    json edits = json::array();
    for (const auto& e : w.edits)
        edits.push_back({{"product", e.product}, {"action", e.action}, {"weight", number(e.weight)}, {"pgi", number(e.pgi)}});
    return {{"country", w.country},
            {"baseline", number(w.baseline)},
            {"scenario", number(w.scenario)},
            {"delta", number(w.delta)},
            {"edits", std::move(edits)}};
}

}  // namespace atlas::io
