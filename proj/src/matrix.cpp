#include "atlas/matrix.hpp"

#include <cmath>
#include <map>

namespace atlas::matrix {

ExportMatrix make_exports(const std::vector<std::string>& countries,
                          const std::vector<std::string>& products,
                          const std::vector<double>& values) {
    if (countries.size() != products.size() || countries.size() != values.size())
        throw Error("matrix", "shape", "cell vectors differ in length");
    ExportMatrix x;
    x.countries = Registry(countries);
    x.products = Registry(products);
    x.values = Eigen::MatrixXd::Zero(x.countries.size(), x.products.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0)
            throw Error("matrix", "negative_value",
                        "export value for (" + countries[i] + ", " + products[i] +
                            ") must be finite and >= 0");
        x.values(*x.countries.index_of(countries[i]), *x.products.index_of(products[i])) += values[i];
    }
    return x;
}

ExportMatrix make_exports(Registry countries, Registry products, Eigen::MatrixXd values) {
    if (values.rows() != static_cast<Eigen::Index>(countries.size()) ||
        values.cols() != static_cast<Eigen::Index>(products.size()))
        throw Error("matrix", "shape", "values do not match registry sizes");
    if (!values.allFinite() || (values.size() > 0 && values.minCoeff() < 0.0))
        throw Error("matrix", "negative_value", "export values must be finite and >= 0");
    return {std::move(countries), std::move(products), std::move(values)};
}

namespace {

template <class Keep>
std::vector<Eigen::Index> indices_where(Eigen::Index n, Keep keep) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
        if (keep(i)) idx.push_back(i);
    return idx;
}

Registry subset(const Registry& r, const std::vector<Eigen::Index>& idx) {
    std::vector<std::string> codes;
    codes.reserve(idx.size());
    for (auto i : idx) codes.push_back(r[i]);
    return Registry(std::move(codes));
}

void record_dropped(const Registry& r, const std::vector<Eigen::Index>& kept,
                    std::vector<std::string>& out) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (k < kept.size() && kept[k] == static_cast<Eigen::Index>(i))
            ++k;
        else
            out.push_back(r[i]);
    }
}

}  // namespace

ExportMatrix compact(const ExportMatrix& x, DropReport* dropped) {
    const Eigen::VectorXd rows = x.values.rowwise().sum();
    const Eigen::VectorXd cols = x.values.colwise().sum().transpose();
    auto ri = indices_where(rows.size(), [&](auto i) { return rows(i) > 0.0; });
    auto ci = indices_where(cols.size(), [&](auto j) { return cols(j) > 0.0; });
    if (dropped) {
        record_dropped(x.countries, ri, dropped->countries);
        record_dropped(x.products, ci, dropped->products);
    }
    return {subset(x.countries, ri), subset(x.products, ci), x.values(ri, ci)};
}

RcaMatrix rca(const ExportMatrix& x) {
    const double world = x.total();
    if (!(world > 0.0)) throw Error("matrix", "empty_world_trade", "empty world trade");

    RcaMatrix out;
    const ExportMatrix c = compact(x, &out.dropped);
    const Eigen::VectorXd country_total = c.values.rowwise().sum();
    const Eigen::RowVectorXd product_total = c.values.colwise().sum();

    out.countries = c.countries;
    out.products = c.products;
    out.values.resize(c.values.rows(), c.values.cols());
    for (Eigen::Index j = 0; j < c.values.cols(); ++j) {
        const double world_share = product_total(j) / world;
        for (Eigen::Index i = 0; i < c.values.rows(); ++i)
            out.values(i, j) = (c.values(i, j) / country_total(i)) / world_share;
    }
    return out;
}

AdvantageMatrix advantage_from_binary(Registry countries, Registry products,
                                      const Eigen::MatrixXd& binary) {
    AdvantageMatrix a;
    a.countries = std::move(countries);
    a.products = std::move(products);
    a.diversity.assign(binary.rows(), 0);
    a.ubiquity.assign(binary.cols(), 0);
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index j = 0; j < binary.cols(); ++j)
        for (Eigen::Index i = 0; i < binary.rows(); ++i)
            if (binary(i, j) != 0.0) {
                t.emplace_back(i, j, 1.0);
                ++a.diversity[i];
                ++a.ubiquity[j];
            }
    a.m.resize(binary.rows(), binary.cols());
    a.m.setFromTriplets(t.begin(), t.end());
    a.m.makeCompressed();
    return a;
}

AdvantageMatrix advantage(const RcaMatrix& r) {
    const Eigen::MatrixXd b = (r.values.array() >= 1.0).cast<double>();
    return advantage_from_binary(r.countries, r.products, b);
}

AdvantageMatrix prune(const AdvantageMatrix& a, DropReport* dropped) {
    auto ri = indices_where(static_cast<Eigen::Index>(a.diversity.size()),
                            [&](auto i) { return a.diversity[i] > 0; });
    auto ci = indices_where(static_cast<Eigen::Index>(a.ubiquity.size()),
                            [&](auto j) { return a.ubiquity[j] > 0; });
    if (dropped) {
        record_dropped(a.countries, ri, dropped->countries);
        record_dropped(a.products, ci, dropped->products);
    }
    const Eigen::MatrixXd d = a.dense();
    return advantage_from_binary(subset(a.countries, ri), subset(a.products, ci), d(ri, ci));
}

ShareMatrix shares(const ExportMatrix& x) {
    ShareMatrix s;
    const Eigen::VectorXd rows = x.values.rowwise().sum();
    auto ri = indices_where(rows.size(), [&](auto i) { return rows(i) > 0.0; });
    record_dropped(x.countries, ri, s.dropped.countries);
    s.countries = subset(x.countries, ri);
    s.products = x.products;
    s.values.resize(static_cast<Eigen::Index>(ri.size()), x.values.cols());
    for (std::size_t k = 0; k < ri.size(); ++k)
        s.values.row(k) = x.values.row(ri[k]) / rows(ri[k]);
    return s;
}

Registry numbered_registry(const std::string& prefix, std::size_t n) {
    std::size_t width = 1;
    for (std::size_t m = n; m >= 10; m /= 10) ++width;
    std::vector<std::string> codes;
    codes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto digits = std::to_string(i);
        codes.push_back(prefix + std::string(width - digits.size(), '0') + digits);
    }
    return Registry(std::move(codes));
}

}  // namespace atlas::matrix
