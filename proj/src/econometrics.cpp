#include "atlas/econometrics.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "atlas/common.hpp"
#include "atlas/ingest.hpp"

namespace atlas::econometrics {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string format_g(double v, int digits = 12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace

void PanelDataset::add_row(std::string c, std::string p, const std::map<std::string, double>& values) {
    const std::size_t n = rows();
    for (const auto& [name, v] : values)
        if (!columns.count(name)) columns[name].assign(n, kMissing);
    for (auto& [name, col] : columns) {
        auto it = values.find(name);
        col.push_back(it == values.end() ? kMissing : it->second);
    }
    country.push_back(std::move(c));
    period.push_back(std::move(p));
}

const std::vector<double>& PanelDataset::column(std::string_view name) const {
    auto it = columns.find(name);
    if (it == columns.end())
        throw Error("econometrics", "unknown_column", "dataset has no column '" + std::string(name) + "'");
    return it->second;
}

PanelDataset read_panel_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("econometrics", "missing_header", "panel CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = ingest::split_csv_line(line);
    if (header.size() < 2 || trim(header[0]) != "country" || trim(header[1]) != "period")
        throw Error("econometrics", "missing_column", "panel CSV must start with country,period");

    PanelDataset data;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++row;
        auto cells = ingest::split_csv_line(line);
        if (cells.size() != header.size())
            throw Error("econometrics", "malformed_row", "panel CSV row " + std::to_string(row) +
                                                             " has " + std::to_string(cells.size()) +
                                                             " fields");
        std::map<std::string, double> values;
        for (std::size_t k = 2; k < cells.size(); ++k) {
            const auto cell = trim(cells[k]);
            const auto name = trim(header[k]);
            if (cell.empty() || cell == "NA") {
                values[name] = kMissing;
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size() || !std::isfinite(v))
                throw Error("econometrics", "malformed_number",
                            "panel CSV row " + std::to_string(row) + " column " + name + ": '" + cell + "'");
            values[name] = v;
        }
        data.add_row(trim(cells[0]), trim(cells[1]), values);
    }
    return data;
}

void write_panel_csv(std::ostream& out, const PanelDataset& data) {
    out << "country,period";
    for (const auto& [name, col] : data.columns) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < data.rows(); ++i) {
        out << data.country[i] << ',' << data.period[i];
        for (const auto& [name, col] : data.columns) {
            out << ',';
            if (!std::isnan(col[i])) out << format_g(col[i]);
        }
        out << '\n';
    }
}

std::vector<std::string> ModelSpec::columns() const {
    std::vector<std::string> out;
    for (const auto& t : terms) out.insert(out.end(), t.columns.begin(), t.columns.end());
    return out;
}

ModelSpec ModelSpec::without(std::string_view term) const {
    ModelSpec out{dependent, {}};
    bool found = false;
    for (const auto& t : terms) {
        if (t.name == term)
            found = true;
        else
            out.terms.push_back(t);
    }
    if (!found)
        throw Error("econometrics", "unknown_term", "term '" + std::string(term) + "' is not in the model");
    return out;
}

std::string ModelSpec::to_string() const {
    std::string s = dependent + " ~";
    if (terms.empty()) return s + " 1";
    for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? " + " : " ") + terms[i].name;
    return s;
}

ModelSpec parse_spec(std::string_view text) {
    const auto tilde = text.find('~');
    if (tilde == std::string_view::npos)
        throw Error("econometrics", "invalid_spec", "model spec needs '~': " + std::string(text));
    ModelSpec spec;
    spec.dependent = trim(text.substr(0, tilde));
    if (spec.dependent.empty())
        throw Error("econometrics", "invalid_spec", "model spec has no dependent variable");
    std::string_view rhs = text.substr(tilde + 1);
    std::set<std::string> seen;
    while (true) {
        const auto plus = rhs.find('+');
        const auto name = trim(rhs.substr(0, plus));
        if (name.empty() || name == "1") {
            if (!(name == "1" || (plus == std::string_view::npos && spec.terms.empty() && name.empty())))
                throw Error("econometrics", "invalid_spec", "empty term in model spec");
        } else {
            Term t{name, {}};
            if (name == "governance") {
                for (const auto* g : ingest::kGovernanceNames) t.columns.emplace_back(g);
            } else if (name == "kuznets") {
                t.columns = {"ln_gdp", "ln_gdp_sq"};
            } else {
                t.columns = {name};
            }
            for (const auto& c : t.columns)
                if (!seen.insert(c).second)
                    throw Error("econometrics", "invalid_spec", "column '" + c + "' appears twice");
            spec.terms.push_back(std::move(t));
        }
        if (plus == std::string_view::npos) break;
        rhs.remove_prefix(plus + 1);
    }
    return spec;
}

double FitResult::coefficient(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return coefficients(static_cast<Eigen::Index>(i));
    throw Error("econometrics", "unknown_term", "fit has no coefficient '" + std::string(name) + "'");
}

namespace {

FitResult fit_design(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                     bool has_intercept, int groups) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const Eigen::Index df = n - p - groups;
    if (df <= 0)
        throw Error("econometrics", "too_few_observations",
                    std::to_string(n) + " observations for " + std::to_string(p + groups) + " parameters");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) {
        std::string cols;
        for (Eigen::Index k = qr.rank(); k < p; ++k) {
            if (!cols.empty()) cols += ", ";
            cols += names[qr.colsPermutation().indices()(k)];
        }
        throw Error("econometrics", "rank_deficient", "design matrix is rank deficient; collinear columns: " + cols);
    }

    FitResult f;
    f.names = std::move(names);
    f.coefficients = qr.solve(y);
    f.residuals = y - x * f.coefficients;
    const double ssr = f.residuals.squaredNorm();
    const double sst = has_intercept ? (y.array() - y.mean()).square().sum() : y.squaredNorm();

    f.n_observations = static_cast<int>(n);
    f.groups = groups;
    f.df_residual = static_cast<int>(df);
    f.df_model = static_cast<int>(p - (has_intercept ? 1 : 0));
    f.r2 = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;
    const double total_df = static_cast<double>(n - groups - (has_intercept ? 1 : 0));
    f.adjusted_r2 = 1.0 - (1.0 - f.r2) * total_df / static_cast<double>(df);
    f.f_statistic = f.df_model > 0 && f.r2 < 1.0
                        ? (f.r2 / f.df_model) / ((1.0 - f.r2) / static_cast<double>(df))
                        : (f.df_model > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    const double sigma2 = ssr / static_cast<double>(df);
    f.residual_std_error = std::sqrt(sigma2);

    // (X'X)^-1 = P R^-1 R^-T P' for X P = Q R.
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd perm_inv = rinv * rinv.transpose();
    const auto& perm = qr.colsPermutation();
    const Eigen::MatrixXd xtx_inv = perm * perm_inv * perm.transpose();
    f.standard_errors = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();

    f.p_values.resize(p);
    boost::math::students_t dist(static_cast<double>(df));
    for (Eigen::Index k = 0; k < p; ++k) {
        const double se = f.standard_errors(k);
        const double t = se > 0.0 ? std::abs(f.coefficients(k) / se) : std::numeric_limits<double>::infinity();
        f.p_values(k) = std::isfinite(t) ? 2.0 * boost::math::cdf(boost::math::complement(dist, t)) : 0.0;
    }

    const double var_mle = std::max(ssr / static_cast<double>(n), std::numeric_limits<double>::min());
    f.loglik = -0.5 * std::log(2.0 * std::numbers::pi * var_mle) -
               f.residuals.array().square() / (2.0 * var_mle);
    return f;
}

std::vector<std::size_t> complete_rows(const PanelDataset& data, const std::vector<std::string>& cols) {
    std::vector<const std::vector<double>*> refs;
    for (const auto& c : cols) refs.push_back(&data.column(c));
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        bool ok = true;
        for (const auto* col : refs)
            if (std::isnan((*col)[i])) {
                ok = false;
                break;
            }
        if (ok) rows.push_back(i);
    }
    return rows;
}

std::vector<std::string> all_columns(const ModelSpec& spec) {
    auto cols = spec.columns();
    cols.insert(cols.begin(), spec.dependent);
    return cols;
}

PanelDataset subset(const PanelDataset& data, const std::vector<std::size_t>& rows) {
    PanelDataset out;
    for (auto i : rows) {
        out.country.push_back(data.country[i]);
        out.period.push_back(data.period[i]);
    }
    for (const auto& [name, col] : data.columns) {
        auto& dst = out.columns[name];
        dst.reserve(rows.size());
        for (auto i : rows) dst.push_back(col[i]);
    }
    return out;
}

std::vector<std::string> observation_keys(const PanelDataset& data, const std::vector<std::size_t>& rows) {
    std::vector<std::string> keys;
    keys.reserve(rows.size());
    for (auto i : rows) keys.push_back(data.country[i] + "|" + data.period[i]);
    return keys;
}

}  // namespace

FitResult least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                        bool has_intercept) {
    if (names.size() != static_cast<std::size_t>(x.cols()))
        throw Error("econometrics", "shape", "one name per design column required");
    return fit_design(x, y, std::move(names), has_intercept, 0);
}

FitResult ols_fit(const PanelDataset& data, const ModelSpec& spec) {
    const auto cols = spec.columns();
    const auto rows = complete_rows(data, all_columns(spec));
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(cols.size());
    if (n <= k + 1)
        throw Error("econometrics", "too_few_observations",
                    std::to_string(n) + " complete observations for " + std::to_string(k + 1) + " parameters");

    Eigen::MatrixXd x(n, k + 1);
    Eigen::VectorXd y(n);
    const auto& dep = data.column(spec.dependent);
    x.col(0).setOnes();
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& col = data.column(cols[j]);
        for (Eigen::Index i = 0; i < n; ++i) x(i, j + 1) = col[rows[i]];
    }
    for (Eigen::Index i = 0; i < n; ++i) y(i) = dep[rows[i]];

    std::vector<std::string> names{"(Intercept)"};
    names.insert(names.end(), cols.begin(), cols.end());
    auto f = fit_design(x, y, std::move(names), true, 0);
    f.spec = spec.to_string();
    f.observations = observation_keys(data, rows);
    return f;
}

FitResult fe_fit(const PanelDataset& data, const ModelSpec& spec) {
    const auto cols = spec.columns();
    if (cols.empty()) throw Error("econometrics", "invalid_spec", "fixed-effects model needs a regressor");
    const auto rows = complete_rows(data, all_columns(spec));
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(cols.size());

    std::map<std::string, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) groups[data.country[rows[i]]].push_back(i);
    bool repeated = false;
    for (const auto& [c, idx] : groups) repeated = repeated || idx.size() >= 2;
    if (!repeated)
        throw Error("econometrics", "no_within_variation", "no country has two or more observations");

    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    const auto& dep = data.column(spec.dependent);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& col = data.column(cols[j]);
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = col[rows[i]];
    }
    for (Eigen::Index i = 0; i < n; ++i) y(i) = dep[rows[i]];

    Eigen::VectorXd scale = x.cwiseAbs().colwise().maxCoeff().transpose();
    for (const auto& [c, idx] : groups) {
        Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(k);
        double ym = 0.0;
        for (auto i : idx) {
            xm += x.row(i);
            ym += y(i);
        }
        xm /= static_cast<double>(idx.size());
        ym /= static_cast<double>(idx.size());
        for (auto i : idx) {
            x.row(i) -= xm;
            y(i) -= ym;
        }
    }
    for (Eigen::Index j = 0; j < k; ++j)
        if (x.col(j).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale(j), 1.0))
            throw Error("econometrics", "no_within_variation", "no within variation in '" + cols[j] + "'");

    auto f = fit_design(x, y, cols, false, static_cast<int>(groups.size()));
    f.spec = spec.to_string() + " | country";
    f.observations = observation_keys(data, rows);
    return f;
}

SemiPartial semi_partial(const PanelDataset& data, const ModelSpec& spec, std::string_view term) {
    const auto reduced_spec = spec.without(term);
    const auto rows = complete_rows(data, all_columns(spec));
    const auto sample = subset(data, rows);
    SemiPartial out;
    out.term = std::string(term);
    out.r2_full = ols_fit(sample, spec).r2;
    out.r2_reduced = reduced_spec.terms.empty() ? 0.0 : ols_fit(sample, reduced_spec).r2;
    out.delta_r2 = std::max(0.0, out.r2_full - out.r2_reduced);
    return out;
}

std::string_view to_string(Preferred p) {
    switch (p) {
        case Preferred::model1: return "model1";
        case Preferred::model2: return "model2";
        case Preferred::neither: return "neither";
    }
    return "neither";
}

double binomial_two_sided(int successes, int trials) {
    if (trials < 0 || successes < 0 || successes > trials)
        throw Error("econometrics", "invalid_binomial", "successes must lie in [0, trials]");
    if (trials == 0) return 1.0;
    const long double log_half = static_cast<long double>(trials) * std::log(0.5L);
    auto pmf = [&](int i) {
        return std::exp(std::lgamma(static_cast<long double>(trials) + 1) -
                        std::lgamma(static_cast<long double>(i) + 1) -
                        std::lgamma(static_cast<long double>(trials - i) + 1) + log_half);
    };
    long double lower = 0.0L;
    long double upper = 0.0L;
    for (int i = 0; i <= successes; ++i) lower += pmf(i);
    for (int i = successes; i <= trials; ++i) upper += pmf(i);
    const long double p = 2.0L * std::min(lower, upper);
    return static_cast<double>(std::min(p, 1.0L));
}

ClarkeResult clarke_test(const FitResult& fit1, const FitResult& fit2, const ClarkeOptions& opts) {
    if (fit1.observations != fit2.observations || fit1.loglik.size() != fit2.loglik.size())
        throw Error("econometrics", "mismatched_observations",
                    "Clarke test needs both models estimated on the same observations");
    const auto total = fit1.loglik.size();
    ClarkeResult r;
    if (opts.schwarz && total > 0) {
        const double n = static_cast<double>(total);
        r.correction = static_cast<double>(fit1.parameters() - fit2.parameters()) * std::log(n) / (2.0 * n);
    }
    for (Eigen::Index i = 0; i < total; ++i) {
        const double d = fit1.loglik(i) - fit2.loglik(i) - r.correction;
        if (d > 0.0)
            ++r.b_statistic;
        else if (d == 0.0)
            ++r.ties;
    }
    r.n = static_cast<int>(total) - r.ties;
    r.p_value = binomial_two_sided(r.b_statistic, r.n);
    if (r.p_value < opts.alpha) {
        if (2 * r.b_statistic > r.n)
            r.preferred = Preferred::model1;
        else if (2 * r.b_statistic < r.n)
            r.preferred = Preferred::model2;
    }
    return r;
}

ModelComparison compare_models(const PanelDataset& data, const ModelSpec& m1, const ModelSpec& m2,
                               const ClarkeOptions& opts, bool fixed_effects) {
    auto cols = all_columns(m1);
    const auto more = all_columns(m2);
    cols.insert(cols.end(), more.begin(), more.end());
    const auto sample = subset(data, complete_rows(data, cols));
    ModelComparison out;
    out.fit1 = fixed_effects ? fe_fit(sample, m1) : ols_fit(sample, m1);
    out.fit2 = fixed_effects ? fe_fit(sample, m2) : ols_fit(sample, m2);
    out.clarke = clarke_test(out.fit1, out.fit2, opts);
    return out;
}

std::string format_table(std::span<const FitResult> fits, std::string_view title) {
    constexpr int label_width = 26;
    constexpr int col_width = 18;
    std::vector<std::string> terms;
    for (const auto& f : fits)
        for (const auto& n : f.names)
            if (n != "(Intercept)" && std::find(terms.begin(), terms.end(), n) == terms.end()) terms.push_back(n);
    const bool any_intercept = std::any_of(fits.begin(), fits.end(), [](const FitResult& f) {
        return !f.names.empty() && f.names.front() == "(Intercept)";
    });
    if (any_intercept) terms.push_back("(Intercept)");

    auto stars = [](double p) { return p < 0.01 ? "***" : p < 0.05 ? "**" : p < 0.1 ? "*" : ""; };
    auto fixed = [](double v, int prec) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(prec) << v;
        return s.str();
    };

    std::ostringstream out;
    const std::string rule(label_width + col_width * fits.size(), '=');
    out << title << '\n' << rule << '\n' << std::setw(label_width) << std::left << "";
    for (std::size_t c = 0; c < fits.size(); ++c)
        out << std::setw(col_width) << std::right << ("(" + std::to_string(c + 1) + ")");
    out << '\n' << std::string(rule.size(), '-') << '\n';

    for (const auto& term : terms) {
        std::ostringstream est;
        std::ostringstream se;
        est << std::setw(label_width) << std::left << (term == "(Intercept)" ? "Constant" : term);
        se << std::setw(label_width) << "";
        for (const auto& f : fits) {
            auto it = std::find(f.names.begin(), f.names.end(), term);
            if (it == f.names.end()) {
                est << std::setw(col_width) << "";
                se << std::setw(col_width) << "";
                continue;
            }
            const auto k = static_cast<Eigen::Index>(it - f.names.begin());
            est << std::setw(col_width) << std::right << (fixed(f.coefficients(k), 3) + stars(f.p_values(k)));
            se << std::setw(col_width) << std::right << ("(" + fixed(f.standard_errors(k), 3) + ")");
        }
        out << est.str() << '\n' << se.str() << '\n';
    }
    out << std::string(rule.size(), '-') << '\n';
    auto row = [&](std::string_view label, auto value) {
        out << std::setw(label_width) << std::left << label;
        for (const auto& f : fits) out << std::setw(col_width) << std::right << value(f);
        out << '\n';
    };
    row("Observations", [](const FitResult& f) { return std::to_string(f.n_observations); });
    row("R2", [&](const FitResult& f) { return fixed(f.r2, 3); });
    row("Adjusted R2", [&](const FitResult& f) { return fixed(f.adjusted_r2, 3); });
    row("Residual Std. Error", [&](const FitResult& f) { return fixed(f.residual_std_error, 3); });
    row("F-Statistic", [&](const FitResult& f) { return fixed(f.f_statistic, 3); });
    row("df", [](const FitResult& f) {
        return std::to_string(f.df_model) + "; " + std::to_string(f.df_residual);
    });
    row("Country Fixed Effects", [](const FitResult& f) { return std::string(f.groups ? "Yes" : "No"); });
    out << rule << '\n' << "Note: *p<0.1; **p<0.05; ***p<0.01\n";
    return out.str();
}

}  // namespace atlas::econometrics
