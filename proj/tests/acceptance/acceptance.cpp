// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "atlas/complexity.hpp"
#include "atlas/econometrics.hpp"
#include "atlas/inequality.hpp"
#include "atlas/productspace.hpp"
#include "atlas/snapshot.hpp"
#include "oracles.hpp"

using namespace atlas;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = io::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

matrix::AdvantageMatrix adv_of(const MatrixXd& m) {
    return matrix::advantage_from_binary(matrix::numbered_registry("C", m.rows()),
                                         matrix::numbered_registry("P", m.cols()), m);
}

VectorXd scores(const complexity::IndexResult& r) {
    VectorXd v(r.score.size());
    for (std::size_t i = 0; i < r.score.size(); ++i) v(i) = r.score[i].value_or(std::nan(""));
    return v;
}

/// Strict order agreement on distinct keys; tied keys must give equal scores.
bool same_order(const VectorXd& score, const VectorXd& key) {
    for (Eigen::Index i = 0; i < key.size(); ++i)
        for (Eigen::Index j = 0; j < key.size(); ++j) {
            if (key(i) > key(j) && !(score(i) > score(j))) return false;
            if (key(i) == key(j) && std::abs(score(i) - score(j)) > 1e-9) return false;
        }
    return true;
}

double population_std(const VectorXd& v) { return std::sqrt((v.array() - v.mean()).square().mean()); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

VectorXd gaussian(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) m.col(j) = gaussian(rng, r);
    return m;
}

MatrixXd with_intercept(const MatrixXd& x) {
    MatrixXd z(x.rows(), x.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(x.cols()) = x;
    return z;
}

econometrics::PanelDataset dataset(const MatrixXd& x, const VectorXd& y, const std::vector<std::string>& country,
                                   const std::vector<std::string>& period) {
    econometrics::PanelDataset d;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::map<std::string, double> v{{"y", y(i)}};
        for (Eigen::Index j = 0; j < x.cols(); ++j) v["x" + std::to_string(j)] = x(i, j);
        d.add_row(country[i], period[i], v);
    }
    return d;
}

std::string rhs(Eigen::Index k) {
    std::string s = "y ~ x0";
    for (Eigen::Index j = 1; j < k; ++j) s += " + x" + std::to_string(j);
    return s;
}

// Criteria ---------------------------------------------------------------

Check eigen_oracle() {
    Check c;
    std::mt19937_64 rng(101);
    complexity::EigenOptions iterative;
    iterative.dense_limit = 0;
    double worst = 0.0, worst_std = 0.0;
    const auto t0 = Clock::now();
    for (int t = 0; t < 200; ++t) {
        const int rows = 3 + static_cast<int>(rng() % 18);
        const int cols = 3 + static_cast<int>(rng() % 18);
        const MatrixXd m = oracle::random_instance(rng, rows, cols, 0.3 + 0.4 * (rng() % 100) / 100.0);
        const auto ref_e = oracle::eci(m);
        const auto ref_p = oracle::pci(m);
        const auto adv = adv_of(m);
        for (const auto& opts : {complexity::EigenOptions{}, iterative}) {
            const auto e = complexity::eci(adv, opts);
            const auto p = complexity::pci(adv, opts);
            const VectorXd es = scores(e), ps = scores(p);
            worst = std::max({worst, (es - ref_e.score).cwiseAbs().maxCoeff(), (ps - ref_p.score).cwiseAbs().maxCoeff()});
            for (const VectorXd* v : {&es, &ps})
                worst_std = std::max({worst_std, std::abs(v->mean()), std::abs(population_std(*v) - 1.0)});
        }
    }
    const double elapsed = seconds_since(t0);
    c.require(worst <= 1e-8, "max score error " + fmt(worst));
    c.require(worst_std <= 1e-9, "standardization error " + fmt(worst_std));
    c.require(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
    if (c.ok) c.detail = "max error " + fmt(worst) + ", std error " + fmt(worst_std) + ", " + fmt(elapsed) + " s";
    return c;
}

Check nested_ordering() {
    Check c;
    complexity::EigenOptions iterative;
    iterative.dense_limit = 0;
    int cases = 0;
    for (int rows = 3; rows <= 10; ++rows)
        for (int cols = rows; cols <= 10; ++cols) {
            // Row i keeps the first ceil((rows - i) * cols / rows) products: strictly nested.
            MatrixXd m = MatrixXd::Zero(rows, cols);
            for (int i = 0; i < rows; ++i) {
                const int k = ((rows - i) * cols + rows - 1) / rows;
                for (int j = 0; j < k; ++j) m(i, j) = 1.0;
            }
            const VectorXd diversity = m.rowwise().sum();
            const VectorXd ubiquity = m.colwise().sum().transpose();
            for (const auto& opts : {complexity::EigenOptions{}, iterative}) {
                const auto e = complexity::eci(adv_of(m), opts);
                const auto p = complexity::pci(adv_of(m), opts);
                const std::string at = std::to_string(rows) + "x" + std::to_string(cols);
                c.require(same_order(scores(e), diversity), "ECI ranks differ at " + at);
                c.require(same_order(scores(p), -ubiquity), "PCI ranks differ at " + at);
                ++cases;
            }
        }
    if (c.ok) c.detail = std::to_string(cases) + " nested matrices, dense and iterative";
    return c;
}

Check pgi_oracle() {
    Check c;
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int rows_checked = 0;
    for (int t = 0; t < 500; ++t) {
        const int nc = 2 + static_cast<int>(rng() % 14);
        const int np = 2 + static_cast<int>(rng() % 19);
        MatrixXd x = MatrixXd::Zero(nc, np);
        for (int i = 0; i < nc; ++i)
            for (int j = 0; j < np; ++j)
                if (u(rng) < 0.6) x(i, j) = std::exp(10.0 * u(rng));
        const auto ex = matrix::compact(matrix::make_exports(matrix::numbered_registry("C", nc),
                                                             matrix::numbered_registry("P", np), x));
        const auto adv = matrix::advantage(matrix::rca(ex));
        const auto s = matrix::shares(ex);
        std::vector<std::optional<double>> gvec(adv.countries.size());
        inequality::GiniMap g;
        for (std::size_t i = 0; i < adv.countries.size(); ++i)
            if (u(rng) < 0.85) g[adv.countries[i]] = *(gvec[i] = 0.2 + 0.5 * u(rng));
        const auto table = inequality::pgi_table(adv, s, g);
        const auto ref = oracle::pgi(adv.dense(), s.values, gvec);
        for (std::size_t p = 0; p < adv.products.size(); ++p) {
            const auto* row = table.find(adv.products[p]);
            c.require((row != nullptr) == ref[p].has_value(), "coverage differs for " + adv.products[p]);
            if (!row || !ref[p]) continue;
            worst = std::max(worst, std::abs(row->pgi - *ref[p]));
            double lo = 1.0, hi = 0.0;
            for (std::size_t i = 0; i < adv.countries.size(); ++i)
                if (adv.has(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) && gvec[i])
                    lo = std::min(lo, *gvec[i]), hi = std::max(hi, *gvec[i]);
            c.require(row->pgi >= lo && row->pgi <= hi, "PGI outside contributor bounds");
            ++rows_checked;
        }
    }
    c.require(worst <= 1e-12, "max error " + fmt(worst));
    if (c.ok) c.detail = std::to_string(rows_checked) + " products, max error " + fmt(worst);
    return c;
}

Check proximity_oracle() {
    Check c;
    std::mt19937_64 rng(107);
    int cases = 0;
    for (int np = 1; np <= 15; ++np)
        for (int t = 0; t < 20; ++t) {
            const int nc = 1 + static_cast<int>(rng() % 15);
            const MatrixXd m = oracle::random_binary(rng, nc, np, 0.2 + 0.6 * (rng() % 100) / 100.0);
            const MatrixXd phi = productspace::proximity(adv_of(m)).phi;
            c.require(phi == oracle::proximity(m), "phi differs at " + std::to_string(nc) + "x" + std::to_string(np));
            c.require(phi == phi.transpose(), "phi not symmetric");
            ++cases;
        }
    if (c.ok) c.detail = std::to_string(cases) + " matrices, exact";
    return c;
}

Check econometrics_oracles() {
    Check c;
    std::mt19937_64 rng(109);
    double ols_err = 0.0, fe_err = 0.0, sp_err = 0.0, clarke_err = 0.0;

    for (int t = 0; t < 50; ++t) {
        const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng() % 200);
        const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng() % 6);
        const MatrixXd x = gaussian(rng, n, k);
        const VectorXd y = x * gaussian(rng, k) + gaussian(rng, n) + VectorXd::Constant(n, 1.0);
        std::vector<std::string> cc, pp;
        for (Eigen::Index i = 0; i < n; ++i) cc.push_back("C" + std::to_string(i)), pp.push_back("t");
        const auto f = econometrics::ols_fit(dataset(x, y, cc, pp), econometrics::parse_spec(rhs(k)));
        const VectorXd ref = oracle::normal_equations(with_intercept(x), y);
        ols_err = std::max(ols_err, (f.coefficients - ref).cwiseAbs().maxCoeff());
    }

    for (int countries = 2; countries <= 10; ++countries)
        for (int periods = 2; periods <= 5; ++periods) {
            const int n = countries * periods;
            const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng() % 3);
            if (n - k - countries < 1) continue;
            const MatrixXd x = gaussian(rng, n, k);
            const VectorXd alpha = 2.0 * gaussian(rng, countries);
            VectorXd y = x * gaussian(rng, k) + 0.3 * gaussian(rng, n);
            std::vector<std::string> cc, pp;
            std::vector<int> group;
            for (int i = 0; i < n; ++i) {
                group.push_back(i % countries);
                y(i) += alpha(i % countries);
                cc.push_back("C" + std::to_string(i % countries));
                pp.push_back("t" + std::to_string(i / countries));
            }
            const auto fe = econometrics::fe_fit(dataset(x, y, cc, pp), econometrics::parse_spec(rhs(k)));
            const VectorXd ref = oracle::lsdv(x, y, group, countries);
            fe_err = std::max(fe_err, (fe.coefficients - ref).cwiseAbs().maxCoeff());
        }

    for (int t = 0; t < 50; ++t) {
        const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng() % 100);
        const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng() % 4);
        const MatrixXd x = gaussian(rng, n, k);
        const VectorXd y = x * gaussian(rng, k) * 0.5 + gaussian(rng, n);
        std::vector<std::string> cc, pp;
        for (Eigen::Index i = 0; i < n; ++i) cc.push_back("C" + std::to_string(i)), pp.push_back("t");
        const std::string term = "x" + std::to_string(k - 1);
        const auto sp = econometrics::semi_partial(dataset(x, y, cc, pp), econometrics::parse_spec(rhs(k)), term);
        c.require(sp.delta_r2 >= 0.0, "negative semi-partial R2");
        const MatrixXd others = with_intercept(x.leftCols(k - 1));
        const VectorXd e = x.col(k - 1) - others * oracle::normal_equations(others, x.col(k - 1));
        const VectorXd yc = y.array() - y.mean();
        const double ref = std::pow(e.dot(yc), 2) / (e.squaredNorm() * yc.squaredNorm());
        sp_err = std::max(sp_err, std::abs(sp.delta_r2 - ref));
    }

    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 1; n <= 20; ++n)
        for (int t = 0; t < 10; ++t) {
            econometrics::FitResult a, b;
            a.coefficients = b.coefficients = VectorXd::Zero(2);
            a.loglik = VectorXd(n);
            b.loglik = VectorXd(n);
            int wins = 0;
            for (int i = 0; i < n; ++i) {
                a.observations.push_back("C" + std::to_string(i) + "|t");
                a.loglik(i) = u(rng);
                do b.loglik(i) = u(rng);
                while (b.loglik(i) == a.loglik(i));
                wins += a.loglik(i) > b.loglik(i);
            }
            b.observations = a.observations;
            const auto r = econometrics::clarke_test(a, b);
            c.require(r.b_statistic == wins && r.n == n, "Clarke count differs at n=" + std::to_string(n));
            const double ref = oracle::binomial_two_sided(wins, n);
            clarke_err = std::max({clarke_err, std::abs(r.p_value - ref),
                                   std::abs(econometrics::binomial_two_sided(wins, n) - ref)});
        }

    c.require(ols_err <= 1e-10, "OLS error " + fmt(ols_err));
    c.require(fe_err <= 1e-9, "FE error " + fmt(fe_err));
    c.require(sp_err <= 1e-10, "semi-partial error " + fmt(sp_err));
    c.require(clarke_err <= 1e-12, "Clarke p error " + fmt(clarke_err));
    if (c.ok)
        c.detail = "OLS " + fmt(ols_err) + ", FE " + fmt(fe_err) + ", semi-partial " + fmt(sp_err) + ", Clarke " +
                   fmt(clarke_err);
    return c;
}

json expected_values() {
    std::ifstream in(std::string(ATLAS_FIXTURE_DIR) + "/expected.json");
    return json::parse(in);
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

Check end_to_end(const json& expected) {
    Check c;
    const std::filesystem::path tmp = ATLAS_TEST_TMP;
    auto config = service::load_config(std::string(ATLAS_FIXTURE_DIR) + "/config.json");

    const auto t0 = Clock::now();
    config.output = tmp / "acceptance_a";
    std::filesystem::remove_all(config.output);
    const auto first = service::build_snapshot(config);
    const double elapsed = seconds_since(t0);
    config.output = tmp / "acceptance_b";
    std::filesystem::remove_all(config.output);
    const auto second = service::build_snapshot(config);
    c.require(elapsed < 5.0, "build took " + fmt(elapsed) + " s");
    c.require(first.digest == second.digest, "digests differ");

    const auto snap = service::compute_snapshot(config);
    int compared = 0;
    for (const auto& period : snap.periods) {
        const auto& exp = expected["periods"][period.period.id];
        const auto countries = exp["countries"].get<std::vector<std::string>>();
        const auto products = exp["products"].get<std::vector<std::string>>();
        c.require(period.advantage.countries.codes() == countries, period.period.id + ": country registry differs");
        c.require(period.advantage.products.codes() == products, period.period.id + ": product registry differs");
        if (!c.ok) return c;
        for (std::size_t i = 0; i < countries.size(); ++i) {
            const auto ri = static_cast<Eigen::Index>(*period.rca.countries.index_of(countries[i]));
            c.require(period.advantage.diversity[i] == exp["diversity"][i].get<int>(), "diversity " + countries[i]);
            for (std::size_t j = 0; j < products.size(); ++j) {
                const auto rj = static_cast<Eigen::Index>(*period.rca.products.index_of(products[j]));
                c.require(close(period.rca.values(ri, rj), exp["rca"][i][j].get<double>()),
                          "RCA " + countries[i] + "/" + products[j]);
                c.require(period.advantage.has(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                              (exp["m"][i][j].get<int>() == 1),
                          "M " + countries[i] + "/" + products[j]);
                compared += 2;
            }
        }
        for (std::size_t j = 0; j < products.size(); ++j)
            c.require(period.advantage.ubiquity[j] == exp["ubiquity"][j].get<int>(), "ubiquity " + products[j]);
        for (const auto& [product, value] : exp["pgi"].items()) {
            const auto* row = period.pgi.find(product);
            c.require(row && close(row->pgi, value.get<double>()), "PGI " + product);
            ++compared;
        }
        for (const auto& [country, value] : exp["expected_gini"].items()) {
            const auto eg = inequality::expected_gini(country, period.advantage, period.shares, period.pgi);
            if (value.is_null()) {
                c.require(!eg, "EG should be missing for " + country);
            } else {
                c.require(eg && close(*eg, value.get<double>()), "EG " + country);
            }
            ++compared;
        }
    }
    if (c.ok)
        c.detail = "built in " + fmt(elapsed) + " s, digest " + first.digest.substr(0, 12) + ", " +
                   std::to_string(compared) + " values match";
    return c;
}

Check qualitative_echo(const json& expected) {
    Check c;
    auto config = service::load_config(std::string(ATLAS_FIXTURE_DIR) + "/config.json");
    const auto snap = service::compute_snapshot(config);
    const auto cmp = econometrics::compare_models(snap.panel, econometrics::parse_spec("gini ~ eci"),
                                                  econometrics::parse_spec("gini ~ ln_gdp"));
    const auto& reg = expected["regression"];
    c.require(cmp.fit1.n_observations == reg["n"].get<int>(), "sample size " + std::to_string(cmp.fit1.n_observations));
    c.require(std::abs(cmp.fit1.r2 - reg["r2_eci"].get<double>()) < 1e-9, "ECI R2 differs from numpy");
    c.require(std::abs(cmp.fit2.r2 - reg["r2_ln_gdp"].get<double>()) < 1e-9, "lnGDP R2 differs from numpy");
    c.require(cmp.fit1.r2 > cmp.fit2.r2, "ECI R2 " + fmt(cmp.fit1.r2) + " <= lnGDP R2 " + fmt(cmp.fit2.r2));
    c.require(cmp.clarke.preferred == econometrics::Preferred::model1,
              "Clarke prefers " + std::string(econometrics::to_string(cmp.clarke.preferred)));
    if (c.ok)
        c.detail = "R2 " + fmt(cmp.fit1.r2) + " vs " + fmt(cmp.fit2.r2) + ", Clarke B=" +
                   std::to_string(cmp.clarke.b_statistic) + "/" + std::to_string(cmp.clarke.n) +
                   " p=" + fmt(cmp.clarke.p_value);
    return c;
}

}  // namespace

int main() {
    const json expected = expected_values();
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"eigen oracle (200 matrices, dense and iterative)", eigen_oracle},
        {"nested ordering", nested_ordering},
        {"PGI oracle (500 instances)", pgi_oracle},
        {"proximity oracle", proximity_oracle},
        {"econometrics oracles (OLS, FE, semi-partial, Clarke)", econometrics_oracles},
        {"end-to-end fixture", [&] { return end_to_end(expected); }},
        {"qualitative echo (ECI beats lnGDP)", [&] { return qualitative_echo(expected); }},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        failed += !c.ok;
        std::cout << (c.ok ? "PASS  " : "FAIL  ") << name << "  [" << c.detail << "]\n";
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed\n" : "all criteria passed\n");
    return failed ? 1 : 0;
}
