#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace atlas::econometrics {

/// Rows are (country, period) observations; columns are named numeric
/// variables with NaN marking a missing value.
struct PanelDataset {
    std::vector<std::string> country;
    std::vector<std::string> period;
    std::map<std::string, std::vector<double>, std::less<>> columns;

    std::size_t rows() const { return country.size(); }
    void add_row(std::string c, std::string p, const std::map<std::string, double>& values);
    const std::vector<double>& column(std::string_view name) const;
};

/// Reads `country,period,<col>...` CSV; empty cells become NaN.
PanelDataset read_panel_csv(std::istream& in);
void write_panel_csv(std::ostream& out, const PanelDataset& data);

/// A right-hand-side term; aliases expand to blocks of columns.
struct Term {
    std::string name;
    std::vector<std::string> columns;
};

/// `y ~ a + b + governance`. `governance` expands to the six governance
/// columns and `kuznets` to ln_gdp + ln_gdp_sq.
struct ModelSpec {
    std::string dependent;
    std::vector<Term> terms;

    std::vector<std::string> columns() const;
    ModelSpec without(std::string_view term) const;
    std::string to_string() const;
};

ModelSpec parse_spec(std::string_view text);

struct FitResult {
    std::string spec;
    std::vector<std::string> names;  // "(Intercept)" first for pooled OLS
    Eigen::VectorXd coefficients;
    Eigen::VectorXd standard_errors;
    Eigen::VectorXd p_values;  // two-sided t-test
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    double f_statistic = 0.0;
    int df_model = 0;
    int df_residual = 0;
    double residual_std_error = 0.0;
    int n_observations = 0;
    int groups = 0;  // absorbed fixed effects, 0 for pooled OLS
    Eigen::VectorXd residuals;
    Eigen::VectorXd loglik;  // Gaussian per-observation log-likelihood, σ² = SSR/n
    std::vector<std::string> observations;  // "country|period" keys, row order

    int parameters() const { return static_cast<int>(coefficients.size()); }
    double coefficient(std::string_view name) const;
};

/// Least squares on an explicit design (no intercept added). Exposed for
/// callers that build their own design matrices.
FitResult least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        std::vector<std::string> names, bool has_intercept);

/// Pooled OLS with intercept and classical standard errors. Rows missing any
/// variable of the spec are dropped.
FitResult ols_fit(const PanelDataset& data, const ModelSpec& spec);

/// Country fixed-effects (within) estimator.
FitResult fe_fit(const PanelDataset& data, const ModelSpec& spec);

struct SemiPartial {
    std::string term;
    double delta_r2 = 0.0;
    double r2_full = 0.0;
    double r2_reduced = 0.0;
};

/// R²(full) − R²(full without `term`), both on the full model's sample.
SemiPartial semi_partial(const PanelDataset& data, const ModelSpec& spec, std::string_view term);

enum class Preferred { model1, model2, neither };
std::string_view to_string(Preferred p);

struct ClarkeOptions {
    bool schwarz = true;
    double alpha = 0.05;
};

struct ClarkeResult {
    int b_statistic = 0;
    int n = 0;             // observations with nonzero d_i
    int ties = 0;          // observations with d_i == 0, excluded from n
    double p_value = 1.0;
    Preferred preferred = Preferred::neither;
    double correction = 0.0;  // per-observation Schwarz term subtracted from d_i
};

/// Clarke distribution-free test on two fits over the same observations.
ClarkeResult clarke_test(const FitResult& fit1, const FitResult& fit2,
                         const ClarkeOptions& opts = {});

/// Two-sided exact binomial p-value at p = 1/2, capped at 1.
double binomial_two_sided(int successes, int trials);

/// Fits both specs (pooled OLS, or FE when `fixed_effects`) on their common
/// complete-case sample and runs the Clarke test.
struct ModelComparison {
    FitResult fit1;
    FitResult fit2;
    ClarkeResult clarke;
};

ModelComparison compare_models(const PanelDataset& data, const ModelSpec& m1,
                               const ModelSpec& m2, const ClarkeOptions& opts = {},
                               bool fixed_effects = false);

/// Regression-table text with one column per fit.
std::string format_table(std::span<const FitResult> fits, std::string_view title);

}  // namespace atlas::econometrics
