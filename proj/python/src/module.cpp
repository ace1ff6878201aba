#include <cmath>
#include <limits>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "atlas/complexity.hpp"
#include "atlas/econometrics.hpp"
#include "atlas/inequality.hpp"
#include "atlas/productspace.hpp"
#include "atlas/service.hpp"
#include "atlas/snapshot.hpp"

namespace py = pybind11;
using namespace atlas;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Registry codes_or_numbered(const std::optional<std::vector<std::string>>& codes, const char* prefix,
                           Eigen::Index n) {
    if (!codes) return matrix::numbered_registry(prefix, n);
    if (static_cast<Eigen::Index>(codes->size()) != n)
        throw Error("python", "shape", "expected " + std::to_string(n) + " codes, got " + std::to_string(codes->size()));
    Registry r(*codes);
    if (r.codes() != *codes) throw Error("python", "unsorted", "codes must be sorted and unique");
    return r;
}

matrix::AdvantageMatrix binary(const MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (m.data()[i] != 0.0 && m.data()[i] != 1.0) throw Error("python", "not_binary", "M must contain only 0 and 1");
    return matrix::advantage_from_binary(matrix::numbered_registry("C", m.rows()),
                                         matrix::numbered_registry("P", m.cols()), m);
}

VectorXd with_nan(const std::vector<std::optional<double>>& v) {
    VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i].value_or(kNaN);
    return out;
}

py::dict fit_dict(const econometrics::FitResult& f) {
    py::dict d;
    d["names"] = f.names;
    d["coefficients"] = f.coefficients;
    d["standard_errors"] = f.standard_errors;
    d["p_values"] = f.p_values;
    d["r2"] = f.r2;
    d["adjusted_r2"] = f.adjusted_r2;
    d["n"] = f.n_observations;
    d["df_residual"] = f.df_residual;
    d["residuals"] = f.residuals;
    d["loglik"] = f.loglik;
    return d;
}

py::dict labelled(const Registry& rows, const Registry& cols, const MatrixXd& values) {
    py::dict d;
    d["countries"] = rows.codes();
    d["products"] = cols.codes();
    d["values"] = values;
    return d;
}

}  // namespace

PYBIND11_MODULE(_atlas, m) {
    m.doc() = "Economic complexity, product Gini and product space analytics.";

    static py::exception<Error> atlas_error(m, "AtlasError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::reinterpret_borrow<py::object>(atlas_error.ptr())(e.what());
            err.attr("code") = e.code();
            err.attr("module") = e.module();
            PyErr_SetObject(atlas_error.ptr(), err.ptr());
        }
    });

    m.def(
        "rca",
        [](const MatrixXd& x, std::optional<std::vector<std::string>> countries,
           std::optional<std::vector<std::string>> products) {
            const auto ex = matrix::make_exports(codes_or_numbered(countries, "C", x.rows()),
                                                 codes_or_numbered(products, "P", x.cols()), x);
            const auto r = matrix::rca(ex);
            return labelled(r.countries, r.products, r.values);
        },
        py::arg("x"), py::arg("countries") = py::none(), py::arg("products") = py::none(),
        "Balassa RCA over rows and columns with positive totals.");

    m.def(
        "advantage",
        [](const MatrixXd& x, std::optional<std::vector<std::string>> countries,
           std::optional<std::vector<std::string>> products) {
            const auto ex = matrix::make_exports(codes_or_numbered(countries, "C", x.rows()),
                                                 codes_or_numbered(products, "P", x.cols()), x);
            const auto a = matrix::advantage(matrix::rca(ex));
            return labelled(a.countries, a.products, a.dense());
        },
        py::arg("x"), py::arg("countries") = py::none(), py::arg("products") = py::none(),
        "Binary M with M = 1 where RCA >= 1.");

    m.def(
        "shares",
        [](const MatrixXd& x) {
            const auto s = matrix::shares(matrix::make_exports(matrix::numbered_registry("C", x.rows()),
                                                               matrix::numbered_registry("P", x.cols()), x));
            return s.values;
        },
        py::arg("x"));

    m.def(
        "eci",
        [](const MatrixXd& mm, int dense_limit) {
            complexity::EigenOptions o;
            o.dense_limit = dense_limit;
            return with_nan(complexity::eci(binary(mm), o).score);
        },
        py::arg("m"), py::arg("dense_limit") = complexity::EigenOptions{}.dense_limit,
        "Standardized ECI; NaN outside the largest connected component.");

    m.def(
        "pci",
        [](const MatrixXd& mm, int dense_limit) {
            complexity::EigenOptions o;
            o.dense_limit = dense_limit;
            return with_nan(complexity::pci(binary(mm), o).score);
        },
        py::arg("m"), py::arg("dense_limit") = complexity::EigenOptions{}.dense_limit);

    m.def(
        "fitness",
        [](const MatrixXd& mm, double tol, int max_iter) {
            const auto f = complexity::fitness(binary(mm), tol, max_iter);
            py::dict d;
            d["fitness"] = f.fitness;
            d["quality"] = f.quality;
            d["converged"] = f.converged;
            d["iterations"] = f.iterations;
            return d;
        },
        py::arg("m"), py::arg("tol") = 1e-12, py::arg("max_iter") = 10000);

    m.def(
        "entropy",
        [](const MatrixXd& x) {
            return complexity::entropy(matrix::shares(matrix::make_exports(
                matrix::numbered_registry("C", x.rows()), matrix::numbered_registry("P", x.cols()), x)));
        },
        py::arg("x"));

    m.def(
        "hhi",
        [](const MatrixXd& x) {
            return complexity::hhi(matrix::shares(matrix::make_exports(
                matrix::numbered_registry("C", x.rows()), matrix::numbered_registry("P", x.cols()), x)));
        },
        py::arg("x"));

    m.def(
        "pgi",
        [](const MatrixXd& mm, const MatrixXd& shares, const VectorXd& gini) {
            const auto adv = binary(mm);
            if (shares.rows() != mm.rows() || shares.cols() != mm.cols() || gini.size() != mm.rows())
                throw Error("python", "shape", "m, shares and gini must agree in shape");
            matrix::ShareMatrix s{adv.countries, adv.products, shares, {}};
            inequality::GiniMap g;
            for (Eigen::Index i = 0; i < gini.size(); ++i)
                if (!std::isnan(gini(i))) g[adv.countries[static_cast<std::size_t>(i)]] = gini(i);
            const auto table = inequality::pgi_table(adv, s, g);
            VectorXd out = VectorXd::Constant(mm.cols(), kNaN);
            for (const auto& row : table.rows) out(static_cast<Eigen::Index>(*adv.products.index_of(row.product))) = row.pgi;
            return out;
        },
        py::arg("m"), py::arg("shares"), py::arg("gini"),
        "PGI per product; NaN gini marks missing data, NaN output marks excluded products.");

    m.def(
        "proximity", [](const MatrixXd& mm) { return productspace::proximity(binary(mm)).phi; }, py::arg("m"));

    m.def(
        "ols",
        [](const MatrixXd& x, const VectorXd& y, bool intercept) {
            MatrixXd design = x;
            std::vector<std::string> names;
            if (intercept) {
                design.resize(x.rows(), x.cols() + 1);
                design.col(0).setOnes();
                design.rightCols(x.cols()) = x;
                names.push_back("(Intercept)");
            }
            for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j));
            return fit_dict(econometrics::least_squares(design, y, names, intercept));
        },
        py::arg("x"), py::arg("y"), py::arg("intercept") = true);

    m.def(
        "clarke",
        [](const VectorXd& loglik1, const VectorXd& loglik2, int k1, int k2, bool schwarz, double alpha) {
            if (loglik1.size() != loglik2.size()) throw Error("python", "shape", "log-likelihoods differ in length");
            econometrics::FitResult a, b;
            a.loglik = loglik1;
            b.loglik = loglik2;
            a.coefficients = VectorXd::Zero(k1);
            b.coefficients = VectorXd::Zero(k2);
            for (Eigen::Index i = 0; i < loglik1.size(); ++i) a.observations.push_back(std::to_string(i));
            b.observations = a.observations;
            const auto r = econometrics::clarke_test(a, b, {schwarz, alpha});
            py::dict d;
            d["b"] = r.b_statistic;
            d["n"] = r.n;
            d["ties"] = r.ties;
            d["p_value"] = r.p_value;
            d["preferred"] = std::string(econometrics::to_string(r.preferred));
            return d;
        },
        py::arg("loglik1"), py::arg("loglik2"), py::arg("k1"), py::arg("k2"), py::arg("schwarz") = true,
        py::arg("alpha") = 0.05);

    m.def("binomial_two_sided", &econometrics::binomial_two_sided, py::arg("successes"), py::arg("trials"));

    m.def(
        "build_snapshot",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> output) {
            auto c = service::load_config(config);
            if (output) c.output = *output;
            const auto s = service::build_snapshot(c);
            py::dict d;
            d["digest"] = s.digest;
            d["directory"] = s.directory;
            d["files"] = s.files;
            return d;
        },
        py::arg("config"), py::arg("output") = py::none());

    py::class_<service::Service>(m, "Service")
        .def(py::init(&service::Service::open), py::arg("directory"))
        .def_property_readonly("digest", &service::Service::digest)
        .def(
            "get",
            [](const service::Service& s, const std::string& path, const std::map<std::string, std::string>& params) {
                service::Params p(params.begin(), params.end());
                const auto r = s.get(path, p);
                return py::make_tuple(r.status, r.body);
            },
            py::arg("path"), py::arg("params") = std::map<std::string, std::string>{})
        .def(
            "whatif",
            [](const service::Service& s, const std::string& body) {
                const auto r = s.whatif(body);
                return py::make_tuple(r.status, r.body);
            },
            py::arg("body"));
}
