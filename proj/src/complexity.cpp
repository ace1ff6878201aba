#include "atlas/complexity.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace atlas::complexity {

using Sparse = Eigen::SparseMatrix<double>;

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

/// Rows of `b` in the largest co-occurrence component, ascending. Ties go to the
/// component holding the lowest row index.
std::vector<std::size_t> largest_component(const Sparse& b) {
    const auto n = static_cast<std::size_t>(b.rows());
    DisjointSets sets(n);
    for (Eigen::Index f = 0; f < b.cols(); ++f) {
        Sparse::InnerIterator it(b, f);
        if (!it) continue;
        const auto first = static_cast<std::size_t>(it.row());
        for (++it; it; ++it) sets.unite(first, static_cast<std::size_t>(it.row()));
    }
    std::vector<std::size_t> size(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++size[sets.find(i)];
    std::size_t best = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (size[r] > size[best]) best = r;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i)
        if (sets.find(i) == best) rows.push_back(i);
    return rows;
}

Sparse select_rows(const Sparse& b, const std::vector<std::size_t>& rows) {
    std::vector<Eigen::Index> map(b.rows(), -1);
    for (std::size_t k = 0; k < rows.size(); ++k) map[rows[k]] = static_cast<Eigen::Index>(k);
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index f = 0; f < b.cols(); ++f)
        for (Sparse::InnerIterator it(b, f); it; ++it)
            if (map[it.row()] >= 0) t.emplace_back(map[it.row()], f, it.value());
    Sparse out(static_cast<Eigen::Index>(rows.size()), b.cols());
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

struct Degrees {
    Eigen::VectorXd row;  // k over nodes
    Eigen::VectorXd col;  // k over features
};

Degrees degrees(const Sparse& b) {
    Degrees d;
    d.row = b * Eigen::VectorXd::Ones(b.cols());
    d.col = b.transpose() * Eigen::VectorXd::Ones(b.rows());
    return d;
}

// Features outside the retained component have degree 0 and drop out.
Eigen::VectorXd inverse_or_zero(const Eigen::VectorXd& v) {
    return v.unaryExpr([](double x) { return x > 0.0 ? 1.0 / x : 0.0; });
}

/// Symmetric form S = D^-1/2 B W Bᵀ D^-1/2, similar to M̃ = D^-1 B W Bᵀ.
struct SymmetricOperator {
    const Sparse& b;
    Eigen::VectorXd inv_sqrt_row;
    Eigen::VectorXd inv_col;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y = inv_sqrt_row.cwiseProduct(x);
        Eigen::VectorXd f = b.transpose() * y;
        f = f.cwiseProduct(inv_col);
        y = b * f;
        return inv_sqrt_row.cwiseProduct(y);
    }
};

CouplingMatrix dense_second(const Sparse& b, const Degrees& d, const EigenOptions& opts) {
    const Eigen::Index n = b.rows();
    CouplingMatrix out;
    const Eigen::MatrixXd dense_b(b);
    const Eigen::MatrixXd a = dense_b * inverse_or_zero(d.col).asDiagonal() * dense_b.transpose();
    out.mtilde = d.row.cwiseInverse().asDiagonal() * a;

    const double residual = (out.mtilde.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (residual > 1e-9) {
        std::ostringstream msg;
        msg << "coupling matrix is not row-stochastic (residual " << residual << ")";
        throw Error("complexity", "not_stochastic", msg.str());
    }

    const Eigen::VectorXd s = d.row.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd sym = s.asDiagonal() * a * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw Error("complexity", "eigensolve_failed", "symmetric eigensolver did not converge");
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    if (std::abs(ev(n - 1) - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "leading eigenvalue " << ev(n - 1) << " differs from 1";
        throw Error("complexity", "not_stochastic", msg.str());
    }
    if (n >= 3 && ev(n - 2) - ev(n - 3) < opts.degeneracy_tol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "second eigenvalue is degenerate (" << ev(n - 2) << " vs " << ev(n - 3) << ")";
        throw Error("complexity", "degenerate_eigenvalue", msg.str());
    }
    out.eigenvalue = ev(n - 2);
    out.eigenvector = s.cwiseProduct(es.eigenvectors().col(n - 2));
    return out;
}

CouplingMatrix iterative_second(const Sparse& b, const Degrees& d, const EigenOptions& opts) {
    const Eigen::Index n = b.rows();
    SymmetricOperator op{b, d.row.cwiseSqrt().cwiseInverse(), inverse_or_zero(d.col)};

    const Eigen::VectorXd lead = d.row.cwiseSqrt().normalized();
    const double lead_residual = (op.apply(lead) - lead).lpNorm<Eigen::Infinity>();
    if (lead_residual > 1e-9) {
        std::ostringstream msg;
        msg << "coupling matrix is not row-stochastic (residual " << lead_residual << ")";
        throw Error("complexity", "not_stochastic", msg.str());
    }

    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = std::cos(0.7 * static_cast<double>(i)) + 0.1;
    x -= lead.dot(x) * lead;
    x.normalize();

    CouplingMatrix out;
    for (int it = 1; it <= opts.max_iter; ++it) {
        Eigen::VectorXd y = op.apply(x);
        y -= lead.dot(y) * lead;
        const double norm = y.norm();
        if (!(norm > 0.0))
            throw Error("complexity", "eigensolve_failed", "power iteration collapsed to zero");
        y /= norm;
        const double change = (y - x).lpNorm<Eigen::Infinity>();
        x = std::move(y);
        if (change < opts.tol) {
            out.iterations = it;
            out.eigenvalue = x.dot(op.apply(x));
            out.eigenvector = op.inv_sqrt_row.cwiseProduct(x);
            return out;
        }
    }
    const Eigen::VectorXd sx = op.apply(x);
    const double lambda = x.dot(sx);
    std::ostringstream msg;
    msg << "power iteration did not converge in " << opts.max_iter
        << " iterations (residual norm " << (sx - lambda * x).norm() << ")";
    throw Error("complexity", "not_converged", msg.str());
}

IndexResult second_eigen_index(const Registry& nodes, const Sparse& b,
                               const std::vector<int>& orient_by, bool positive,
                               const EigenOptions& opts) {
    IndexResult out;
    out.nodes = nodes;
    out.score.assign(nodes.size(), std::nullopt);

    for (std::size_t i = 0; i < orient_by.size(); ++i)
        if (orient_by[i] <= 0)
            throw Error("complexity", "empty_row",
                        "'" + nodes[i] + "' has no advantage entries; prune before computing");

    out.component = largest_component(b);
    for (std::size_t i = 0, k = 0; i < nodes.size(); ++i) {
        if (k < out.component.size() && out.component[k] == i)
            ++k;
        else
            out.excluded.push_back(nodes[i]);
    }
    if (out.component.size() < 2)
        throw Error("complexity", "too_small", "need at least two connected nodes");

    const Sparse sub = out.component.size() == nodes.size() ? b : select_rows(b, out.component);
    const Degrees d = degrees(sub);
    out.coupling = sub.rows() <= opts.dense_limit ? dense_second(sub, d, opts)
                                                  : iterative_second(sub, d, opts);

    const Eigen::VectorXd& k = out.coupling.eigenvector;
    const double mean = k.mean();
    const double sd = std::sqrt((k.array() - mean).square().mean());
    if (!(sd > 0.0)) throw Error("complexity", "degenerate_eigenvector", "eigenvector is constant");
    Eigen::VectorXd z = (k.array() - mean) / sd;

    Eigen::VectorXd deg(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) deg(i) = orient_by[out.component[i]];
    double cov = z.dot((deg.array() - deg.mean()).matrix());
    if (std::abs(cov) < 1e-12 * z.size()) {
        // Degree does not fix the orientation; pin it on the first clearly nonzero entry.
        cov = 0.0;
        for (Eigen::Index i = 0; i < z.size() && cov == 0.0; ++i)
            if (std::abs(z(i)) > 1e-9) cov = positive ? z(i) : -z(i);
    }
    if ((positive && cov < 0.0) || (!positive && cov > 0.0)) z = -z;

    for (Eigen::Index i = 0; i < z.size(); ++i) out.score[out.component[i]] = z(i);
    return out;
}

}  // namespace

Eigen::MatrixXd coupling_matrix(const Sparse& b) {
    const Degrees d = degrees(b);
    const Eigen::MatrixXd dense_b(b);
    return inverse_or_zero(d.row).asDiagonal() * dense_b * inverse_or_zero(d.col).asDiagonal() *
           dense_b.transpose();
}

IndexResult eci(const matrix::AdvantageMatrix& adv, const EigenOptions& opts) {
    return second_eigen_index(adv.countries, adv.m, adv.diversity, true, opts);
}

IndexResult pci(const matrix::AdvantageMatrix& adv, const EigenOptions& opts) {
    const Sparse t = adv.m.transpose();
    return second_eigen_index(adv.products, t, adv.ubiquity, false, opts);
}

FitnessResult fitness(const matrix::AdvantageMatrix& adv, double tol, int max_iter) {
    for (std::size_t i = 0; i < adv.diversity.size(); ++i)
        if (adv.diversity[i] == 0)
            throw Error("complexity", "empty_row", "country '" + adv.countries[i] + "' has no products");
    for (std::size_t j = 0; j < adv.ubiquity.size(); ++j)
        if (adv.ubiquity[j] == 0)
            throw Error("complexity", "empty_row", "product '" + adv.products[j] + "' has no exporters");

    const Sparse& m = adv.m;
    const Sparse mt = m.transpose();
    FitnessResult r;
    r.fitness = Eigen::VectorXd::Ones(m.rows());
    r.quality = Eigen::VectorXd::Ones(m.cols());
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd f = m * r.quality;
        Eigen::VectorXd q = (mt * r.fitness.cwiseInverse()).cwiseInverse();
        f /= f.mean();
        q /= q.mean();
        if (!f.allFinite() || !q.allFinite())
            throw Error("complexity", "non_finite",
                        "fitness iteration " + std::to_string(it) + " produced a non-finite value");
        const double change =
            std::max((f - r.fitness).lpNorm<Eigen::Infinity>() / r.fitness.lpNorm<Eigen::Infinity>(),
                     (q - r.quality).lpNorm<Eigen::Infinity>() / r.quality.lpNorm<Eigen::Infinity>());
        r.fitness = std::move(f);
        r.quality = std::move(q);
        r.iterations = it;
        r.last_change = change;
        if (change < tol) {
            r.converged = true;
            break;
        }
    }
    return r;
}

Eigen::VectorXd entropy(const matrix::ShareMatrix& s) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(s.values.rows());
    for (Eigen::Index i = 0; i < s.values.rows(); ++i)
        for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
            const double p = s.values(i, j);
            if (p > 0.0) h(i) -= p * std::log(p);
        }
    return h;
}

Eigen::VectorXd hhi(const matrix::ShareMatrix& s) { return s.values.rowwise().squaredNorm(); }

ComplexityScores compute_scores(const std::string& period, const matrix::AdvantageMatrix& adv,
                                const matrix::ShareMatrix& shares, const EigenOptions& opts) {
    ComplexityScores out;
    out.period = period;
    out.countries = shares.countries;
    out.products = adv.products;

    const auto pruned = matrix::prune(adv);
    const auto e = eci(pruned, opts);
    const auto p = pci(pruned, opts);
    const auto f = fitness(pruned);
    const auto h = entropy(shares);
    const auto c = hhi(shares);

    out.eci.assign(out.countries.size(), std::nullopt);
    out.fitness.assign(out.countries.size(), std::nullopt);
    out.entropy.assign(h.data(), h.data() + h.size());
    out.hhi.assign(c.data(), c.data() + c.size());
    for (std::size_t i = 0; i < pruned.countries.size(); ++i) {
        auto k = out.countries.index_of(pruned.countries[i]);
        if (!k) throw Error("complexity", "registry", "country '" + pruned.countries[i] + "' has no shares");
        out.eci[*k] = e.score[i];
        out.fitness[*k] = f.fitness(static_cast<Eigen::Index>(i));
    }
    out.pci.assign(out.products.size(), std::nullopt);
    out.product_quality.assign(out.products.size(), std::nullopt);
    for (std::size_t j = 0; j < pruned.products.size(); ++j) {
        auto k = *out.products.index_of(pruned.products[j]);
        out.pci[k] = p.score[j];
        out.product_quality[k] = f.quality(static_cast<Eigen::Index>(j));
    }
    for (std::size_t i = 0; i < out.countries.size(); ++i)
        if (!out.eci[i]) out.eci_missing.push_back(out.countries[i]);
    for (std::size_t j = 0; j < out.products.size(); ++j)
        if (!out.pci[j]) out.pci_missing.push_back(out.products[j]);
    out.fitness_converged = f.converged;
    out.fitness_iterations = f.iterations;
    return out;
}

}  // namespace atlas::complexity
