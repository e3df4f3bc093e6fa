#include "fqr/qr_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fqr/errors.hpp"

namespace fqr {

double check_loss(const Eigen::VectorXd& residuals, double u) {
    if (!(u > 0.0 && u < 1.0)) throw_validation("check_loss: u must lie in (0,1)");
    const auto n = residuals.size();
    if (n == 0) throw_validation("check_loss: empty residual vector");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = residuals(i);
        acc += (r <= 0.0 ? u - 1.0 : u) * r;
    }
    return acc / static_cast<double>(n);
}

Eigen::VectorXd subgradient_vector(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses,
                                   const Eigen::VectorXd& coefficients, double u) {
    const Eigen::Index n = design.rows();
    if (responses.size() != n || coefficients.size() != design.cols())
        throw_validation("subgradient_vector: shape mismatch");
    Eigen::VectorXd fitted = design * coefficients;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(design.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double c = (responses(i) <= fitted(i)) ? u - 1.0 : u;
        out += c * design.row(i).transpose();
    }
    return out / static_cast<double>(n);
}

double certificate_bound(const Eigen::MatrixXd& design) {
    const double max_norm = design.rowwise().norm().maxCoeff();
    return static_cast<double>(design.cols()) / static_cast<double>(design.rows()) * max_norm;
}

namespace {

constexpr int kMaxIterations = 200;
constexpr double kGapTol = 1e-9;  // relative duality gap target, mean-loss scale

// Solve max c'x s.t. A x = b, 0 <= x <= 1 by Mehrotra predictor-corrector.
// The equality multipliers are exactly the check-loss coefficients, with
// A = Z', b = (1-u) Z' 1, c = y.
struct IpResult {
    Eigen::VectorXd beta;
    int iterations = 0;
    double gap = 0.0;  // certified objective gap, mean-loss scale
};

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd sol = ldlt.solve(rhs);
        if (sol.allFinite()) return sol;
    }
    // Rank-deficient designs are allowed; fall back to a ridged system.
    const double scale = M.diagonal().maxCoeff();
    for (double ridge = 1e-14; ridge <= 1e-6; ridge *= 100.0) {
        Eigen::MatrixXd Mr = M;
        Mr.diagonal().array() += ridge * std::max(scale, 1.0);
        Eigen::LDLT<Eigen::MatrixXd> l2(Mr);
        if (l2.info() != Eigen::Success) continue;
        Eigen::VectorXd sol = l2.solve(rhs);
        if (sol.allFinite()) return sol;
    }
    throw_solver("check-loss solver: normal-equation factorization failed");
}

IpResult interior_point(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double u) {
    const Eigen::Index n = Z.rows();
    const Eigen::Index k = Z.cols();
    const double nd = static_cast<double>(n);
    const double sum_y = y.sum();

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 - u);  // primal, A x = b exactly
    Eigen::VectorXd s = Eigen::VectorXd::Constant(n, u);        // slack, x + s = 1

    // Dual start: least-squares multipliers, reduced costs split positively.
    Eigen::VectorXd beta = solve_spd(Z.transpose() * Z, Z.transpose() * y);
    Eigen::VectorXd r = y - Z * beta;
    Eigen::VectorXd z(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pad = 1e-4 * (1.0 + std::fabs(r(i)));
        z(i) = std::max(r(i), 0.0) + pad;
        w(i) = std::max(-r(i), 0.0) + pad;
    }

    auto mean_loss = [&](const Eigen::VectorXd& b) {
        double acc = 0.0;
        Eigen::VectorXd res = y - Z * b;
        for (Eigen::Index i = 0; i < n; ++i) acc += (res(i) <= 0.0 ? u - 1.0 : u) * res(i);
        return acc / nd;
    };

    // Complementarity pairs for the max problem: a positive reduced cost
    // z_i = (c - A'y)_i+ pushes x_i to its upper bound, so z pairs with the
    // slack s and w pairs with x.
    IpResult out;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        // Certified gap: objective at current multipliers minus the LP bound
        // from the feasible primal point.
        const double primal_obj = mean_loss(beta);
        const double lp_bound = (y.dot(x) - (1.0 - u) * sum_y) / nd;
        const double gap = primal_obj - lp_bound;
        out.beta = beta;
        out.iterations = iter;
        out.gap = gap;
        if (gap <= kGapTol * (1.0 + std::fabs(primal_obj))) return out;

        Eigen::VectorXd q(n);
        for (Eigen::Index i = 0; i < n; ++i) q(i) = 1.0 / (z(i) / s(i) + w(i) / x(i));

        Eigen::MatrixXd normal = Z.transpose() * q.asDiagonal() * Z;

        // Affine predictor: target s.z = 0 and x.w = 0.
        Eigen::VectorXd rhsvec = z - w;
        Eigen::VectorXd dbeta = solve_spd(normal, Z.transpose() * (q.cwiseProduct(rhsvec)));
        Eigen::VectorXd dx = q.cwiseProduct(rhsvec - Z * dbeta);
        Eigen::VectorXd dz = (z.cwiseProduct(dx) - s.cwiseProduct(z)).cwiseQuotient(s);
        Eigen::VectorXd dw = -(x.cwiseProduct(w) + w.cwiseProduct(dx)).cwiseQuotient(x);

        auto primal_step = [&](const Eigen::VectorXd& d) {
            double a = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (d(i) < 0.0) a = std::min(a, -x(i) / d(i));
                if (d(i) > 0.0) a = std::min(a, s(i) / d(i));
            }
            return a;
        };
        auto dual_step = [&](const Eigen::VectorXd& daz, const Eigen::VectorXd& daw) {
            double a = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (daz(i) < 0.0) a = std::min(a, -z(i) / daz(i));
                if (daw(i) < 0.0) a = std::min(a, -w(i) / daw(i));
            }
            return a;
        };

        const double ap_aff = primal_step(dx);
        const double ad_aff = dual_step(dz, dw);
        const double mu = (s.dot(z) + x.dot(w)) / (2.0 * nd);
        const double gap_aff = (s - ap_aff * dx).dot(z + ad_aff * dz) +
                               (x + ap_aff * dx).dot(w + ad_aff * dw);
        const double mu_aff = gap_aff / (2.0 * nd);
        const double sigma = (mu > 0.0) ? std::pow(std::max(mu_aff, 0.0) / mu, 3.0) : 0.0;

        // Corrector.
        Eigen::VectorXd rsz =
            (sigma * mu) * Eigen::VectorXd::Ones(n) - s.cwiseProduct(z) + dx.cwiseProduct(dz);
        Eigen::VectorXd rxw =
            (sigma * mu) * Eigen::VectorXd::Ones(n) - x.cwiseProduct(w) - dx.cwiseProduct(dw);
        rhsvec = rxw.cwiseQuotient(x) - rsz.cwiseQuotient(s);
        dbeta = solve_spd(normal, Z.transpose() * (q.cwiseProduct(rhsvec)));
        dx = q.cwiseProduct(rhsvec - Z * dbeta);
        dz = (rsz + z.cwiseProduct(dx)).cwiseQuotient(s);
        dw = (rxw - w.cwiseProduct(dx)).cwiseQuotient(x);

        const double ap = std::min(1.0, 0.9995 * primal_step(dx));
        const double ad = std::min(1.0, 0.9995 * dual_step(dz, dw));

        x += ap * dx;
        s -= ap * dx;
        beta += ad * dbeta;
        z += ad * dz;
        w += ad * dw;
    }
    throw_solver("check-loss solver: duality gap did not close within iteration budget");
}

// Land exactly on the optimal vertex when the basis guess from the smallest
// residuals is right; otherwise keep the interior-point iterate.
Eigen::VectorXd polish_vertex(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double u,
                              const Eigen::VectorXd& beta_ip) {
    const Eigen::Index n = Z.rows();
    const Eigen::Index k = Z.cols();
    Eigen::VectorXd res = y - Z * beta_ip;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return std::fabs(res(a)) < std::fabs(res(b)); });

    Eigen::MatrixXd basis(k, k);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        basis.row(j) = Z.row(order[static_cast<std::size_t>(j)]);
        rhs(j) = y(order[static_cast<std::size_t>(j)]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    if (qr.rank() < k) return beta_ip;
    Eigen::VectorXd polished = qr.solve(rhs);
    if (!polished.allFinite()) return beta_ip;

    Eigen::VectorXd r_ip = y - Z * beta_ip;
    Eigen::VectorXd r_po = y - Z * polished;
    const double f_ip = check_loss(r_ip, u);
    const double f_po = check_loss(r_po, u);
    return (f_po <= f_ip + 1e-12 * (1.0 + std::fabs(f_ip))) ? polished : beta_ip;
}

}  // namespace

QrSolution solve_check_loss(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses, double u) {
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (!(u > 0.0 && u < 1.0)) throw_validation("solve_check_loss: u must lie in (0,1)");
    if (k < 1) throw_validation("solve_check_loss: empty design");
    if (responses.size() != n) throw_validation("solve_check_loss: response length mismatch");
    if (n <= k) throw_validation("solve_check_loss: needs n >= m + 2 observations");
    if (!design.allFinite() || !responses.allFinite())
        throw_validation("solve_check_loss: non-finite input");
    if ((design.col(0).array() != 1.0).any())
        throw_validation("solve_check_loss: design column 0 must be all ones");

    IpResult ip = interior_point(design, responses, u);
    Eigen::VectorXd beta = polish_vertex(design, responses, u, ip.beta);

    QrSolution sol;
    sol.coefficients = beta;
    sol.objective = check_loss(responses - design * beta, u);
    sol.subgradient_norm = subgradient_vector(design, responses, beta, u).norm();
    sol.u = u;
    sol.iterations = ip.iterations;
    sol.duality_gap = ip.gap;
    return sol;
}

}  // namespace fqr
