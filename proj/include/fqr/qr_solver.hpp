#pragma once

#include <Eigen/Dense>

namespace fqr {

/// Minimizer of the empirical check loss for one quantile index, with the
/// optimality certificate attached.
struct QrSolution {
    Eigen::VectorXd coefficients;  // intercept first, then score coefficients
    double objective = 0.0;        // attained mean check loss
    double subgradient_norm = 0.0;
    double u = 0.0;
    int iterations = 0;
    double duality_gap = 0.0;  // certified bound on objective minus the optimum
};

/// Mean check loss (1/n) sum rho_u(r_i) with rho_u(y) = {u - 1(y <= 0)} y.
double check_loss(const Eigen::VectorXd& residuals, double u);

/// (1/n) sum {u - 1(y_i <= z_i . beta)} z_i, the first-order vector whose
/// norm certifies optimality: at any exact minimizer it is bounded by
/// (k/n) max_i ||z_i|| for generic data (k = number of columns).
Eigen::VectorXd subgradient_vector(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses,
                                   const Eigen::VectorXd& coefficients, double u);

/// (k/n) max_i ||z_i||, the certificate bound for a given design.
double certificate_bound(const Eigen::MatrixXd& design);

/// Minimize the mean check loss over coefficients by a primal-dual interior
/// point method on the bounded-variable LP dual, followed by a vertex polish.
/// Requires n >= k + 1, design column 0 all ones, u in (0,1). Throws a solver
/// error if the duality gap does not close within the iteration budget.
QrSolution solve_check_loss(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses, double u);

}  // namespace fqr
