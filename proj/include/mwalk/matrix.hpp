#pragma once

#include <Eigen/Dense>

#include "mwalk/errors.hpp"

namespace mwalk {

// Operator (spectral) norm. Full SVD for dim <= 16, power iteration on
// m^T m (relative tolerance 1e-12, capped at 1e4 iterations) above.
double operator_norm(const Eigen::MatrixXd& m);

// Smallest singular value, same strategy as operator_norm.
double smallest_singular_value(const Eigen::MatrixXd& m);

// An element of GL_d(R) with its size functional N(g) = max(||g||, ||g^-1||)
// cached at construction. N(g^-1) = N(g) and N(g) >= 1 always.
class InvertibleMatrix {
public:
    // Validates finiteness and invertibility (|det| > 1e-300), computes N(g).
    explicit InvertibleMatrix(Eigen::MatrixXd entries);

    // Trusted-cache constructor for matrices whose N(g) is known exactly
    // (orthogonal factors, diagonal dilations). Still validates invertibility.
    InvertibleMatrix(Eigen::MatrixXd entries, double known_size);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    double sizeN() const { return sizeN_; }

    // Recomputes N(g) from the entries (cache consistency checks).
    double recompute_sizeN() const;

    InvertibleMatrix inverse() const;

    static InvertibleMatrix identity(int d);
    static InvertibleMatrix diagonal(const Eigen::VectorXd& diag);
    // 2x2 rotation by `angle`; N = 1 exactly.
    static InvertibleMatrix rotation2(double angle);
    // Rotation by `angle` in the (i, j) coordinate plane of R^d; N = 1 exactly.
    static InvertibleMatrix plane_rotation(int d, int i, int j, double angle);

private:
    void validate() const;

    Eigen::MatrixXd entries_;
    double sizeN_;
};

}  // namespace mwalk
