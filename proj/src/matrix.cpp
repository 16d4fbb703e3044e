#include "mwalk/matrix.hpp"

#include <cmath>
#include <string>

namespace mwalk {

namespace {

double power_iteration_norm(const Eigen::MatrixXd& m) {
    // Largest singular value via power iteration on m^T m.
    const Eigen::MatrixXd gram = m.transpose() * m;
    const int d = static_cast<int>(gram.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d).normalized();
    double value = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXd next = gram * v;
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        next /= norm;
        const double raleigh = next.dot(gram * next);
        if (it > 0 && std::abs(raleigh - value) <= 1e-12 * std::abs(raleigh)) {
            value = raleigh;
            break;
        }
        value = raleigh;
        v = next;
    }
    return std::sqrt(std::max(value, 0.0));
}

}  // namespace

double operator_norm(const Eigen::MatrixXd& m) {
    if (m.rows() <= 16) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        return svd.singularValues()(0);
    }
    return power_iteration_norm(m);
}

double smallest_singular_value(const Eigen::MatrixXd& m) {
    if (m.rows() <= 16) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        return svd.singularValues()(svd.singularValues().size() - 1);
    }
    // sigma_min(m) = 1 / sigma_max(m^-1).
    const Eigen::MatrixXd inv = m.partialPivLu().inverse();
    const double inv_norm = power_iteration_norm(inv);
    return inv_norm > 0.0 ? 1.0 / inv_norm : 0.0;
}

InvertibleMatrix::InvertibleMatrix(Eigen::MatrixXd entries)
    : entries_(std::move(entries)), sizeN_(0.0) {
    validate();
    sizeN_ = recompute_sizeN();
}

InvertibleMatrix::InvertibleMatrix(Eigen::MatrixXd entries, double known_size)
    : entries_(std::move(entries)), sizeN_(known_size) {
    validate();
    if (!(known_size >= 1.0)) {
        throw NumericalError("InvertibleMatrix: cached size functional must be >= 1");
    }
}

void InvertibleMatrix::validate() const {
    if (entries_.rows() < 2 || entries_.rows() != entries_.cols()) {
        throw ConfigError("InvertibleMatrix: requires a square matrix with d >= 2");
    }
    if (!entries_.allFinite()) {
        throw NumericalError("InvertibleMatrix: non-finite entries");
    }
    const double det = entries_.fullPivLu().determinant();
    if (!(std::abs(det) > 1e-300)) {
        throw NumericalError("InvertibleMatrix: determinant below invertibility guard (|det| <= 1e-300)");
    }
}

double InvertibleMatrix::recompute_sizeN() const {
    const double top = operator_norm(entries_);
    const double bottom = smallest_singular_value(entries_);
    if (bottom <= 0.0) {
        throw NumericalError("InvertibleMatrix: zero smallest singular value");
    }
    return std::max(top, 1.0 / bottom);
}

InvertibleMatrix InvertibleMatrix::inverse() const {
    return InvertibleMatrix(entries_.partialPivLu().inverse(), sizeN_);
}

InvertibleMatrix InvertibleMatrix::identity(int d) {
    return InvertibleMatrix(Eigen::MatrixXd::Identity(d, d), 1.0);
}

InvertibleMatrix InvertibleMatrix::diagonal(const Eigen::VectorXd& diag) {
    double size = 0.0;
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        const double a = std::abs(diag(i));
        if (a == 0.0) throw NumericalError("diagonal: zero diagonal entry");
        size = std::max(size, std::max(a, 1.0 / a));
    }
    return InvertibleMatrix(Eigen::MatrixXd(diag.asDiagonal()), size);
}

InvertibleMatrix InvertibleMatrix::rotation2(double angle) {
    return plane_rotation(2, 0, 1, angle);
}

InvertibleMatrix InvertibleMatrix::plane_rotation(int d, int i, int j, double angle) {
    if (i == j || i < 0 || j < 0 || i >= d || j >= d) {
        throw ConfigError("plane_rotation: invalid plane indices");
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    m(i, i) = c;
    m(j, j) = c;
    m(i, j) = -s;
    m(j, i) = s;
    return InvertibleMatrix(std::move(m), 1.0);
}

}  // namespace mwalk
