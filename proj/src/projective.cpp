#include "mwalk/projective.hpp"

#include <cmath>
#include <limits>

#include "mwalk/errors.hpp"
#include "mwalk/rng.hpp"

namespace mwalk {

void canonicalize_sign(Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-14) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

ProjectivePoint::ProjectivePoint(const Eigen::VectorXd& v) {
    if (v.size() < 2) throw ConfigError("ProjectivePoint: dimension must be >= 2");
    if (!v.allFinite()) throw NumericalError("ProjectivePoint: non-finite coordinates");
    const double norm = v.norm();
    if (!(norm > 0.0)) throw NumericalError("ProjectivePoint: zero vector");
    rep_ = v / norm;
    canonicalize_sign(rep_);
}

bool ProjectivePoint::same_point(const ProjectivePoint& other, double tol) const {
    return dim() == other.dim() && proj_metric(*this, other) <= tol;
}

ProjectivePoint ProjectivePoint::axis(int d, int i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    v(i) = 1.0;
    return ProjectivePoint(v);
}

double proj_metric(const ProjectivePoint& x, const ProjectivePoint& y) {
    // Order the arguments canonically so the rejection is evaluated the same
    // way for (x, y) and (y, x): exact symmetry, not just up to rounding.
    const Eigen::VectorXd* a = &x.rep();
    const Eigen::VectorXd* b = &y.rep();
    for (int i = 0; i < a->size(); ++i) {
        if ((*a)(i) != (*b)(i)) {
            if ((*a)(i) > (*b)(i)) std::swap(a, b);
            break;
        }
    }
    const double c = a->dot(*b);
    const Eigen::VectorXd rejection = *b - c * *a;
    return std::min(rejection.norm(), 1.0);
}

double log_proj_metric(const Eigen::VectorXd& ux, const Eigen::VectorXd& uy) {
    const double c = ux.dot(uy);
    const double rn = (uy - c * ux).norm();
    if (rn <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(std::min(rn, 1.0));
}

double coeff_delta(const ProjectivePoint& x, const ProjectivePoint& y) {
    return std::min(std::abs(x.rep().dot(y.rep())), 1.0);
}

double cocycle(const InvertibleMatrix& g, const ProjectivePoint& x) {
    const double scale = g.entries().cwiseAbs().maxCoeff();
    const Eigen::VectorXd image = (g.entries() / scale) * x.rep();
    const double norm = image.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericalError("cocycle: degenerate image norm");
    }
    return std::log(norm) + std::log(scale);
}

ProjectivePoint act(const InvertibleMatrix& g, const ProjectivePoint& x) {
    const double scale = g.entries().cwiseAbs().maxCoeff();
    const Eigen::VectorXd image = (g.entries() / scale) * x.rep();
    return ProjectivePoint(image);
}

double act_with_gain(const Eigen::MatrixXd& g, Eigen::VectorXd& u,
                     Eigen::VectorXd& scratch) {
    scratch.noalias() = g * u;
    const double norm = scratch.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericalError("act_with_gain: degenerate image norm");
    }
    u = scratch / norm;
    return std::log(norm);
}

double h_regularity(double q_index, double t) {
    if (!(q_index > 0.0)) throw ConfigError("h_regularity: q must be > 0");
    if (t < 0.0 || t > 1.0) throw ConfigError("h_regularity: t must lie in [0,1]");
    if (t == 0.0) return 0.0;
    // log(t e^{-q-1}) = log t - q - 1 <= -(q+1) < 0 on (0,1].
    return std::pow(q_index + 1.0 - std::log(t), -q_index);
}

RegularityGap regularity_gap(const InvertibleMatrix& g, const ProjectivePoint& x,
                             const ProjectivePoint& y, double kappa, double c_kappa) {
    if (!(kappa > 1.0)) throw ConfigError("regularity_gap: kappa must be > 1");
    RegularityGap out;
    out.gap = std::abs(cocycle(g, x) - cocycle(g, y));
    const double dist = proj_metric(x, y);
    const double size = g.sizeN();
    out.lip_bound = std::sqrt(2.0) * size * size * dist;
    out.holder_bound =
        c_kappa * std::pow(1.0 + std::log(size), kappa) * h_regularity(kappa - 1.0, dist);
    return out;
}

double calibrate_holder_constant(double kappa, std::uint64_t seed, int trials, int dim) {
    RngStream rng(seed, kAuxStreamBase + 17);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Eigen::MatrixXd m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = rng.next_normal();
        if (std::abs(m.determinant()) < 1e-8) continue;
        InvertibleMatrix g(m);
        Eigen::VectorXd vx(dim), vy(dim);
        for (int i = 0; i < dim; ++i) vx(i) = rng.next_normal();
        for (int i = 0; i < dim; ++i) vy(i) = rng.next_normal();
        // Half the corpus stresses nearly coincident pairs where H is small.
        if (t % 2 == 1) vy = vx + std::pow(10.0, -1.0 - 10.0 * rng.next_double()) * vy;
        ProjectivePoint x(vx), y(vy);
        const double dist = proj_metric(x, y);
        if (dist == 0.0) continue;
        const double gap = std::abs(cocycle(g, x) - cocycle(g, y));
        const double denom =
            std::pow(1.0 + std::log(g.sizeN()), kappa) * h_regularity(kappa - 1.0, dist);
        if (denom > 0.0) worst = std::max(worst, gap / denom);
    }
    return worst;
}

}  // namespace mwalk
