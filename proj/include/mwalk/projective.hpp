#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mwalk/matrix.hpp"

namespace mwalk {

// A point of P_{d-1}(R): a unit vector canonicalized so the first coordinate
// with |value| > 1e-14 is positive. The sign quotient is exact:
// ProjectivePoint(v) == ProjectivePoint(-v).
class ProjectivePoint {
public:
    explicit ProjectivePoint(const Eigen::VectorXd& v);

    const Eigen::VectorXd& rep() const { return rep_; }
    int dim() const { return static_cast<int>(rep_.size()); }

    bool same_point(const ProjectivePoint& other, double tol = 1e-12) const;

    // i-th coordinate axis of P_{d-1}(R).
    static ProjectivePoint axis(int d, int i);

private:
    Eigen::VectorXd rep_;
};

// Canonical sign fix applied in place to a unit vector.
void canonicalize_sign(Eigen::VectorXd& v);

// Projective metric d(x,y) = ||x ^ y|| / (||x|| ||y||) = sin of the angle
// between the lines. Computed from the orthogonal rejection of y onto the
// complement of x, which is stable when the lines nearly coincide.
double proj_metric(const ProjectivePoint& x, const ProjectivePoint& y);

// Same metric in log scale; exact for separated points, and accurate deep
// below double underflow of d^2 cancellation (used by coupled walks).
double log_proj_metric(const Eigen::VectorXd& ux, const Eigen::VectorXd& uy);

// delta(x,y) = |<x,y>| / (||x|| ||y||); satisfies delta^2 + d^2 = 1.
double coeff_delta(const ProjectivePoint& x, const ProjectivePoint& y);

// Norm cocycle sigma(g, x) = log(||g x|| / ||x||). Scaled evaluation guards
// against overflow; |sigma(g,x)| <= log N(g) always.
double cocycle(const InvertibleMatrix& g, const ProjectivePoint& x);

// Projective action g . x = line through g x.
ProjectivePoint act(const InvertibleMatrix& g, const ProjectivePoint& x);

// Hot-path action on a raw unit vector: u <- g u / ||g u|| (no sign
// canonicalization), returns the cocycle increment log ||g u||.
double act_with_gain(const Eigen::MatrixXd& g, Eigen::VectorXd& u,
                     Eigen::VectorXd& scratch);

// H_q regularity modulus: H_q(0) = 0, H_q(t) = |log(t e^{-q-1})|^{-q} on (0,1].
// Nondecreasing and concave.
double h_regularity(double q_index, double t);

struct RegularityGap {
    double gap;          // |sigma(g,x) - sigma(g,y)|
    double lip_bound;    // sqrt(2) N(g)^2 d(x,y)
    double holder_bound; // C_kappa (1 + log N(g))^kappa H_{kappa-1}(d(x,y))
};

RegularityGap regularity_gap(const InvertibleMatrix& g, const ProjectivePoint& x,
                             const ProjectivePoint& y, double kappa, double c_kappa);

// Empirical max of gap / ((1 + log N)^kappa H_{kappa-1}(d)) over a seeded
// corpus of random (g, x, y); used once to freeze C_kappa.
double calibrate_holder_constant(double kappa, std::uint64_t seed, int trials,
                                 int dim = 3);

}  // namespace mwalk
