#include "mwalk/measure.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <functional>
#include <limits>

#include "mwalk/errors.hpp"

namespace mwalk {

std::string to_string(MeasureKind kind) {
    switch (kind) {
        case MeasureKind::PointMass: return "point-mass";
        case MeasureKind::FiniteSupport: return "finite-support";
        case MeasureKind::RotationDilation: return "rotation-dilation";
        case MeasureKind::HeavyLogTail: return "heavy-log-tail";
    }
    return "unknown";
}

MeasureKind measure_kind_from_string(const std::string& name) {
    if (name == "point-mass") return MeasureKind::PointMass;
    if (name == "finite-support") return MeasureKind::FiniteSupport;
    if (name == "rotation-dilation") return MeasureKind::RotationDilation;
    if (name == "heavy-log-tail") return MeasureKind::HeavyLogTail;
    throw ConfigError("measure.kind: unknown kind '" + name + "'");
}

void MatrixMeasure::validate() const {
    if (dim < 2) throw ConfigError("measure.dim: must be >= 2");
    switch (kind) {
        case MeasureKind::PointMass:
            if (atoms.size() != 1) throw ConfigError("measure.atoms: point-mass requires exactly one atom");
            break;
        case MeasureKind::FiniteSupport: {
            if (atoms.empty()) throw ConfigError("measure.atoms: finite-support requires atoms");
            double total = 0.0;
            for (const auto& [atom, prob] : atoms) {
                if (!(prob > 0.0)) throw ConfigError("measure.atoms: probabilities must be > 0");
                if (atom.dim() != dim) throw ConfigError("measure.atoms: atom dimension mismatch");
                total += prob;
            }
            if (std::abs(total - 1.0) > 1e-12) {
                throw ConfigError("measure.atoms: probabilities must sum to 1 (got " +
                                  std::to_string(total) + ")");
            }
            break;
        }
        case MeasureKind::RotationDilation:
            if (dilation_log < 0.0) throw ConfigError("measure.dilationLog: must be >= 0");
            break;
        case MeasureKind::HeavyLogTail:
            if (!(tail_index > 0.0)) throw ConfigError("measure.tailIndex: must be > 0");
            break;
    }
    for (const auto& [atom, prob] : atoms) {
        (void)prob;
        if (atom.dim() != dim) throw ConfigError("measure.atoms: atom dimension mismatch");
    }
}

MatrixMeasure MatrixMeasure::point_mass(InvertibleMatrix atom) {
    MatrixMeasure m;
    m.dim = atom.dim();
    m.kind = MeasureKind::PointMass;
    m.atoms.emplace_back(std::move(atom), 1.0);
    m.moment_order = std::numeric_limits<double>::infinity();
    return m;
}

MatrixMeasure MatrixMeasure::finite_support(
    std::vector<std::pair<InvertibleMatrix, double>> atoms) {
    if (atoms.empty()) throw ConfigError("finite_support: requires atoms");
    MatrixMeasure m;
    m.dim = atoms.front().first.dim();
    m.kind = MeasureKind::FiniteSupport;
    m.atoms = std::move(atoms);
    m.moment_order = std::numeric_limits<double>::infinity();
    m.validate();
    return m;
}

MatrixMeasure MatrixMeasure::rotation_dilation(int dim, double dilation_log) {
    MatrixMeasure m;
    m.dim = dim;
    m.kind = MeasureKind::RotationDilation;
    m.dilation_log = dilation_log;
    m.strongly_irreducible = true;
    m.proximal = dilation_log > 0.0;
    m.moment_order = std::numeric_limits<double>::infinity();
    m.validate();
    return m;
}

MatrixMeasure MatrixMeasure::heavy_log_tail(int dim, double tail_index) {
    MatrixMeasure m;
    m.dim = dim;
    m.kind = MeasureKind::HeavyLogTail;
    m.tail_index = tail_index;
    m.strongly_irreducible = true;
    m.proximal = true;
    m.moment_order = tail_index;
    m.validate();
    return m;
}

MatrixMeasure MatrixMeasure::bernoulli_reduction(double log_c, double angle1, double angle2) {
    const double c = std::exp(log_c);
    Eigen::MatrixXd a1 = c * InvertibleMatrix::rotation2(angle1).entries();
    Eigen::MatrixXd a2 = (1.0 / c) * InvertibleMatrix::rotation2(angle2).entries();
    std::vector<std::pair<InvertibleMatrix, double>> atoms;
    atoms.emplace_back(InvertibleMatrix(std::move(a1), std::max(c, 1.0 / c)), 0.5);
    atoms.emplace_back(InvertibleMatrix(std::move(a2), std::max(c, 1.0 / c)), 0.5);
    MatrixMeasure m = finite_support(std::move(atoms));
    m.strongly_irreducible = false;  // scalar multiples of rotations
    m.proximal = false;
    return m;
}

std::uint64_t measure_digest(const MatrixMeasure& measure) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 0x100000001b3ull;
        }
    };
    auto mix_double = [&](double x) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        mix(bits);
    };
    mix(static_cast<std::uint64_t>(measure.dim));
    mix(static_cast<std::uint64_t>(measure.kind));
    mix_double(measure.tail_index);
    mix_double(measure.dilation_log);
    mix_double(measure.moment_order);
    mix(measure.strongly_irreducible ? 1 : 0);
    mix(measure.proximal ? 1 : 0);
    for (const auto& [atom, prob] : measure.atoms) {
        mix_double(prob);
        const auto& e = atom.entries();
        for (Eigen::Index i = 0; i < e.size(); ++i) mix_double(e.data()[i]);
    }
    return h;
}

Eigen::MatrixXd sample_orthogonal(int dim, RngStream& rng) {
    Eigen::MatrixXd gauss(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) gauss(i, j) = rng.next_normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the sign convention so Q is a measurable function of the Gaussian
    // draw (Haar on O(d)).
    for (int j = 0; j < dim; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

namespace {

InvertibleMatrix sample_once(const MatrixMeasure& measure, RngStream& rng) {
    switch (measure.kind) {
        case MeasureKind::PointMass:
            return measure.atoms.front().first;
        case MeasureKind::FiniteSupport: {
            const double u = rng.next_double();
            double acc = 0.0;
            for (const auto& [atom, prob] : measure.atoms) {
                acc += prob;
                if (u < acc) return atom;
            }
            return measure.atoms.back().first;
        }
        case MeasureKind::RotationDilation:
        case MeasureKind::HeavyLogTail: {
            double s = measure.dilation_log;
            if (measure.kind == MeasureKind::HeavyLogTail) {
                // Pareto-type law: P(s > v) = (1 + v)^{-ptilde}, so
                // E[s^q] < infinity iff q < ptilde.
                const double u = rng.next_double_open();
                s = std::pow(u, -1.0 / measure.tail_index) - 1.0;
            }
            const int d = measure.dim;
            if (s == 0.0) {
                return InvertibleMatrix(sample_orthogonal(d, rng), 1.0);
            }
            Eigen::VectorXd diag = Eigen::VectorXd::Ones(d);
            diag(0) = std::exp(s);
            diag(1) = std::exp(-s);
            const Eigen::MatrixXd left = sample_orthogonal(d, rng);
            const Eigen::MatrixXd right = sample_orthogonal(d, rng);
            // Orthogonal factors preserve singular values: N = e^{|s|} exactly.
            return InvertibleMatrix(left * diag.asDiagonal() * right, std::exp(std::abs(s)));
        }
    }
    throw ConfigError("sample: unknown measure kind");
}

}  // namespace

InvertibleMatrix sample(const MatrixMeasure& measure, RngStream& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        try {
            return sample_once(measure, rng);
        } catch (const NumericalError&) {
            continue;  // resample guard
        }
    }
    throw NumericalError("sample: 100 consecutive draws failed the invertibility guard; "
                         "the measure specification is degenerate");
}

namespace {

// log N(g) of one draw, computed in closed form per kind so that heavy-tail
// sizes far beyond double range still contribute to the moment estimate.
double draw_log_size(const MatrixMeasure& measure, RngStream& rng) {
    switch (measure.kind) {
        case MeasureKind::PointMass:
            return std::log(measure.atoms.front().first.sizeN());
        case MeasureKind::FiniteSupport: {
            const double u = rng.next_double();
            double acc = 0.0;
            for (const auto& [atom, prob] : measure.atoms) {
                acc += prob;
                if (u < acc) return std::log(atom.sizeN());
            }
            return std::log(measure.atoms.back().first.sizeN());
        }
        case MeasureKind::RotationDilation:
            return std::abs(measure.dilation_log);
        case MeasureKind::HeavyLogTail: {
            const double u = rng.next_double_open();
            return std::pow(u, -1.0 / measure.tail_index) - 1.0;
        }
    }
    throw ConfigError("estimate_log_moment: unknown measure kind");
}

}  // namespace

LogMomentEstimate estimate_log_moment(const MatrixMeasure& measure, double q,
                                      int n_samples, RngStream& rng) {
    if (!(q > 0.0)) throw ConfigError("estimate_log_moment: q must be > 0");
    if (n_samples < 100) throw ConfigError("estimate_log_moment: nSamples must be >= 100");
    double sum = 0.0;
    double sum_sq = 0.0;
    // Running mean + half-width at n/8, n/4, n/2: a divergent moment shows up
    // as the final mean escaping the earlier confidence bands.
    std::vector<std::pair<double, double>> checkpoints;
    for (int i = 0; i < n_samples; ++i) {
        const double v = std::pow(draw_log_size(measure, rng), q);
        sum += v;
        sum_sq += v * v;
        const int k = i + 1;
        if (k >= 2 && (k == n_samples / 8 || k == n_samples / 4 || k == n_samples / 2)) {
            const double m = sum / k;
            const double var_k = std::max(0.0, (sum_sq - k * m * m) / (k - 1));
            checkpoints.emplace_back(m, 1.96 * std::sqrt(var_k / k));
        }
    }
    LogMomentEstimate out;
    out.n_samples = n_samples;
    out.mean = sum / n_samples;
    const double var =
        std::max(0.0, (sum_sq - n_samples * out.mean * out.mean) / (n_samples - 1));
    out.half_width = 1.96 * std::sqrt(var / n_samples);
    for (const auto& [m, hw] : checkpoints) {
        if (out.mean - m > hw) out.divergence_flag = true;
    }
    return out;
}

ProximalityReport proximality_probe(const MatrixMeasure& measure, int horizon,
                                    int trials, RngStream& rng) {
    if (horizon < 1) throw ConfigError("proximality_probe: horizon must be >= 1");
    measure.validate();
    ProximalityReport report;
    for (int t = 0; t < trials; ++t) {
        Eigen::MatrixXd product = Eigen::MatrixXd::Identity(measure.dim, measure.dim);
        for (int len = 1; len <= horizon; ++len) {
            product = sample(measure, rng).entries() * product;
            Eigen::EigenSolver<Eigen::MatrixXd> solver(product, false);
            Eigen::VectorXd moduli = solver.eigenvalues().cwiseAbs();
            std::sort(moduli.data(), moduli.data() + moduli.size(),
                      std::greater<double>());
            if (moduli(1) == 0.0) continue;
            const double gap = moduli(0) / moduli(1) - 1.0;
            if (gap > 1e-6) {
                // Require the top modulus to be simple: nothing else ties it.
                if (!report.found || len < report.witness_length) {
                    report.found = true;
                    report.witness_length = len;
                    report.relative_gap = gap;
                }
                break;
            }
        }
        if (report.found && report.witness_length == 1) break;
    }
    return report;
}

}  // namespace mwalk
