#include "mwalk/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mwalk/errors.hpp"
#include "mwalk/parallel.hpp"

namespace mwalk {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string format_value(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string format_value(long long x) { return std::to_string(x); }
std::string format_value(bool b) { return b ? "1" : "0"; }

void check_keys(const json& obj, const std::string& context,
                const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError(context + ": unknown key '" + item.key() + "'");
        }
    }
}

double get_number(const json& obj, const std::string& context, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(context + "." + key + ": missing");
    if (!obj.at(key).is_number()) throw ConfigError(context + "." + key + ": must be a number");
    return obj.at(key).get<double>();
}

double get_number_or(const json& obj, const std::string& context, const std::string& key,
                     double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) throw ConfigError(context + "." + key + ": must be a number");
    return obj.at(key).get<double>();
}

long long get_integer(const json& obj, const std::string& context, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(context + "." + key + ": missing");
    if (!obj.at(key).is_number_integer()) {
        throw ConfigError(context + "." + key + ": must be an integer");
    }
    return obj.at(key).get<long long>();
}

long long get_integer_or(const json& obj, const std::string& context, const std::string& key,
                         long long fallback) {
    if (!obj.contains(key)) return fallback;
    return get_integer(obj, context, key);
}

std::string get_string_or(const json& obj, const std::string& context, const std::string& key,
                          const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) throw ConfigError(context + "." + key + ": must be a string");
    return obj.at(key).get<std::string>();
}

Eigen::MatrixXd parse_matrix(const json& rows, const std::string& context) {
    if (!rows.is_array() || rows.empty()) {
        throw ConfigError(context + ": must be a nonempty array of rows");
    }
    const auto d = static_cast<int>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
        const json& row = rows.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<int>(row.size()) != d) {
            throw ConfigError(context + ": must be square (row " + std::to_string(i) + ")");
        }
        for (int j = 0; j < d; ++j) {
            const json& cell = row.at(static_cast<std::size_t>(j));
            if (!cell.is_number()) throw ConfigError(context + ": entries must be numbers");
            m(i, j) = cell.get<double>();
        }
    }
    return m;
}

MatrixMeasure parse_measure(const json& obj) {
    if (!obj.is_object()) throw ConfigError("measure: must be an object");
    const std::string kind = get_string_or(obj, "measure", "kind", "");
    if (kind.empty()) throw ConfigError("measure.kind: missing");

    std::set<std::string> allowed = {"kind", "momentOrder", "stronglyIrreducible",
                                     "proximal"};
    MatrixMeasure measure;
    if (kind == "point-mass") {
        allowed.insert({"matrix", "dim"});
        check_keys(obj, "measure", allowed);
        if (!obj.contains("matrix")) throw ConfigError("measure.matrix: missing");
        measure = MatrixMeasure::point_mass(
            InvertibleMatrix(parse_matrix(obj.at("matrix"), "measure.matrix")));
    } else if (kind == "finite-support") {
        allowed.insert({"atoms", "dim"});
        check_keys(obj, "measure", allowed);
        if (!obj.contains("atoms") || !obj.at("atoms").is_array()) {
            throw ConfigError("measure.atoms: missing or not an array");
        }
        std::vector<std::pair<InvertibleMatrix, double>> atoms;
        std::size_t index = 0;
        for (const json& atom : obj.at("atoms")) {
            const std::string ctx = "measure.atoms[" + std::to_string(index++) + "]";
            if (!atom.is_object()) throw ConfigError(ctx + ": must be an object");
            check_keys(atom, ctx, {"matrix", "prob"});
            if (!atom.contains("matrix")) throw ConfigError(ctx + ".matrix: missing");
            atoms.emplace_back(InvertibleMatrix(parse_matrix(atom.at("matrix"), ctx + ".matrix")),
                               get_number(atom, ctx, "prob"));
        }
        measure = MatrixMeasure::finite_support(std::move(atoms));
    } else if (kind == "rotation-dilation") {
        allowed.insert({"dim", "dilationLog"});
        check_keys(obj, "measure", allowed);
        measure = MatrixMeasure::rotation_dilation(
            static_cast<int>(get_integer(obj, "measure", "dim")),
            get_number(obj, "measure", "dilationLog"));
    } else if (kind == "heavy-log-tail") {
        allowed.insert({"dim", "tailIndex"});
        check_keys(obj, "measure", allowed);
        measure = MatrixMeasure::heavy_log_tail(
            static_cast<int>(get_integer(obj, "measure", "dim")),
            get_number(obj, "measure", "tailIndex"));
    } else if (kind == "bernoulli-reduction") {
        allowed.insert({"logC", "angle1", "angle2"});
        check_keys(obj, "measure", allowed);
        measure = MatrixMeasure::bernoulli_reduction(
            get_number_or(obj, "measure", "logC", 1.0),
            get_number_or(obj, "measure", "angle1", 0.7853981633974483),
            get_number_or(obj, "measure", "angle2", 1.0));
    } else {
        throw ConfigError("measure.kind: unknown kind '" + kind + "'");
    }

    if (obj.contains("dim") && (kind == "point-mass" || kind == "finite-support")) {
        const auto declared = static_cast<int>(get_integer(obj, "measure", "dim"));
        if (declared != measure.dim) {
            throw ConfigError("measure.dim: declared " + std::to_string(declared) +
                              " but atoms have dimension " + std::to_string(measure.dim));
        }
    }
    if (obj.contains("momentOrder")) {
        measure.moment_order = get_number(obj, "measure", "momentOrder");
        if (!(measure.moment_order > 0.0)) {
            throw ConfigError("measure.momentOrder: must be > 0");
        }
    }
    if (obj.contains("stronglyIrreducible")) {
        if (!obj.at("stronglyIrreducible").is_boolean()) {
            throw ConfigError("measure.stronglyIrreducible: must be a boolean");
        }
        measure.strongly_irreducible = obj.at("stronglyIrreducible").get<bool>();
    }
    if (obj.contains("proximal")) {
        if (!obj.at("proximal").is_boolean()) {
            throw ConfigError("measure.proximal: must be a boolean");
        }
        measure.proximal = obj.at("proximal").get<bool>();
    }
    measure.validate();
    return measure;
}

ProjectivePoint start_point(const ExperimentConfig& config) {
    const int dim = config.measure ? config.measure->dim : 2;
    if (config.start.empty()) return ProjectivePoint::axis(dim, 0);
    if (static_cast<int>(config.start.size()) != dim) {
        throw ConfigError("start: needs " + std::to_string(dim) + " coordinates");
    }
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = config.start[static_cast<std::size_t>(i)];
    return ProjectivePoint(v);
}

std::uint64_t pair_grid_digest(const std::vector<PointPair>& pairs) {
    std::string bytes;
    bytes.reserve(pairs.size() * 64);
    for (const auto& [x, y] : pairs) {
        for (const Eigen::VectorXd* v : {&x.rep(), &y.rep()}) {
            for (int i = 0; i < v->size(); ++i) {
                char buf[8];
                const double value = (*v)(i);
                std::memcpy(buf, &value, 8);
                bytes.append(buf, 8);
            }
        }
    }
    return fnv1a(bytes);
}

// Tabular payload shared by the CSV and JSON writers.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

void write_table(const Table& table, const std::string& path, const std::string& format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("output: cannot open '" + path + "' for writing");
    if (format == "csv") {
        for (std::size_t i = 0; i < table.header.size(); ++i) {
            if (i) out << ',';
            out << table.header[i];
        }
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ',';
                out << row[i];
            }
            out << '\n';
        }
    } else {
        json rows = json::array();
        for (const auto& row : table.rows) {
            json rec = json::object();
            for (std::size_t i = 0; i < row.size(); ++i) rec[table.header[i]] = row[i];
            rows.push_back(std::move(rec));
        }
        out << rows.dump(2) << '\n';
    }
}

std::vector<long long> parse_grid(const json& obj, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(key + ": missing");
    if (!obj.at(key).is_array()) throw ConfigError(key + ": must be an array of integers");
    std::vector<long long> grid;
    for (const json& v : obj.at(key)) {
        if (!v.is_number_integer()) throw ConfigError(key + ": entries must be integers");
        grid.push_back(v.get<long long>());
    }
    return grid;
}

struct ExperimentOutput {
    Table table;
    json summary;
};

ExperimentOutput execute(const ExperimentConfig& config) {
    ExperimentOutput out;
    const unsigned workers = config.workers;
    switch (config.kind) {
        case ExperimentKind::Lyapunov: {
            const auto est = estimate_lyapunov(*config.measure, start_point(config), config.n,
                                               config.replicas, config.seed, workers);
            out.table.header = {"quantity", "value"};
            out.table.add_row({"lambdaHat", format_value(est.lambda_hat)});
            out.table.add_row({"halfWidth", format_value(est.half_width)});
            out.table.add_row({"lambdaMatrixHat", format_value(est.lambda_matrix_hat)});
            out.table.add_row({"matrixHalfWidth", format_value(est.matrix_half_width)});
            out.table.add_row({"normGapP99", format_value(est.norm_gap_p99)});
            out.summary = {{"lambdaHat", est.lambda_hat},
                           {"halfWidth", est.half_width},
                           {"lambdaMatrixHat", est.lambda_matrix_hat},
                           {"matrixHalfWidth", est.matrix_half_width},
                           {"normGapP99", est.norm_gap_p99},
                           {"nUsed", est.n_used},
                           {"replicasUsed", est.replicas_used}};
            break;
        }
        case ExperimentKind::Sigma2: {
            VarianceEstimate est;
            if (config.sigma2_method == "batch") {
                est = estimate_sigma2_batch(*config.measure, start_point(config), config.n,
                                            config.burn_in, config.seed);
            } else {
                est = estimate_sigma2_cross(*config.measure, start_point(config), config.n,
                                            config.replicas, config.seed, workers);
            }
            out.table.header = {"quantity", "value"};
            out.table.add_row({"sigma2Hat", format_value(est.sigma2_hat)});
            out.table.add_row({"halfWidth", format_value(est.half_width)});
            out.table.add_row({"clamped", format_value(est.clamped)});
            out.summary = {{"sigma2Hat", est.sigma2_hat},
                           {"halfWidth", est.half_width},
                           {"method", est.method},
                           {"clamped", est.clamped}};
            break;
        }
        case ExperimentKind::Contraction: {
            const auto pairs = default_pair_grid(config.measure->dim, config.point_grid,
                                                 derive_seed(config.seed, 0x9A1D));
            const auto est = estimate_contraction(*config.measure, pairs, config.n,
                                                  config.replicas, config.seed, workers);
            out.table.header = {"n", "meanLogDist", "tailCurve"};
            for (std::size_t i = 0; i < est.grid_n.size(); ++i) {
                out.table.add_row({format_value(est.grid_n[i]),
                                   format_value(est.mean_log_dist[i]),
                                   format_value(est.tail_curve[i])});
            }
            out.summary = {{"rateHat", est.rate_hat},
                           {"rateCiLo", est.rate_ci.lo},
                           {"rateCiHi", est.rate_ci.hi},
                           {"ellHat", est.ell_hat},
                           {"worstPair", est.worst_pair},
                           {"decayDetected", est.decay_detected},
                           {"gridDigest", pair_grid_digest(pairs)}};
            break;
        }
        case ExperimentKind::CouplingDecay: {
            const auto pairs = default_pair_grid(config.measure->dim, config.point_grid,
                                                 derive_seed(config.seed, 0x9A1D));
            const auto curve = coupling_decay_curve(*config.measure, config.q, pairs,
                                                    config.k_max, config.replicas, config.seed,
                                                    workers);
            out.table.header = {"k", "moment", "partialSum"};
            for (std::size_t i = 0; i < curve.k.size(); ++i) {
                out.table.add_row({format_value(curve.k[i]), format_value(curve.moment[i]),
                                   format_value(curve.partial_sums[i])});
            }
            out.summary = {{"q", config.q},
                           {"kMax", config.k_max},
                           {"finalPartialSum", curve.partial_sums.back()},
                           {"gridDigest", pair_grid_digest(pairs)}};
            break;
        }
        case ExperimentKind::CltRate: {
            const DistanceKind dk = config.distance == "ks" ? DistanceKind::KolmogorovSmirnov
                                                            : DistanceKind::WassersteinR;
            const auto res = rate_scan(*config.measure, start_point(config), dk, config.r,
                                       config.n_grid, config.replicas, config.seed, workers);
            out.table.header = {"n", "distance", "distanceLo", "distanceHi"};
            for (std::size_t i = 0; i < res.grid_n.size(); ++i) {
                const bool have = i < res.distances.size();
                out.table.add_row({format_value(res.grid_n[i]),
                                   format_value(have ? res.distances[i] : 0.0),
                                   format_value(have ? res.distances_lo[i] : 0.0),
                                   format_value(have ? res.distances_hi[i] : 0.0)});
            }
            out.summary = {{"exponentHat", res.exponent_hat},
                           {"interceptHat", res.intercept_hat},
                           {"rSquared", res.r_squared},
                           {"exponentCiLo", res.exponent_ci.lo},
                           {"exponentCiHi", res.exponent_ci.hi},
                           {"altExponent", res.alt_exponent},
                           {"altLogCoeff", res.alt_log_coeff},
                           {"unreliable", res.unreliable},
                           {"degenerate", res.degenerate},
                           {"lambdaHat", res.lambda_hat},
                           {"sigma2Hat", res.sigma2_hat},
                           {"calibrationSeed", res.calibration_seed}};
            break;
        }
        case ExperimentKind::MzRate: {
            const auto report = mz_rate_check(*config.measure, start_point(config), config.p,
                                              config.n_grid, config.replicas, config.seed,
                                              workers);
            out.table.header = {"n", "q50", "q90", "q99"};
            for (std::size_t i = 0; i < report.grid_n.size(); ++i) {
                out.table.add_row({format_value(report.grid_n[i]), format_value(report.q50[i]),
                                   format_value(report.q90[i]), format_value(report.q99[i])});
            }
            out.summary = {{"decayAsserted", report.decay_asserted},
                           {"trendDelta", report.trend_delta},
                           {"trendCiHi", report.trend_ci_hi},
                           {"lambdaHat", report.lambda_hat}};
            break;
        }
        case ExperimentKind::Lil: {
            const auto report = lil_statistic(*config.measure, start_point(config),
                                              config.n_max, config.replicas, config.seed,
                                              workers);
            out.table.header = {"rank", "runningMax"};
            for (std::size_t i = 0; i < report.per_replica_max.size(); ++i) {
                out.table.add_row({format_value(static_cast<long long>(i)),
                                   format_value(report.per_replica_max[i])});
            }
            out.summary = {{"median", report.median},
                           {"lambdaHat", report.lambda_hat},
                           {"sigma2Hat", report.sigma2_hat}};
            break;
        }
        case ExperimentKind::FunctionalSup: {
            const auto report = functional_sup_check(*config.measure, start_point(config),
                                                     config.n, config.replicas, config.seed,
                                                     workers);
            out.table.header = {"rank", "sup"};
            for (std::size_t i = 0; i < report.sups.values.size(); ++i) {
                out.table.add_row({format_value(static_cast<long long>(i)),
                                   format_value(report.sups.values[i])});
            }
            out.summary = {{"ks", report.ks},
                           {"lambdaHat", report.lambda_hat},
                           {"sigma2Hat", report.sigma2_hat}};
            break;
        }
        case ExperimentKind::Vbe: {
            const auto increments = make_md_increments(config.vbe_increments, config.replicas,
                                                       config.vbe_steps, config.seed);
            const auto report = vbe_inequality_check(increments, config.r);
            out.table.header = {"quantity", "value"};
            out.table.add_row({"lhs", format_value(report.lhs)});
            out.table.add_row({"rhs", format_value(report.rhs)});
            out.table.add_row({"lhsHalfWidth", format_value(report.lhs_half_width)});
            out.table.add_row({"holds", format_value(report.holds)});
            out.table.add_row({"maxLhs", format_value(report.max_lhs)});
            out.table.add_row({"maxRhs", format_value(report.max_rhs)});
            out.table.add_row({"maxHolds", format_value(report.max_holds)});
            out.summary = {{"lhs", report.lhs},
                           {"rhs", report.rhs},
                           {"lhsHalfWidth", report.lhs_half_width},
                           {"holds", report.holds},
                           {"maxLhs", report.max_lhs},
                           {"maxRhs", report.max_rhs},
                           {"maxHolds", report.max_holds}};
            break;
        }
        case ExperimentKind::NormGap: {
            const auto pairs = default_pair_grid(config.measure->dim, config.point_grid,
                                                 derive_seed(config.seed, 0x9A1D));
            const auto report = norm_gap_boundedness(*config.measure, pairs, config.n_grid,
                                                     config.replicas, config.seed, workers);
            out.table.header = {"n", "l1Gap", "normMinusVec"};
            for (std::size_t i = 0; i < report.grid_n.size(); ++i) {
                out.table.add_row({format_value(report.grid_n[i]),
                                   format_value(report.l1_gap[i]),
                                   format_value(report.norm_minus_vec[i])});
            }
            out.summary = {{"slope", report.slope},
                           {"slopeCiLo", report.slope_ci_lo},
                           {"slopeCiHi", report.slope_ci_hi},
                           {"boundedTrend", report.bounded_trend},
                           {"gridDigest", pair_grid_digest(pairs)}};
            break;
        }
    }
    return out;
}

long long estimated_steps(const ExperimentConfig& config) {
    switch (config.kind) {
        case ExperimentKind::Lyapunov:
        case ExperimentKind::Sigma2:
        case ExperimentKind::FunctionalSup:
            return config.n * std::max<long long>(config.replicas, 1);
        case ExperimentKind::Contraction:
            return config.n * config.replicas * (config.point_grid + 2);
        case ExperimentKind::CouplingDecay:
            return config.k_max * config.replicas * (config.point_grid + 2);
        case ExperimentKind::CltRate:
        case ExperimentKind::MzRate: {
            long long total = 0;
            for (long long n : config.n_grid) total += n * config.replicas;
            return total;
        }
        case ExperimentKind::Lil:
            return config.n_max * config.replicas;
        case ExperimentKind::Vbe:
            return config.vbe_steps * config.replicas;
        case ExperimentKind::NormGap:
            return (config.n_grid.empty() ? 0 : config.n_grid.back()) * config.replicas *
                   (config.point_grid + 3);
    }
    return 0;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Lyapunov: return "lyapunov";
        case ExperimentKind::Sigma2: return "sigma2";
        case ExperimentKind::Contraction: return "contraction";
        case ExperimentKind::CouplingDecay: return "coupling-decay";
        case ExperimentKind::CltRate: return "clt-rate";
        case ExperimentKind::MzRate: return "mz-rate";
        case ExperimentKind::Lil: return "lil";
        case ExperimentKind::FunctionalSup: return "functional-sup";
        case ExperimentKind::Vbe: return "vbe";
        case ExperimentKind::NormGap: return "norm-gap";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "lyapunov") return ExperimentKind::Lyapunov;
    if (name == "sigma2") return ExperimentKind::Sigma2;
    if (name == "contraction") return ExperimentKind::Contraction;
    if (name == "coupling-decay") return ExperimentKind::CouplingDecay;
    if (name == "clt-rate") return ExperimentKind::CltRate;
    if (name == "mz-rate") return ExperimentKind::MzRate;
    if (name == "lil") return ExperimentKind::Lil;
    if (name == "functional-sup") return ExperimentKind::FunctionalSup;
    if (name == "vbe") return ExperimentKind::Vbe;
    if (name == "norm-gap") return ExperimentKind::NormGap;
    throw ConfigError("experiment: unknown kind '" + name + "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    if (!obj.is_object()) throw ConfigError("config: top level must be an object");
    if (!obj.contains("experiment")) throw ConfigError("experiment: missing");
    if (!obj.at("experiment").is_string()) throw ConfigError("experiment: must be a string");

    ExperimentConfig config;
    config.kind = experiment_kind_from_string(obj.at("experiment").get<std::string>());

    std::set<std::string> allowed = {"experiment", "seed", "workers", "label"};
    if (config.kind != ExperimentKind::Vbe) allowed.insert("measure");
    switch (config.kind) {
        case ExperimentKind::Lyapunov:
            allowed.insert({"n", "replicas", "start"});
            break;
        case ExperimentKind::Sigma2:
            allowed.insert({"n", "replicas", "start", "method", "burnIn"});
            break;
        case ExperimentKind::Contraction:
            allowed.insert({"n", "replicas", "pointGrid"});
            break;
        case ExperimentKind::CouplingDecay:
            allowed.insert({"q", "kMax", "replicas", "pointGrid"});
            break;
        case ExperimentKind::CltRate:
            allowed.insert({"nGrid", "replicas", "r", "distance", "start"});
            break;
        case ExperimentKind::MzRate:
            allowed.insert({"nGrid", "replicas", "p", "start"});
            break;
        case ExperimentKind::Lil:
            allowed.insert({"nMax", "replicas", "start", "stride"});
            break;
        case ExperimentKind::FunctionalSup:
            allowed.insert({"n", "replicas", "start", "stride"});
            break;
        case ExperimentKind::Vbe:
            allowed.insert({"replicas", "steps", "r", "increments"});
            break;
        case ExperimentKind::NormGap:
            allowed.insert({"nGrid", "replicas", "pointGrid"});
            break;
    }
    check_keys(obj, "config", allowed);

    if (obj.contains("seed")) {
        if (!obj.at("seed").is_number_integer()) throw ConfigError("seed: must be an integer");
        config.seed = obj.at("seed").get<std::uint64_t>();
    }
    config.workers = static_cast<unsigned>(get_integer_or(obj, "config", "workers", 0));
    config.label = get_string_or(obj, "config", "label", to_string(config.kind));

    if (config.kind != ExperimentKind::Vbe) {
        if (!obj.contains("measure")) throw ConfigError("measure: missing");
        config.measure = parse_measure(obj.at("measure"));
    }
    if (obj.contains("start")) {
        if (!obj.at("start").is_array()) throw ConfigError("start: must be an array of numbers");
        for (const json& v : obj.at("start")) {
            if (!v.is_number()) throw ConfigError("start: entries must be numbers");
            config.start.push_back(v.get<double>());
        }
    }

    config.n = get_integer_or(obj, "config", "n", 0);
    config.replicas = get_integer_or(obj, "config", "replicas", 0);
    config.n_max = get_integer_or(obj, "config", "nMax", 0);
    config.k_max = get_integer_or(obj, "config", "kMax", 0);
    config.stride = get_integer_or(obj, "config", "stride", 1);
    config.point_grid = static_cast<int>(get_integer_or(obj, "config", "pointGrid", 8));
    config.r = get_number_or(obj, "config", "r",
                             config.kind == ExperimentKind::Vbe ? 1.5 : 1.0);
    config.p = get_number_or(obj, "config", "p", 1.5);
    config.q = get_number_or(obj, "config", "q", 1.0);
    config.distance = get_string_or(obj, "config", "distance", "wasserstein");
    config.sigma2_method = get_string_or(obj, "config", "method", "cross");
    config.burn_in = get_integer_or(obj, "config", "burnIn", 0);
    config.vbe_increments = get_string_or(obj, "config", "increments", "rademacher");
    config.vbe_steps = get_integer_or(obj, "config", "steps", 0);

    if (obj.contains("nGrid")) config.n_grid = parse_grid(obj, "nGrid");

    if (config.distance != "wasserstein" && config.distance != "ks") {
        throw ConfigError("distance: must be 'wasserstein' or 'ks'");
    }
    if (config.sigma2_method != "cross" && config.sigma2_method != "batch") {
        throw ConfigError("method: must be 'cross' or 'batch'");
    }

    config.config_digest = fnv1a(obj.dump());
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

void validate_semantics(const ExperimentConfig& config) {
    auto need_positive = [](long long value, const char* key) {
        if (value < 1) throw ConfigError(std::string(key) + ": must be >= 1");
    };
    switch (config.kind) {
        case ExperimentKind::Lyapunov:
            need_positive(config.n, "n");
            need_positive(config.replicas, "replicas");
            break;
        case ExperimentKind::Sigma2:
            need_positive(config.n, "n");
            if (config.sigma2_method == "cross") {
                need_positive(config.replicas, "replicas");
            } else if (config.burn_in >= config.n) {
                throw ConfigError("burnIn: must be smaller than n");
            }
            break;
        case ExperimentKind::Contraction:
            need_positive(config.n, "n");
            need_positive(config.replicas, "replicas");
            break;
        case ExperimentKind::CouplingDecay:
            need_positive(config.k_max, "kMax");
            need_positive(config.replicas, "replicas");
            if (!(config.q > 0.0)) throw ConfigError("q: must be > 0");
            break;
        case ExperimentKind::CltRate:
            if (config.n_grid.size() < 3) throw ConfigError("nGrid: needs at least 3 points");
            need_positive(config.replicas, "replicas");
            if (config.distance == "wasserstein" && !(config.r >= 1.0)) {
                throw ConfigError("r: Wasserstein scans require r >= 1");
            }
            break;
        case ExperimentKind::MzRate:
            if (config.n_grid.size() < 3) throw ConfigError("nGrid: needs at least 3 points");
            need_positive(config.replicas, "replicas");
            if (!(config.p > 1.0 && config.p < 2.0)) throw ConfigError("p: must lie in (1,2)");
            break;
        case ExperimentKind::Lil:
            if (config.n_max < 10000) throw ConfigError("nMax: must be >= 10000");
            need_positive(config.replicas, "replicas");
            if (config.stride != 1) {
                throw ConfigError("stride: lil checkpoints require stride 1");
            }
            break;
        case ExperimentKind::FunctionalSup:
            need_positive(config.n, "n");
            need_positive(config.replicas, "replicas");
            if (config.stride != 1) {
                throw ConfigError("stride: the polygonal process requires stride 1");
            }
            break;
        case ExperimentKind::Vbe:
            if (config.replicas < 2) throw ConfigError("replicas: must be >= 2");
            need_positive(config.vbe_steps, "steps");
            if (!(config.r > 1.0 && config.r <= 2.0)) throw ConfigError("r: must lie in (1, 2]");
            if (config.vbe_increments != "rademacher" && config.vbe_increments != "uniform" &&
                config.vbe_increments != "normal" && config.vbe_increments != "modulated") {
                throw ConfigError("increments: must be one of rademacher, uniform, normal, "
                                  "modulated");
            }
            break;
        case ExperimentKind::NormGap:
            if (config.n_grid.size() < 3) throw ConfigError("nGrid: needs at least 3 points");
            need_positive(config.replicas, "replicas");
            break;
    }
    if (config.point_grid < 1) throw ConfigError("pointGrid: must be >= 1");
}

std::string describe(const ExperimentConfig& config) {
    validate_semantics(config);
    std::ostringstream plan;
    plan << "experiment: " << to_string(config.kind) << "\n";
    plan << "seed: " << config.seed << "\n";
    plan << "workers: " << (config.workers == 0 ? resolve_workers(0) : config.workers)
         << (config.workers == 0 ? " (auto)" : "") << "\n";
    if (config.measure) {
        plan << "measure: " << to_string(config.measure->kind)
             << " (dim " << config.measure->dim << ", digest "
             << measure_digest(*config.measure) << ")\n";
    }
    plan << "stages:\n";
    switch (config.kind) {
        case ExperimentKind::Lyapunov:
        case ExperimentKind::Sigma2:
            plan << "  1. ensemble: " << config.replicas << " replicas x " << config.n
                 << " steps\n";
            break;
        case ExperimentKind::Contraction:
            plan << "  1. coupled ensemble: " << (config.point_grid + 2) << " pairs x "
                 << config.replicas << " replicas x " << config.n << " steps\n"
                 << "  2. slope fit + bootstrap CI\n";
            break;
        case ExperimentKind::CouplingDecay:
            plan << "  1. coupled ensemble: " << (config.point_grid + 2) << " pairs x "
                 << config.replicas << " replicas x " << config.k_max << " steps\n"
                 << "  2. moment curve + weighted partial sums\n";
            break;
        case ExperimentKind::CltRate:
        case ExperimentKind::MzRate:
            plan << "  1. calibration ensemble at n = " << config.n_grid.back() << "\n";
            for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
                plan << "  " << (i + 2) << ". ensemble: " << config.replicas
                     << " replicas x " << config.n_grid[i] << " steps\n";
            }
            plan << "  " << (config.n_grid.size() + 2) << ". distance fit + bootstrap\n";
            break;
        case ExperimentKind::Lil:
            plan << "  1. calibration ensemble at n = " << config.n_max << "\n"
                 << "  2. running-max ensemble: " << config.replicas << " replicas x "
                 << config.n_max << " steps (stride 1)\n";
            break;
        case ExperimentKind::FunctionalSup:
            plan << "  1. calibration ensemble at n = " << config.n << "\n"
                 << "  2. polygonal-sup ensemble: " << config.replicas << " replicas x "
                 << config.n << " steps (stride 1)\n";
            break;
        case ExperimentKind::Vbe:
            plan << "  1. increment matrix: " << config.replicas << " replicas x "
                 << config.vbe_steps << " steps (" << config.vbe_increments << ")\n"
                 << "  2. inequality evaluation, both variants\n";
            break;
        case ExperimentKind::NormGap:
            plan << "  1. coupled ensemble: " << (config.point_grid + 2) << " pairs x "
                 << config.replicas << " replicas x " << config.n_grid.back() << " steps\n"
                 << "  2. matrix-norm ensemble: " << config.replicas << " replicas x "
                 << config.n_grid.back() << " steps\n"
                 << "  3. trend bootstrap\n";
            break;
    }
    plan << "total matrix draws (approx): " << estimated_steps(config) << "\n";
    const double doubles = static_cast<double>(
        config.kind == ExperimentKind::Vbe ? config.replicas * config.vbe_steps
        : config.kind == ExperimentKind::Lil || config.kind == ExperimentKind::FunctionalSup
            ? config.replicas + config.n
            : config.replicas);
    plan << "memory estimate: " << format_value(doubles * 8.0 / 1048576.0) << " MiB of samples\n";
    plan << "no sampling performed (dry run)\n";
    return plan.str();
}

std::vector<std::vector<double>> make_md_increments(const std::string& kind,
                                                    long long replicas, long long steps,
                                                    std::uint64_t seed) {
    if (replicas < 1 || steps < 1) {
        throw ConfigError("increments: replicas and steps must be >= 1");
    }
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(replicas));
    for (std::size_t j = 0; j < rows.size(); ++j) {
        RngStream rng(seed, static_cast<std::uint64_t>(j));
        auto& row = rows[j];
        row.resize(static_cast<std::size_t>(steps));
        double running = 0.0;
        for (auto& z : row) {
            if (kind == "rademacher") {
                z = rng.next_double() < 0.5 ? -1.0 : 1.0;
            } else if (kind == "uniform") {
                z = 2.0 * rng.next_double() - 1.0;
            } else if (kind == "normal") {
                z = rng.next_normal();
            } else if (kind == "modulated") {
                const double eps = rng.next_double() < 0.5 ? -1.0 : 1.0;
                z = eps * (1.0 + 0.5 * std::abs(running) / (1.0 + std::abs(running)));
                running += z;
            } else {
                throw ConfigError("increments: unknown kind '" + kind + "'");
            }
        }
    }
    return rows;
}

RunArtifacts run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                            const std::string& format) {
    if (format != "csv" && format != "json") {
        throw ConfigError("format: must be 'csv' or 'json'");
    }
    validate_semantics(config);
    std::filesystem::create_directories(out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    ExperimentOutput output = execute(config);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunArtifacts artifacts;
    const std::string table_name = config.label + (format == "csv" ? ".csv" : ".json");
    write_table(output.table, out_dir + "/" + table_name, format);
    artifacts.files.push_back(table_name);

    json manifest = {{"experiment", to_string(config.kind)},
                     {"configDigest", config.config_digest},
                     {"seed", config.seed},
                     {"versions", {{"mwalk", kVersion},
                                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                 std::to_string(EIGEN_MINOR_VERSION)}}},
                     {"wallTimeSeconds", wall},
                     {"files", artifacts.files},
                     {"results", output.summary}};
    if (config.measure) manifest["measureDigest"] = measure_digest(*config.measure);

    artifacts.manifest_path = out_dir + "/manifest.json";
    {
        std::ofstream out(artifacts.manifest_path, std::ios::binary);
        if (!out) throw ConfigError("output: cannot open '" + artifacts.manifest_path + "'");
        out << manifest.dump(2) << '\n';
    }
    artifacts.summary_json = output.summary.dump(2);
    return artifacts;
}

}  // namespace mwalk
