#ifndef CHAFFSIM_MOBILITY_HPP
#define CHAFFSIM_MOBILITY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "chaffsim/errors.hpp"
#include "chaffsim/rng.hpp"

namespace chaffsim {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Trajectory = std::vector<int>;  // cell ids, one per slot

// Ergodic Markov mobility chain over cells 0..L-1.
// Immutable after construction; build via make_mobility_model / make_model /
// estimate_model so the invariants (row-stochastic, ergodic, positive
// stationary) are always checked.
struct MobilityModel {
    int cell_count = 0;
    std::vector<double> transition;  // L*L row-major, P(to | from)
    std::vector<double> stationary;  // length L

    double p(int from, int to) const { return transition[from * cell_count + to]; }
    std::span<const double> row(int from) const {
        return {transition.data() + static_cast<std::size_t>(from) * cell_count,
                static_cast<std::size_t>(cell_count)};
    }
};

namespace detail {

inline void check_row_stochastic(int L, const std::vector<double>& m, double tol = 1e-9) {
    if (static_cast<int>(m.size()) != L * L)
        throw ValidationError("transition matrix has wrong size");
    for (int i = 0; i < L; ++i) {
        double s = 0.0;
        for (int j = 0; j < L; ++j) {
            double v = m[i * L + j];
            if (v < 0.0 || !std::isfinite(v))
                throw ValidationError("transition entry out of range");
            s += v;
        }
        if (std::fabs(s - 1.0) > tol)
            throw ValidationError("transition row " + std::to_string(i) +
                                  " does not sum to 1");
    }
}

// Ergodicity = single communicating class covering all states + aperiodicity
// (gcd of cycle lengths in the positive-support digraph equals 1).
inline bool is_ergodic(int L, const std::vector<double>& m) {
    auto reach = [&](bool transpose) {
        std::vector<char> seen(L, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < L; ++v) {
                double w = transpose ? m[v * L + u] : m[u * L + v];
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    if (!reach(false) || !reach(true)) return false;
    // BFS levels; period divides every (level[u] + 1 - level[v]) over edges u->v
    std::vector<int> level(L, -1);
    std::vector<int> queue{0};
    level[0] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        int u = queue[qi];
        for (int v = 0; v < L; ++v) {
            if (m[u * L + v] > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    int g = 0;
    for (int u = 0; u < L; ++u)
        for (int v = 0; v < L; ++v)
            if (m[u * L + v] > 0.0) g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
    return g == 1;
}

}  // namespace detail

// Stationary distribution of a row-stochastic ergodic matrix by power
// iteration. The contract is the residual: ||pi P - pi||_inf < residual_tol.
inline std::vector<double> stationary_distribution(int L,
                                                   const std::vector<double>& transition,
                                                   double residual_tol = 1e-12,
                                                   long max_iter = 1000000) {
    detail::check_row_stochastic(L, transition);
    if (!detail::is_ergodic(L, transition))
        throw ErgodicityError("chain is not ergodic (reducible or periodic)");
    std::vector<double> pi(L, 1.0 / L), next(L);
    for (long it = 0; it < max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < L; ++i) {
            double w = pi[i];
            const double* row = transition.data() + static_cast<std::size_t>(i) * L;
            for (int j = 0; j < L; ++j) next[j] += w * row[j];
        }
        double s = std::accumulate(next.begin(), next.end(), 0.0);
        for (double& v : next) v /= s;
        double res = 0.0;
        for (int j = 0; j < L; ++j) res = std::max(res, std::fabs(next[j] - pi[j]));
        pi.swap(next);
        if (res < residual_tol) return pi;
    }
    throw ErgodicityError("power iteration did not converge");
}

// Validates and packages a transition matrix into a MobilityModel.
inline MobilityModel make_mobility_model(int L, std::vector<double> transition) {
    MobilityModel m;
    m.cell_count = L;
    m.stationary = stationary_distribution(L, transition);
    m.transition = std::move(transition);
    for (double v : m.stationary)
        if (v <= 0.0) throw ErgodicityError("stationary entry not strictly positive");
    return m;
}

enum class ModelTag { NonSkewed, SpatiallySkewed, TemporallySkewed, SpatioTemporallySkewed };

// Parameters of the four synthetic model families (a)-(d).
struct ModelKind {
    ModelTag tag = ModelTag::NonSkewed;
    int boost_column = 5;      // (b)
    double boost_value = 2.0;  // (b)
    double p = 0.5;            // (c)/(d) step right
    double q = 0.25;           // (c)/(d) step left
    double leak = 1e-5;        // (c)/(d) mass to each nonadjacent cell
};

inline ModelKind model_kind_from_letter(char c) {
    switch (c) {
        case 'a': return {.tag = ModelTag::NonSkewed};
        case 'b': return {.tag = ModelTag::SpatiallySkewed};
        case 'c': return {.tag = ModelTag::TemporallySkewed};
        case 'd': return {.tag = ModelTag::SpatioTemporallySkewed};
        default: throw ValidationError(std::string("unknown model kind '") + c + "'");
    }
}

inline char model_kind_letter(ModelTag t) {
    switch (t) {
        case ModelTag::NonSkewed: return 'a';
        case ModelTag::SpatiallySkewed: return 'b';
        case ModelTag::TemporallySkewed: return 'c';
        case ModelTag::SpatioTemporallySkewed: return 'd';
    }
    return '?';
}

inline MobilityModel make_model(const ModelKind& kind, int L, std::uint64_t seed) {
    if (L < 2) throw ValidationError("make_model requires L >= 2");
    std::vector<double> m(static_cast<std::size_t>(L) * L, 0.0);
    switch (kind.tag) {
        case ModelTag::NonSkewed:
        case ModelTag::SpatiallySkewed: {
            if (kind.tag == ModelTag::SpatiallySkewed &&
                (kind.boost_column < 0 || kind.boost_column >= L))
                throw ValidationError("boost column out of range");
            Rng rng(seed);
            for (int i = 0; i < L; ++i)
                for (int j = 0; j < L; ++j) m[i * L + j] = rng.uniform();
            if (kind.tag == ModelTag::SpatiallySkewed)
                for (int i = 0; i < L; ++i) m[i * L + kind.boost_column] = kind.boost_value;
            break;
        }
        case ModelTag::TemporallySkewed:
        case ModelTag::SpatioTemporallySkewed: {
            if (kind.p < 0 || kind.q < 0 || kind.p + kind.q > 1.0)
                throw ValidationError("require p, q >= 0 and p + q <= 1");
            if (kind.leak < 0) throw ValidationError("leak must be nonnegative");
            bool wrap = (kind.tag == ModelTag::TemporallySkewed);
            for (int i = 0; i < L; ++i) {
                double stay = 1.0 - kind.p - kind.q;
                if (wrap) {
                    m[i * L + (i + 1) % L] += kind.p;
                    m[i * L + (i - 1 + L) % L] += kind.q;
                } else {
                    // boundary mass folds into staying
                    if (i + 1 < L) m[i * L + i + 1] += kind.p; else stay += kind.p;
                    if (i - 1 >= 0) m[i * L + i - 1] += kind.q; else stay += kind.q;
                }
                m[i * L + i] += stay;
                for (int j = 0; j < L; ++j) {
                    bool adjacent = wrap
                        ? (j == i || j == (i + 1) % L || j == (i - 1 + L) % L)
                        : (std::abs(i - j) <= 1);
                    if (!adjacent) m[i * L + j] += kind.leak;
                }
            }
            break;
        }
    }
    for (int i = 0; i < L; ++i) {
        double s = 0.0;
        for (int j = 0; j < L; ++j) s += m[i * L + j];
        for (int j = 0; j < L; ++j) m[i * L + j] /= s;
    }
    return make_mobility_model(L, std::move(m));
}

inline Trajectory sample_trajectory(const MobilityModel& model, int T, std::uint64_t seed) {
    if (T < 1) throw ValidationError("trajectory length must be >= 1");
    Rng rng(seed);
    Trajectory x(T);
    x[0] = rng.sample(model.stationary);
    for (int t = 1; t < T; ++t) x[t] = rng.sample(model.row(x[t - 1]));
    return x;
}

// log pi(x_1) + sum_t log P(x_t | x_{t-1}); -inf if any factor is zero.
inline double trajectory_log_likelihood(const MobilityModel& model, const Trajectory& x) {
    if (x.empty()) throw ValidationError("empty trajectory");
    for (int c : x)
        if (c < 0 || c >= model.cell_count) throw ValidationError("cell id out of range");
    double pi0 = model.stationary[x[0]];
    if (pi0 <= 0.0) return kNegInf;
    double ll = std::log(pi0);
    for (std::size_t t = 1; t < x.size(); ++t) {
        double p = model.p(x[t - 1], x[t]);
        if (p <= 0.0) return kNegInf;
        ll += std::log(p);
    }
    return ll;
}

// Mean KL divergence over ordered row pairs (i, j), i != j. Reported +inf when
// some row pair violates absolute continuity (the leak in models (c)/(d)
// avoids that).
inline double temporal_skewness_kl(const MobilityModel& model) {
    int L = model.cell_count;
    double total = 0.0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            if (i == j) continue;
            for (int x = 0; x < L; ++x) {
                double a = model.p(i, x), b = model.p(j, x);
                if (a == 0.0) continue;  // 0 log 0 = 0
                if (b == 0.0) return kInf;
                total += a * std::log(a / b);
            }
        }
    }
    return total / (static_cast<double>(L) * (L - 1));
}

// Empirical model from observed trajectories with additive smoothing on the
// transition counts; the stationary estimate is the visit frequency floored
// away from zero and renormalized.
inline MobilityModel estimate_model(const std::vector<Trajectory>& trajectories,
                                    double smoothing = 1e-6) {
    if (smoothing < 0.0) throw ValidationError("smoothing must be nonnegative");
    int L = 0;
    for (const auto& x : trajectories)
        for (int c : x) {
            if (c < 0) throw ValidationError("negative cell id");
            L = std::max(L, c + 1);
        }
    bool any_transition = false;
    for (const auto& x : trajectories)
        if (x.size() >= 2) any_transition = true;
    if (L < 1 || !any_transition)
        throw ValidationError("need at least one trajectory of length >= 2");

    std::vector<double> counts(static_cast<std::size_t>(L) * L, 0.0);
    std::vector<double> departures(L, 0.0), visits(L, 0.0);
    double total_visits = 0.0;
    for (const auto& x : trajectories) {
        for (int c : x) {
            visits[c] += 1.0;
            total_visits += 1.0;
        }
        for (std::size_t t = 1; t < x.size(); ++t) {
            counts[x[t - 1] * L + x[t]] += 1.0;
            departures[x[t - 1]] += 1.0;
        }
    }
    std::vector<double> m(static_cast<std::size_t>(L) * L);
    for (int i = 0; i < L; ++i) {
        double denom = departures[i] + L * smoothing;
        if (denom <= 0.0)
            throw ErgodicityError("cell " + std::to_string(i) +
                                  " never departed and smoothing is zero");
        for (int j = 0; j < L; ++j) m[i * L + j] = (counts[i * L + j] + smoothing) / denom;
    }
    MobilityModel model;
    model.cell_count = L;
    // validate before overriding the stationary with the empirical estimate
    MobilityModel checked = make_mobility_model(L, std::move(m));
    model.transition = std::move(checked.transition);
    double floor = smoothing / (total_visits + L * smoothing);
    std::vector<double> pi(L);
    for (int i = 0; i < L; ++i) pi[i] = std::max(visits[i] / total_visits, floor);
    double s = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& v : pi) v /= s;
    for (double v : pi)
        if (v <= 0.0) throw ErgodicityError("empirical stationary entry is zero");
    model.stationary = std::move(pi);
    return model;
}

// ---- model text format -----------------------------------------------------
// Header "<L> T_FORMAT v1", L transition rows, one stationary row.

inline void write_model(std::ostream& os, const MobilityModel& model) {
    int L = model.cell_count;
    os << L << " T_FORMAT v1\n";
    os << std::setprecision(17);
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) os << (j ? " " : "") << model.p(i, j);
        os << "\n";
    }
    for (int j = 0; j < L; ++j) os << (j ? " " : "") << model.stationary[j];
    os << "\n";
}

inline void save_model(const std::string& path, const MobilityModel& model) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_model(os, model);
}

inline MobilityModel read_model(std::istream& is) {
    int L = 0;
    std::string tag, version;
    if (!(is >> L >> tag >> version) || tag != "T_FORMAT" || version != "v1")
        throw IoError("bad model header, expected '<L> T_FORMAT v1'");
    if (L < 1) throw IoError("bad cell count in model header");
    MobilityModel m;
    m.cell_count = L;
    m.transition.resize(static_cast<std::size_t>(L) * L);
    m.stationary.resize(L);
    for (double& v : m.transition)
        if (!(is >> v)) throw IoError("truncated model transition matrix");
    for (double& v : m.stationary)
        if (!(is >> v)) throw IoError("truncated model stationary row");
    detail::check_row_stochastic(L, m.transition);
    return m;
}

inline MobilityModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return read_model(is);
}

}  // namespace chaffsim

#endif
