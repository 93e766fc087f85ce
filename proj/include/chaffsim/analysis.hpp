#ifndef CHAFFSIM_ANALYSIS_HPP
#define CHAFFSIM_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "chaffsim/errors.hpp"
#include "chaffsim/mobility.hpp"
#include "chaffsim/rng.hpp"
#include "chaffsim/strategies.hpp"

namespace chaffsim {

// P_IM = sum pi^2 + (1/N)(1 - sum pi^2)
inline double pim_closed_form(std::span<const double> pi, int N) {
    if (N < 2) throw ValidationError("pim_closed_form requires N >= 2");
    double s2 = 0.0;
    for (double v : pi) s2 += v * v;
    return s2 + (1.0 - s2) / N;
}

// P_ML = (1/T) sum_t pi(x_{2,t}) for the ML chaff trajectory.
inline double pml_closed_form(const MobilityModel& model, int T) {
    Trajectory x2 = ml_chaff(model, T);
    double s = 0.0;
    for (int c : x2) s += model.stationary[c];
    return s / T;
}

// max pi - sum pi^2; zero iff pi is uniform on its support universe.
inline double lemma1_gap(std::span<const double> pi) {
    double mx = 0.0, s2 = 0.0;
    for (double v : pi) {
        mx = std::max(mx, v);
        s2 += v * v;
    }
    return mx - s2;
}

// Per-slot log-likelihood differences c_1..c_T between user and chaff.
inline std::vector<double> c_values(const MobilityModel& model, const Trajectory& user,
                                    const Trajectory& chaff) {
    if (user.size() != chaff.size()) throw ValidationError("length mismatch");
    std::vector<double> c(user.size());
    auto lg = [](double p) {
        if (p <= 0.0) throw UndefinedValueError("zero-probability factor in c_t");
        return std::log(p);
    };
    c[0] = lg(model.stationary[user[0]]) - lg(model.stationary[chaff[0]]);
    for (std::size_t t = 1; t < user.size(); ++t)
        c[t] = lg(model.p(user[t - 1], user[t])) - lg(model.p(chaff[t - 1], chaff[t]));
    return c;
}

// Constants feeding the bound evaluators, computed from the model.
struct ModelConstants {
    double c0, c_min, c_max;
    double pi_max, pi_2, p_max, p_min, p_2;
};

inline ModelConstants model_constants(const MobilityModel& model) {
    int L = model.cell_count;
    if (L < 2) throw ValidationError("model_constants requires L >= 2");
    std::vector<double> pi(model.stationary);
    std::sort(pi.begin(), pi.end(), std::greater<>());
    double pi_max = pi[0], pi_2 = pi[1];
    double p_max = 0.0, p_min = kInf, p_2 = kInf;
    for (int i = 0; i < L; ++i) {
        double r1 = 0.0, r2 = 0.0;  // two largest positive entries of row i
        int positives = 0;
        for (int j = 0; j < L; ++j) {
            double v = model.p(i, j);
            if (v <= 0.0) continue;
            ++positives;
            p_max = std::max(p_max, v);
            p_min = std::min(p_min, v);
            if (v > r1) {
                r2 = r1;
                r1 = v;
            } else if (v > r2) {
                r2 = v;
            }
        }
        if (positives < 2)
            throw ValidationError("row " + std::to_string(i) +
                                  " has fewer than 2 positive entries; p_2 undefined");
        p_2 = std::min(p_2, r2);
    }
    return {std::log(pi_max / pi_2), std::log(p_min / p_max), std::log(p_max / p_2),
            pi_max, pi_2, p_max, p_min, p_2};
}

// ---- induced chain of the CML strategy -------------------------------------

// Composite chain over reachable (user, chaff) pairs. The user coordinate
// moves by P; the chaff coordinate follows deterministically by the CML rule.
struct InducedChain {
    std::vector<std::pair<int, int>> states;  // (user, chaff)
    std::vector<double> transition;           // n*n row-major
    std::vector<double> stationary;           // on reachable states
    std::vector<double> g;                    // g(y) = E[c_t | y_{t-1} = y]

    int size() const { return static_cast<int>(states.size()); }

    double expected_c_exact() const {
        double s = 0.0;
        for (int i = 0; i < size(); ++i) s += stationary[i] * g[i];
        return s;
    }
};

namespace detail {

// Stationary distribution of a generic chain given as an n*n matrix; power
// iteration with a Cesaro fallback is not needed here because callers only
// pass chains that go through mixing_time checks anyway.
inline std::vector<double> chain_stationary(int n, const std::vector<double>& m,
                                            double residual_tol = 1e-12,
                                            long max_iter = 1000000) {
    std::vector<double> pi(n, 1.0 / n), next(n);
    for (long it = 0; it < max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            double w = pi[i];
            if (w == 0.0) continue;
            const double* row = m.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) next[j] += w * row[j];
        }
        double res = 0.0;
        for (int j = 0; j < n; ++j) res = std::max(res, std::fabs(next[j] - pi[j]));
        pi.swap(next);
        if (res < residual_tol) return pi;
    }
    throw ErgodicityError("induced-chain power iteration did not converge");
}

}  // namespace detail

inline InducedChain induced_chain_cml(const MobilityModel& model) {
    int L = model.cell_count;
    if (static_cast<long>(L) * L > 10000)
        throw SizeError("induced chain guard: L^2 > 1e4");
    // reachable pairs, starting from the CML initial states
    std::map<std::pair<int, int>, int> index;
    std::vector<std::pair<int, int>> states;
    std::vector<std::pair<int, int>> frontier;
    auto add = [&](int u, int c) {
        auto [it, inserted] = index.try_emplace({u, c}, static_cast<int>(states.size()));
        if (inserted) {
            states.push_back({u, c});
            frontier.push_back({u, c});
        }
        return it->second;
    };
    for (int x = 0; x < L; ++x) add(x, cml_step(model, x, -1));
    while (!frontier.empty()) {
        auto [u, c] = frontier.back();
        frontier.pop_back();
        for (int un = 0; un < L; ++un)
            if (model.p(u, un) > 0.0) add(un, cml_step(model, un, c));
    }
    int n = static_cast<int>(states.size());
    InducedChain chain;
    chain.states = states;
    chain.transition.assign(static_cast<std::size_t>(n) * n, 0.0);
    chain.g.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        auto [u, c] = states[i];
        for (int un = 0; un < L; ++un) {
            double p = model.p(u, un);
            if (p <= 0.0) continue;
            int cn = cml_step(model, un, c);
            chain.transition[i * n + index.at({un, cn})] += p;
            double pc = model.p(c, cn);
            chain.g[i] += p * (std::log(p) - (pc > 0.0 ? std::log(pc) : kNegInf));
        }
    }
    chain.stationary = detail::chain_stationary(n, chain.transition);
    return chain;
}

// ---- mixing time -----------------------------------------------------------

// Smallest t with max-over-starts TV(P^t(x, .), pi) <= epsilon.
inline int mixing_time(int n, const std::vector<double>& transition,
                       const std::vector<double>& stationary, double epsilon,
                       int cap = 100000) {
    if (epsilon <= 0.0 || epsilon >= 1.0)
        throw ValidationError("mixing_time requires epsilon in (0,1)");
    std::vector<double> power(transition), next(static_cast<std::size_t>(n) * n);
    for (int t = 1; t <= cap; ++t) {
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            double tv = 0.0;
            for (int j = 0; j < n; ++j)
                tv += std::fabs(power[i * n + j] - stationary[j]);
            d = std::max(d, 0.5 * tv);
        }
        if (d <= epsilon) return t;
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                double w = power[i * n + k];
                if (w == 0.0) continue;
                const double* row = transition.data() + static_cast<std::size_t>(k) * n;
                for (int j = 0; j < n; ++j) next[i * n + j] += w * row[j];
            }
        power.swap(next);
    }
    throw NonMixingError("chain did not mix within the iteration cap");
}

inline int mixing_time(const MobilityModel& model, double epsilon, int cap = 100000) {
    return mixing_time(model.cell_count, model.transition, model.stationary, epsilon, cap);
}

inline int mixing_time(const InducedChain& chain, double epsilon, int cap = 100000) {
    return mixing_time(chain.size(), chain.transition, chain.stationary, epsilon, cap);
}

// ---- Monte Carlo E[c_t] ----------------------------------------------------

struct ExpectedC {
    double mean = 0.0;
    std::vector<double> samples;  // c_t draws past burn-in (histogram data, fig5 preset)
};

inline ExpectedC expected_c(const MobilityModel& model, StrategyKind strategy, int trials,
                            int T, std::uint64_t seed, int burn_in = 1) {
    if (trials < 1) throw ValidationError("expected_c requires trials >= 1");
    if (strategy != StrategyKind::CML && strategy != StrategyKind::MO)
        throw UnsupportedStrategyError("expected_c supports CML and MO");
    ExpectedC out;
    double sum = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        Trajectory user = sample_trajectory(model, T, mix_seed(seed, trial));
        Trajectory chaff = (strategy == StrategyKind::CML) ? cml_chaff(model, user)
                                                           : mo_chaff(model, user);
        std::vector<double> c = c_values(model, user, chaff);
        for (int t = std::max(burn_in, 1); t < T; ++t) {
            out.samples.push_back(c[t]);
            sum += c[t];
        }
    }
    if (out.samples.empty()) throw ValidationError("no samples past burn-in");
    out.mean = sum / static_cast<double>(out.samples.size());
    return out;
}

// ---- concentration bounds --------------------------------------------------

struct BoundInputs {
    double c0 = 0.0;
    double c_min = 0.0;
    double c_max = 0.0;
    double mu = 0.0;       // -E[c_t]
    double epsilon = 0.0;  // mixing tolerance
    double delta = 0.0;    // delta (Theorem 1) or delta' (Theorem 2)
    int w = 1;             // t_mix(epsilon) + 1
    int T = 0;
};

// Tracking-accuracy bound for CML (hence OO). nullopt = condition not met;
// callers must not read an inapplicable bound as a small one.
inline std::optional<double> theorem1_bound(const BoundInputs& in) {
    if (in.epsilon <= 0.0 || in.w < 1) throw ValidationError("bad bound inputs");
    if (in.T <= in.w) return std::nullopt;
    double slack = in.mu - in.epsilon * in.delta - in.c0 / (in.T - in.w);
    if (slack < 0.0) return std::nullopt;
    double denom = in.c_max - in.c_min + 2.0 * in.epsilon * in.delta;
    double e = -2.0 * (static_cast<double>(in.T) / in.w - 1.0) * slack * slack /
               (denom * denom);
    return in.w * std::exp(e);
}

// Per-slot accuracy bound at time T under MO; inputs carry w', delta', mu'.
inline std::optional<double> theorem2_bound(const BoundInputs& in) {
    if (in.epsilon <= 0.0 || in.w < 1) throw ValidationError("bad bound inputs");
    if (in.T <= in.w + 1) return std::nullopt;
    double slack = in.mu - in.epsilon * in.delta - (in.c0 + in.c_max) / (in.T - in.w - 1);
    if (slack < 0.0) return std::nullopt;
    double denom = in.c_max - in.c_min + 2.0 * in.epsilon * in.delta;
    double e = -2.0 * (static_cast<double>(in.T - in.w - 1) / in.w) * slack * slack /
               (denom * denom);
    return in.w * std::exp(e);
}

// Time-average accuracy bound under MO; T0 = smallest horizon at which the
// Theorem 2 condition holds.
inline double corollary1_bound(const BoundInputs& in, int T0, int T) {
    if (T0 > T || T0 <= in.w + 1) throw ValidationError("bad T0 for corollary bound");
    double slack = in.mu - in.epsilon * in.delta - (in.c0 + in.c_max) / (T0 - in.w - 1);
    double denom = in.c_max - in.c_min + 2.0 * in.epsilon * in.delta;
    double alpha = 2.0 * slack * slack / (in.w * denom * denom);
    if (alpha <= 0.0) throw ValidationError("alpha must be positive");
    return (T0 - 1.0 + in.w * std::exp(alpha * (in.w + 1.0 - T0)) /
                           (1.0 - std::exp(-alpha))) /
           static_cast<double>(T);
}

// Assembles exact Theorem 1 inputs from the induced CML chain.
inline BoundInputs theorem1_inputs(const MobilityModel& model, double epsilon, int T,
                                   int mixing_cap = 100000) {
    InducedChain chain = induced_chain_cml(model);
    ModelConstants mc = model_constants(model);
    double sum_abs = 0.0, max_abs = 0.0;
    for (double v : chain.g) {
        sum_abs += std::fabs(v);
        max_abs = std::max(max_abs, std::fabs(v));
    }
    BoundInputs in;
    in.c0 = mc.c0;
    in.c_min = mc.c_min;
    in.c_max = mc.c_max;
    in.mu = -chain.expected_c_exact();
    in.epsilon = epsilon;
    in.delta = std::min(sum_abs, 2.0 * max_abs);
    in.w = mixing_time(chain, epsilon, mixing_cap) + 1;
    in.T = T;
    return in;
}

// ---- Theorem 2 input estimation (documented approximation) -----------------

// The Theorem 2 chain has a continuous gamma component, so w' and delta' have
// no exact computation recipe. This estimate runs MO dynamics for a long
// simulated stretch (gamma kept at full precision by the MoStream, conditional
// statistics keyed on a 0.01-quantized gamma only to bound memory) and then
// measures mixing and conditional means on the empirical (user, chaff)
// marginal pair chain. Labeled an estimate; callers may supply w'/delta'
// directly instead.
struct Theorem2Estimate {
    int w_prime = 0;
    double delta_prime = 0.0;
    double mu_prime = 0.0;
    bool mixed = true;  // false if the empirical pair chain hit the mixing cap
};

inline Theorem2Estimate estimate_theorem2_inputs(const MobilityModel& model, double epsilon,
                                                 std::uint64_t seed, int steps = 100000,
                                                 int min_visits = 20) {
    int L = model.cell_count;
    if (static_cast<long>(L) * L > 10000)
        throw SizeError("theorem-2 estimate guard: L^2 > 1e4");
    Rng rng(seed);
    MoStream chaff(model);
    int prev_user = rng.sample(model.stationary);
    int prev_chaff = chaff.step(prev_user);
    int n = L * L;
    auto pair_id = [&](int u, int c) { return u * L + c; };
    std::vector<std::vector<long>> counts(n, std::vector<long>(n, 0));
    std::vector<double> c_sum(n, 0.0);
    std::vector<long> c_n(n, 0);
    double mu_sum = 0.0;
    long mu_n = 0;
    for (int t = 0; t < steps; ++t) {
        int cur = pair_id(prev_user, prev_chaff);
        int next_user = rng.sample(model.row(prev_user));
        int next_chaff = chaff.step(next_user);
        double pc = model.p(prev_chaff, next_chaff);
        double c = std::log(model.p(prev_user, next_user)) -
                   (pc > 0.0 ? std::log(pc) : kNegInf);
        counts[cur][pair_id(next_user, next_chaff)] += 1;
        c_sum[cur] += c;
        c_n[cur] += 1;
        mu_sum += c;
        ++mu_n;
        prev_user = next_user;
        prev_chaff = next_chaff;
    }
    Theorem2Estimate est;
    est.mu_prime = -mu_sum / static_cast<double>(mu_n);
    double gmax = 0.0;
    for (int i = 0; i < n; ++i)
        if (c_n[i] >= min_visits)
            gmax = std::max(gmax, std::fabs(c_sum[i] / static_cast<double>(c_n[i])));
    est.delta_prime = 2.0 * gmax;
    // empirical pair chain restricted to visited states
    std::vector<int> visited;
    for (int i = 0; i < n; ++i)
        if (c_n[i] > 0) visited.push_back(i);
    int m = static_cast<int>(visited.size());
    std::vector<double> trans(static_cast<std::size_t>(m) * m, 0.0), occ(m, 0.0);
    double total = 0.0;
    for (int a = 0; a < m; ++a) {
        long row_total = 0;
        for (int b = 0; b < m; ++b) row_total += counts[visited[a]][visited[b]];
        if (row_total == 0) {
            trans[a * m + a] = 1.0;  // last visited state of the run
        } else {
            for (int b = 0; b < m; ++b)
                trans[a * m + b] =
                    static_cast<double>(counts[visited[a]][visited[b]]) / row_total;
        }
        occ[a] = static_cast<double>(c_n[visited[a]]);
        total += occ[a];
    }
    for (double& v : occ) v /= std::max(total, 1.0);
    try {
        est.w_prime = mixing_time(m, trans, occ, epsilon, 2000) + 1;
    } catch (const NonMixingError&) {
        est.mixed = false;
        est.w_prime = 2001;
    }
    return est;
}

}  // namespace chaffsim

#endif
