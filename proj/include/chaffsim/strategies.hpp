#ifndef CHAFFSIM_STRATEGIES_HPP
#define CHAFFSIM_STRATEGIES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "chaffsim/errors.hpp"
#include "chaffsim/mobility.hpp"
#include "chaffsim/rng.hpp"

namespace chaffsim {

enum class StrategyKind { IM, ML, CML, OO, MO, RML, ROO, RMO };

inline const char* strategy_name(StrategyKind s) {
    switch (s) {
        case StrategyKind::IM: return "IM";
        case StrategyKind::ML: return "ML";
        case StrategyKind::CML: return "CML";
        case StrategyKind::OO: return "OO";
        case StrategyKind::MO: return "MO";
        case StrategyKind::RML: return "RML";
        case StrategyKind::ROO: return "ROO";
        case StrategyKind::RMO: return "RMO";
    }
    return "?";
}

inline std::optional<StrategyKind> strategy_from_name(const std::string& s) {
    for (StrategyKind k : {StrategyKind::IM, StrategyKind::ML, StrategyKind::CML,
                           StrategyKind::OO, StrategyKind::MO, StrategyKind::RML,
                           StrategyKind::ROO, StrategyKind::RMO})
        if (s == strategy_name(k)) return k;
    return std::nullopt;
}

// Log-likelihood comparisons use this tolerance: "strictly greater" means
// gap > kLogTol, "equal" means |gap| <= kLogTol.
inline constexpr double kLogTol = 1e-9;

// (cell, slot) pairs a robust chaff must avoid; slots are 1-based.
struct AvoidanceSet {
    std::vector<std::pair<int, int>> pairs;  // (cell, slot)

    bool avoided(int cell, int slot) const {
        for (auto [c, t] : pairs)
            if (c == cell && t == slot) return true;
        return false;
    }
};

// ---- IM --------------------------------------------------------------------

inline std::vector<Trajectory> im_chaffs(const MobilityModel& model, int count, int T,
                                         std::uint64_t seed) {
    if (count < 1) throw ValidationError("im_chaffs requires count >= 1");
    std::vector<Trajectory> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
        out.push_back(sample_trajectory(model, T, mix_seed(seed, i)));
    return out;
}

// ---- ML (layered-graph shortest path, forward DP) --------------------------

// Maximum-likelihood trajectory subject to an avoidance set. Zero-probability
// transitions are absent edges. Tie-break: smallest cell id.
inline Trajectory ml_chaff_avoiding(const MobilityModel& model, int T,
                                    const AvoidanceSet& avoid) {
    if (T < 1) throw ValidationError("ml_chaff requires T >= 1");
    int L = model.cell_count;
    std::vector<double> cost(L), prev_cost(L);
    std::vector<std::vector<int>> back(T, std::vector<int>(L, -1));
    for (int x = 0; x < L; ++x) {
        double pi = model.stationary[x];
        prev_cost[x] = (avoid.avoided(x, 1) || pi <= 0.0) ? kInf : -std::log(pi);
    }
    for (int t = 2; t <= T; ++t) {
        for (int x = 0; x < L; ++x) {
            double best = kInf;
            int arg = -1;
            if (!avoid.avoided(x, t)) {
                for (int xp = 0; xp < L; ++xp) {
                    double p = model.p(xp, x);
                    if (p <= 0.0 || prev_cost[xp] == kInf) continue;
                    double c = prev_cost[xp] + -std::log(p);
                    if (c < best) {
                        best = c;
                        arg = xp;
                    }
                }
            }
            cost[x] = best;
            back[t - 1][x] = arg;
        }
        prev_cost.swap(cost);
    }
    double best = kInf;
    int arg = -1;
    for (int x = 0; x < L; ++x)
        if (prev_cost[x] < best) {
            best = prev_cost[x];
            arg = x;
        }
    if (arg < 0) throw ValidationError("avoidance set removed every feasible path");
    Trajectory x(T);
    x[T - 1] = arg;
    for (int t = T - 1; t >= 1; --t) x[t - 1] = back[t][x[t]];
    return x;
}

inline Trajectory ml_chaff(const MobilityModel& model, int T) {
    return ml_chaff_avoiding(model, T, {});
}

// ---- CML -------------------------------------------------------------------

// Greedy max-likelihood move that never co-locates with the user.
// f(user_cell, prev_chaff): argmax over cells != user_cell, smallest id wins ties.
inline int cml_step(const MobilityModel& model, int user_cell, int prev_chaff) {
    auto probs = (prev_chaff < 0) ? std::span<const double>(model.stationary)
                                  : model.row(prev_chaff);
    int arg = -1;
    double best = -1.0;
    for (int x = 0; x < model.cell_count; ++x) {
        if (x == user_cell) continue;
        if (probs[x] > best) {
            best = probs[x];
            arg = x;
        }
    }
    return arg;
}

inline Trajectory cml_chaff(const MobilityModel& model, const Trajectory& user) {
    if (model.cell_count < 2) throw ValidationError("cml_chaff requires L >= 2");
    Trajectory chaff(user.size());
    int prev = -1;
    for (std::size_t t = 0; t < user.size(); ++t) {
        prev = cml_step(model, user[t], prev);
        chaff[t] = prev;
    }
    return chaff;
}

// ---- OO (offline layered dynamic program) ----------------------------------

struct OoResult {
    Trajectory chaff;
    int intersections = 0;   // i*, number of co-located slots
    bool strict = false;     // likelihood constraint met strictly (vs equality fallback)
};

// Per-slot allowed cell sets; empty vector = all cells allowed at every slot.
// Backward DP over K_t(x, i) = shortest path cost from slot t at cell x to the
// sink using at most i intersections with the user's path.
inline OoResult oo_chaff_restricted(const MobilityModel& model, const Trajectory& user,
                                    const std::vector<std::vector<char>>& allowed) {
    int T = static_cast<int>(user.size());
    int L = model.cell_count;
    if (T < 1) throw ValidationError("oo_chaff requires T >= 1");
    auto ok = [&](int x, int t) {  // t is 1-based slot
        return allowed.empty() || allowed[t - 1][x] != 0;
    };

    double user_cost = -std::log(model.stationary[user[0]]);
    for (int t = 1; t < T; ++t) user_cost += -std::log(model.p(user[t - 1], user[t]));

    // K[t-1][x][i] for t = 1..T; i ranges 0..T-t+1
    std::vector<std::vector<std::vector<double>>> K(T);
    std::vector<std::vector<std::vector<int>>> nxt(T);
    auto imax = [&](int t) { return T - t + 1; };  // t is 1-based

    K[T - 1].assign(L, std::vector<double>(imax(T) + 1, kInf));
    nxt[T - 1].assign(L, std::vector<int>(imax(T) + 1, -1));
    for (int x = 0; x < L; ++x) {
        if (!ok(x, T)) continue;
        K[T - 1][x][1] = 0.0;
        K[T - 1][x][0] = (x != user[T - 1]) ? 0.0 : kInf;
    }
    for (int t = T - 1; t >= 1; --t) {
        K[t - 1].assign(L, std::vector<double>(imax(t) + 1, kInf));
        nxt[t - 1].assign(L, std::vector<int>(imax(t) + 1, -1));
        for (int x = 0; x < L; ++x) {
            if (!ok(x, t)) continue;
            for (int i = 0; i <= imax(t); ++i) {
                int j = (x != user[t - 1]) ? i : i - 1;
                if (j < 0) continue;  // infeasible
                int jc = std::min(j, imax(t + 1));
                double best = kInf;
                int arg = -1;
                for (int xp = 0; xp < L; ++xp) {
                    double p = model.p(x, xp);
                    if (p <= 0.0) continue;
                    double c = K[t][xp][jc];
                    if (c == kInf) continue;
                    c += -std::log(p);
                    if (c < best) {
                        best = c;
                        arg = xp;
                    }
                }
                K[t - 1][x][i] = best;
                nxt[t - 1][x][i] = arg;
            }
        }
    }
    // source layer
    std::vector<double> K0(T + 1, kInf);
    std::vector<int> n0(T + 1, -1);
    for (int i = 0; i <= T; ++i) {
        int ic = std::min(i, imax(1));
        double best = kInf;
        int arg = -1;
        for (int x = 0; x < L; ++x) {
            double pi = model.stationary[x];
            if (pi <= 0.0 || K[0][x][ic] == kInf) continue;
            double c = -std::log(pi) + K[0][x][ic];
            if (c < best) {
                best = c;
                arg = x;
            }
        }
        K0[i] = best;
        n0[i] = arg;
    }

    OoResult res;
    int istar = -1;
    if (K0[T] < user_cost - kLogTol) {
        res.strict = true;
        for (int i = 0; i <= T; ++i)
            if (K0[i] < user_cost - kLogTol) { istar = i; break; }
    } else {
        for (int i = 0; i <= T; ++i)
            if (std::fabs(K0[i] - user_cost) <= kLogTol) { istar = i; break; }
        if (istar < 0) {
            // Restricted instance where even equality is unreachable (robust
            // variants): take the best achievable likelihood, fewest intersections.
            for (int i = 0; i <= T; ++i)
                if (K0[i] <= K0[T] + kLogTol) { istar = i; break; }
        }
    }
    if (istar < 0 || n0[istar] < 0)
        throw ValidationError("restricted OO instance has no feasible path");

    res.chaff.resize(T);
    res.chaff[0] = n0[istar];
    int icur = istar;
    for (int t = 2; t <= T; ++t) {
        int prev = res.chaff[t - 2];
        res.chaff[t - 1] = nxt[t - 2][prev][std::min(icur, imax(t - 1))];
        if (prev == user[t - 2]) --icur;
    }
    res.intersections = 0;
    for (int t = 0; t < T; ++t)
        if (res.chaff[t] == user[t]) ++res.intersections;
    return res;
}

inline OoResult oo_chaff(const MobilityModel& model, const Trajectory& user) {
    return oo_chaff_restricted(model, user, {});
}

// ---- MO (online myopic, slot-by-slot) --------------------------------------

// Online myopic strategy. One instance per chaff; feed user cells in slot
// order via step(). Only the user's past is ever consulted.
class MoStream {
public:
    explicit MoStream(const MobilityModel& model) : model_(&model) {}

    // allowed: optional per-cell mask for this slot (robust variant); a mask
    // with no admissible cell falls back to the unrestricted step.
    int step(int user_cell, const std::vector<char>* allowed = nullptr) {
        const MobilityModel& m = *model_;
        auto admissible = [&](int x) { return !allowed || (*allowed)[x] != 0; };
        int n_adm = 0;
        if (allowed)
            for (int x = 0; x < m.cell_count; ++x) n_adm += (*allowed)[x] != 0;
        if (allowed && n_adm == 0) {
            ++fallbacks_;
            allowed = nullptr;  // admissible() now accepts every cell
        }
        auto probs = (t_ == 0) ? std::span<const double>(m.stationary) : m.row(prev_);
        auto argmax_excluding = [&](int excluded) {
            int arg = -1;
            double best = -1.0;
            for (int x = 0; x < m.cell_count; ++x) {
                if (x == excluded || !admissible(x)) continue;
                if (probs[x] > best) {
                    best = probs[x];
                    arg = x;
                }
            }
            return arg;
        };
        int ml = argmax_excluding(-1);
        int chosen;
        double step_user = (t_ == 0) ? std::log(m.stationary[user_cell])
                                     : safe_log(m.p(prev_user_, user_cell));
        if (ml != user_cell) {
            chosen = ml;  // case (1)
        } else {
            int second = argmax_excluding(user_cell);
            double cand = (second < 0)
                              ? kInf
                              : gamma_ + step_user -
                                    ((t_ == 0) ? safe_log(m.stationary[second])
                                               : safe_log(m.p(prev_, second)));
            chosen = (cand <= kLogTol) ? second  // case (2)
                                       : ml;     // case (3)
        }
        double step_chaff = (t_ == 0) ? safe_log(m.stationary[chosen])
                                      : safe_log(m.p(prev_, chosen));
        gamma_ += step_user - step_chaff;
        prev_ = chosen;
        prev_user_ = user_cell;
        ++t_;
        return chosen;
    }

    double gamma() const { return gamma_; }
    int fallback_count() const { return fallbacks_; }

private:
    static double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

    const MobilityModel* model_;
    double gamma_ = 0.0;
    int prev_ = -1;
    int prev_user_ = -1;
    int t_ = 0;
    int fallbacks_ = 0;
};

inline Trajectory mo_chaff(const MobilityModel& model, const Trajectory& user) {
    MoStream s(model);
    Trajectory chaff(user.size());
    for (std::size_t t = 0; t < user.size(); ++t) chaff[t] = s.step(user[t]);
    return chaff;
}

// ---- Robust variants -------------------------------------------------------

namespace detail {

// One random (cell, slot) pair per previously fixed trajectory.
inline AvoidanceSet draw_avoidance(const std::vector<Trajectory>& fixed, int T, Rng& rng) {
    AvoidanceSet a;
    for (const auto& traj : fixed) {
        int slot = static_cast<int>(rng.uniform_int(T)) + 1;
        a.pairs.emplace_back(traj[slot - 1], slot);
    }
    return a;
}

}  // namespace detail

inline std::vector<Trajectory> rml_chaffs(const MobilityModel& model, const Trajectory& user,
                                          int N, std::uint64_t seed) {
    if (N < 2) throw ValidationError("rml_chaffs requires N >= 2");
    int T = static_cast<int>(user.size());
    Rng rng(seed);
    std::vector<Trajectory> fixed{user};
    std::vector<Trajectory> out;
    for (int u = 2; u <= N; ++u) {
        AvoidanceSet a = detail::draw_avoidance(fixed, T, rng);
        Trajectory x = ml_chaff_avoiding(model, T, a);
        fixed.push_back(x);
        out.push_back(std::move(x));
    }
    return out;
}

inline std::vector<std::vector<char>> avoidance_to_allowed(const AvoidanceSet& a, int L,
                                                           int T) {
    std::vector<std::vector<char>> allowed(T, std::vector<char>(L, 1));
    for (auto [cell, slot] : a.pairs) allowed[slot - 1][cell] = 0;
    return allowed;
}

inline std::vector<Trajectory> roo_chaffs(const MobilityModel& model, const Trajectory& user,
                                          int N, std::uint64_t seed) {
    if (N < 2) throw ValidationError("roo_chaffs requires N >= 2");
    int T = static_cast<int>(user.size());
    Rng rng(seed);
    std::vector<Trajectory> fixed{user};
    std::vector<Trajectory> out;
    for (int u = 2; u <= N; ++u) {
        AvoidanceSet a = detail::draw_avoidance(fixed, T, rng);
        OoResult r = oo_chaff_restricted(model, user,
                                         avoidance_to_allowed(a, model.cell_count, T));
        fixed.push_back(r.chaff);
        out.push_back(std::move(r.chaff));
    }
    return out;
}

// RMO: each chaff u avoids the current-slot cell of one earlier trajectory u'
// at one pre-drawn slot t_{u'}; otherwise plays the MO step against the user.
inline std::vector<Trajectory> rmo_chaffs(const MobilityModel& model, const Trajectory& user,
                                          int N, std::uint64_t seed) {
    if (N < 2) throw ValidationError("rmo_chaffs requires N >= 2");
    int T = static_cast<int>(user.size());
    int L = model.cell_count;
    Rng rng(seed);
    // avoid_slot[u][u'] = slot at which chaff u must avoid trajectory u'
    std::vector<std::vector<int>> avoid_slot(N + 1);
    for (int u = 2; u <= N; ++u) {
        avoid_slot[u].resize(u);
        for (int up = 1; up < u; ++up)
            avoid_slot[u][up] = static_cast<int>(rng.uniform_int(T)) + 1;
    }
    std::vector<MoStream> streams;
    streams.reserve(N - 1);
    for (int u = 2; u <= N; ++u) streams.emplace_back(model);
    std::vector<Trajectory> out(N - 1, Trajectory(T));
    std::vector<int> current(N + 1);  // current-slot cells, index 1 = user
    for (int t = 1; t <= T; ++t) {
        current[1] = user[t - 1];
        for (int u = 2; u <= N; ++u) {
            std::vector<char> mask(L, 1);
            for (int up = 1; up < u; ++up)
                if (avoid_slot[u][up] == t) mask[current[up]] = 0;
            int cell = streams[u - 2].step(user[t - 1], &mask);
            current[u] = cell;
            out[u - 2][t - 1] = cell;
        }
    }
    return out;
}

// ---- brute-force oracles ---------------------------------------------------

struct BruteForceMl {
    std::vector<Trajectory> optima;
    double log_likelihood = kNegInf;
};

namespace detail {

template <typename Fn>
void for_each_trajectory(int L, int T, Fn&& fn) {
    Trajectory x(T, 0);
    while (true) {
        fn(const_cast<const Trajectory&>(x));
        int t = T - 1;
        while (t >= 0 && ++x[t] == L) x[t--] = 0;
        if (t < 0) break;
    }
}

inline void check_enumeration_size(int L, int T) {
    double n = std::pow(static_cast<double>(L), T);
    if (n > 1e6) throw SizeError("L^T exceeds enumeration limit of 1e6");
}

}  // namespace detail

inline BruteForceMl brute_force_ml(const MobilityModel& model, int T,
                                   const AvoidanceSet& avoid = {}) {
    detail::check_enumeration_size(model.cell_count, T);
    BruteForceMl res;
    detail::for_each_trajectory(model.cell_count, T, [&](const Trajectory& x) {
        for (int t = 1; t <= T; ++t)
            if (avoid.avoided(x[t - 1], t)) return;
        double ll = trajectory_log_likelihood(model, x);
        if (ll == kNegInf) return;
        if (ll > res.log_likelihood + kLogTol) {
            res.log_likelihood = ll;
            res.optima.assign(1, x);
        } else if (std::fabs(ll - res.log_likelihood) <= kLogTol) {
            res.optima.push_back(x);
            if (ll > res.log_likelihood) res.log_likelihood = ll;
        }
    });
    return res;
}

struct BruteForceOo {
    int intersections = 0;
    bool strict = false;
    std::vector<Trajectory> optima;
};

inline BruteForceOo brute_force_oo(const MobilityModel& model, const Trajectory& user,
                                   const AvoidanceSet& avoid = {}) {
    int T = static_cast<int>(user.size());
    detail::check_enumeration_size(model.cell_count, T);
    double user_ll = trajectory_log_likelihood(model, user);
    auto overlap = [&](const Trajectory& x) {
        int n = 0;
        for (int t = 0; t < T; ++t) n += (x[t] == user[t]);
        return n;
    };
    BruteForceOo strict_best, equal_best, any_best;
    strict_best.intersections = equal_best.intersections = any_best.intersections = T + 1;
    double any_best_ll = kNegInf;
    detail::for_each_trajectory(model.cell_count, T, [&](const Trajectory& x) {
        for (int t = 1; t <= T; ++t)
            if (avoid.avoided(x[t - 1], t)) return;
        double ll = trajectory_log_likelihood(model, x);
        if (ll == kNegInf) return;
        int ov = overlap(x);
        if (ll > user_ll + kLogTol) {
            if (ov < strict_best.intersections) {
                strict_best.intersections = ov;
                strict_best.optima.assign(1, x);
            } else if (ov == strict_best.intersections) {
                strict_best.optima.push_back(x);
            }
        } else if (std::fabs(ll - user_ll) <= kLogTol) {
            if (ov < equal_best.intersections) {
                equal_best.intersections = ov;
                equal_best.optima.assign(1, x);
            } else if (ov == equal_best.intersections) {
                equal_best.optima.push_back(x);
            }
        }
        // fallback pool: maximize likelihood, then minimize overlap
        if (ll > any_best_ll + kLogTol ||
            (std::fabs(ll - any_best_ll) <= kLogTol && ov < any_best.intersections)) {
            if (ll > any_best_ll) any_best_ll = ll;
            any_best.intersections = ov;
            any_best.optima.assign(1, x);
        } else if (std::fabs(ll - any_best_ll) <= kLogTol &&
                   ov == any_best.intersections) {
            any_best.optima.push_back(x);
        }
    });
    if (!strict_best.optima.empty()) {
        strict_best.strict = true;
        return strict_best;
    }
    if (!equal_best.optima.empty()) return equal_best;
    return any_best;
}

}  // namespace chaffsim

#endif
