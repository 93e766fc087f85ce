#ifndef CHAFFSIM_EAVESDROPPER_HPP
#define CHAFFSIM_EAVESDROPPER_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "chaffsim/errors.hpp"
#include "chaffsim/mobility.hpp"
#include "chaffsim/rng.hpp"
#include "chaffsim/strategies.hpp"

namespace chaffsim {

// Unlabeled bundle of equal-length trajectories; `truth` is known to the
// scoring metric only, never to a detector.
struct TrajectorySet {
    std::vector<Trajectory> trajectories;
    int truth = 0;

    void validate() const {
        if (trajectories.size() < 2) throw ValidationError("need N >= 2 trajectories");
        std::size_t T = trajectories.front().size();
        for (const auto& x : trajectories)
            if (x.size() != T) throw ValidationError("trajectories differ in length");
        if (truth < 0 || truth >= static_cast<int>(trajectories.size()))
            throw ValidationError("truth index out of range");
    }
};

struct DetectionResult {
    int chosen = 0;
    std::vector<char> per_slot_correct;
    double time_average = 0.0;
};

namespace detail {

inline int ml_detect_subset(const MobilityModel& model, const TrajectorySet& set,
                            const std::vector<int>& candidates, std::uint64_t seed) {
    std::vector<double> ll(candidates.size());
    double best = kNegInf;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        ll[i] = trajectory_log_likelihood(model, set.trajectories[candidates[i]]);
        if (ll[i] > best) best = ll[i];
    }
    // all -inf: nothing to compare, uniform guess among the candidates
    std::vector<int> tied;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (best == kNegInf ? ll[i] == kNegInf : ll[i] >= best - kLogTol)
            tied.push_back(candidates[i]);
    Rng rng(seed);
    return tied[rng.uniform_int(tied.size())];
}

}  // namespace detail

// Maximum-likelihood detector: argmax of the trajectory log-likelihood.
// Ties (log gap <= kLogTol) are resolved uniformly at random under the seed.
inline int ml_detect(const MobilityModel& model, const TrajectorySet& set,
                     std::uint64_t seed) {
    set.validate();
    std::vector<int> all(set.trajectories.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return detail::ml_detect_subset(model, set, all, seed);
}

// Strategy-aware detector. For ML: ignore observed trajectories equal to the
// precomputable ML chaff. For OO/MO: ignore x' when x' = Gamma(x) for some
// observed x != x', where Gamma is the same deterministic strategy code the
// user runs. Survivors go through ML detection; if none survive, guess
// uniformly among all.
inline int advanced_detect(const MobilityModel& model, const TrajectorySet& set,
                           StrategyKind strategy, std::uint64_t seed) {
    set.validate();
    int N = static_cast<int>(set.trajectories.size());
    int T = static_cast<int>(set.trajectories.front().size());
    std::vector<char> ignored(N, 0);
    switch (strategy) {
        case StrategyKind::ML: {
            Trajectory gamma = ml_chaff(model, T);
            for (int i = 0; i < N; ++i)
                if (set.trajectories[i] == gamma) ignored[i] = 1;
            break;
        }
        case StrategyKind::OO:
        case StrategyKind::MO: {
            for (int i = 0; i < N; ++i) {
                Trajectory g = (strategy == StrategyKind::OO)
                                   ? oo_chaff(model, set.trajectories[i]).chaff
                                   : mo_chaff(model, set.trajectories[i]);
                for (int j = 0; j < N; ++j)
                    if (j != i && set.trajectories[j] == g) ignored[j] = 1;
            }
            break;
        }
        default:
            throw UnsupportedStrategyError(
                "advanced detector requires a deterministic strategy (ML, OO, MO)");
    }
    std::vector<int> survivors;
    for (int i = 0; i < N; ++i)
        if (!ignored[i]) survivors.push_back(i);
    Rng rng(seed);
    if (survivors.empty()) return static_cast<int>(rng.uniform_int(N));
    return detail::ml_detect_subset(model, set, survivors, mix_seed(seed, 1));
}

// Time-average colocation of the chosen trajectory with the true user.
inline DetectionResult tracking_accuracy(const TrajectorySet& set, int chosen) {
    set.validate();
    if (chosen < 0 || chosen >= static_cast<int>(set.trajectories.size()))
        throw ValidationError("chosen index out of range");
    const Trajectory& picked = set.trajectories[chosen];
    const Trajectory& user = set.trajectories[set.truth];
    DetectionResult r;
    r.chosen = chosen;
    r.per_slot_correct.resize(user.size());
    int hits = 0;
    for (std::size_t t = 0; t < user.size(); ++t) {
        r.per_slot_correct[t] = picked[t] == user[t];
        hits += r.per_slot_correct[t];
    }
    r.time_average = static_cast<double>(hits) / static_cast<double>(user.size());
    return r;
}

}  // namespace chaffsim

#endif
