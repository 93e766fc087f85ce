#ifndef CHAFFSIM_HARNESS_HPP
#define CHAFFSIM_HARNESS_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "chaffsim/eavesdropper.hpp"
#include "chaffsim/errors.hpp"
#include "chaffsim/mobility.hpp"
#include "chaffsim/rng.hpp"
#include "chaffsim/strategies.hpp"

namespace chaffsim {

enum class DetectorKind { Basic, Advanced };

struct ExperimentConfig {
    std::string model_label = "a";  // kind letter or file tag, for reports
    int N = 2;
    int T = 100;
    StrategyKind strategy = StrategyKind::IM;
    DetectorKind detector = DetectorKind::Basic;
    int trials = 1000;
    std::uint64_t seed = 1;
    bool per_slot_curve = false;
    bool collect_ct = false;  // also gather c_t samples (fig5 preset runs)
    int threads = 0;          // 0 = CHAFFSIM_THREADS env or hardware_concurrency
};

struct AccuracyReport {
    ExperimentConfig config;
    double mean_accuracy = 0.0;
    double std_error = 0.0;
    double detection_rate = 0.0;        // fraction of trials with chosen == truth
    std::vector<double> per_slot;       // per-slot accuracy curve (if requested)
    double wall_clock_seconds = 0.0;    // lives in the manifest, not the data section
};

namespace detail {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CHAFFSIM_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Chaff bundle for one trial. Deterministic strategies emit one strategy chaff
// plus IM fillers when more are requested; they cannot use extra chaffs.
inline std::vector<Trajectory> make_chaffs(const MobilityModel& model,
                                           const Trajectory& user, StrategyKind strategy,
                                           int N, std::uint64_t seed) {
    int T = static_cast<int>(user.size());
    std::vector<Trajectory> chaffs;
    switch (strategy) {
        case StrategyKind::IM:
            return im_chaffs(model, N - 1, T, seed);
        case StrategyKind::ML:
            chaffs.push_back(ml_chaff(model, T));
            break;
        case StrategyKind::CML:
            chaffs.push_back(cml_chaff(model, user));
            break;
        case StrategyKind::OO:
            chaffs.push_back(oo_chaff(model, user).chaff);
            break;
        case StrategyKind::MO:
            chaffs.push_back(mo_chaff(model, user));
            break;
        case StrategyKind::RML:
            return rml_chaffs(model, user, N, seed);
        case StrategyKind::ROO:
            return roo_chaffs(model, user, N, seed);
        case StrategyKind::RMO:
            return rmo_chaffs(model, user, N, seed);
    }
    if (N > 2) {
        auto fillers = im_chaffs(model, N - 2, T, mix_seed(seed, 0x66));
        chaffs.insert(chaffs.end(), fillers.begin(), fillers.end());
    }
    return chaffs;
}

struct TrialOutcome {
    double accuracy = 0.0;
    bool detected = false;
    std::vector<char> per_slot;
};

inline TrialOutcome run_trial(const MobilityModel& model, const ExperimentConfig& cfg,
                              std::uint64_t trial_seed) {
    Trajectory user = sample_trajectory(model, cfg.T, mix_seed(trial_seed, 1));
    std::vector<Trajectory> chaffs =
        make_chaffs(model, user, cfg.strategy, cfg.N, mix_seed(trial_seed, 2));

    TrajectorySet set;
    std::vector<int> order(1 + chaffs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng shuffle_rng(mix_seed(trial_seed, 3));
    shuffle_rng.shuffle(order);
    set.trajectories.resize(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (order[pos] == 0) {
            set.trajectories[pos] = user;
            set.truth = static_cast<int>(pos);
        } else {
            set.trajectories[pos] = chaffs[order[pos] - 1];
        }
    }

    bool advanced = cfg.detector == DetectorKind::Advanced &&
                    (cfg.strategy == StrategyKind::ML || cfg.strategy == StrategyKind::OO ||
                     cfg.strategy == StrategyKind::MO);
    int chosen = advanced
                     ? advanced_detect(model, set, cfg.strategy, mix_seed(trial_seed, 4))
                     : ml_detect(model, set, mix_seed(trial_seed, 4));
    DetectionResult r = tracking_accuracy(set, chosen);
    return {r.time_average, chosen == set.truth, std::move(r.per_slot_correct)};
}

}  // namespace detail

// Seeded Monte Carlo run. Per-trial seeds are split from cfg.seed by trial
// index, and the aggregation is a fold in trial order, so the report is
// invariant to the parallelism degree.
inline AccuracyReport run_experiment(const MobilityModel& model, const ExperimentConfig& cfg) {
    if (cfg.N < 2) throw ValidationError("experiment requires N >= 2");
    if (cfg.trials < 1) throw ValidationError("experiment requires trials >= 1");
    std::vector<detail::TrialOutcome> outcomes(cfg.trials);

    int threads = std::min(detail::resolve_threads(cfg.threads), cfg.trials);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < cfg.trials; i = next.fetch_add(1))
            outcomes[i] = detail::run_trial(model, cfg, mix_seed(cfg.seed, i));
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    AccuracyReport rep;
    rep.config = cfg;
    double sum = 0.0, sum_sq = 0.0;
    long detected = 0;
    std::vector<long> slot_hits(cfg.T, 0);
    for (const auto& o : outcomes) {
        sum += o.accuracy;
        sum_sq += o.accuracy * o.accuracy;
        detected += o.detected;
        for (int t = 0; t < cfg.T; ++t) slot_hits[t] += o.per_slot[t];
    }
    double n = static_cast<double>(cfg.trials);
    rep.mean_accuracy = sum / n;
    double var = std::max(0.0, sum_sq / n - rep.mean_accuracy * rep.mean_accuracy);
    rep.std_error = std::sqrt(var / n);
    rep.detection_rate = static_cast<double>(detected) / n;
    if (cfg.per_slot_curve) {
        rep.per_slot.resize(cfg.T);
        for (int t = 0; t < cfg.T; ++t)
            rep.per_slot[t] = static_cast<double>(slot_hits[t]) / n;
    }
    return rep;
}

// ---- presets mirroring the synthetic-experiment figures --------------------

inline std::vector<ExperimentConfig> preset(const std::string& name,
                                            std::uint64_t seed = 1) {
    std::vector<ExperimentConfig> configs;
    auto base = [&](char model, StrategyKind s, int N, DetectorKind d) {
        ExperimentConfig c;
        c.model_label = model;
        c.strategy = s;
        c.N = N;
        c.detector = d;
        c.T = 100;
        c.trials = 1000;
        c.seed = seed;
        c.per_slot_curve = true;
        return c;
    };
    if (name == "fig4") {
        // basic eavesdropper; IM sweeps N, deterministic strategies use N=2
        for (char m : {'a', 'b', 'c', 'd'}) {
            for (int N = 2; N <= 10; ++N)
                configs.push_back(base(m, StrategyKind::IM, N, DetectorKind::Basic));
            for (StrategyKind s : {StrategyKind::ML, StrategyKind::OO, StrategyKind::MO})
                configs.push_back(base(m, s, 2, DetectorKind::Basic));
        }
    } else if (name == "fig5") {
        // c_t distributions under CML and MO
        for (char m : {'a', 'b', 'c', 'd'})
            for (StrategyKind s : {StrategyKind::CML, StrategyKind::MO}) {
                ExperimentConfig c = base(m, s, 2, DetectorKind::Basic);
                c.collect_ct = true;
                configs.push_back(c);
            }
    } else if (name == "fig6") {
        // advanced eavesdropper, N = 10: IM plus the robust strategies
        for (char m : {'a', 'b', 'c', 'd'})
            for (StrategyKind s : {StrategyKind::IM, StrategyKind::RML, StrategyKind::ROO,
                                   StrategyKind::RMO})
                configs.push_back(base(m, s, 10, DetectorKind::Advanced));
    } else if (name == "fig8-style") {
        // single-chaff strategy comparison on the skewed model family,
        // mirroring the trace-driven comparison's axes
        for (StrategyKind s : {StrategyKind::IM, StrategyKind::ML, StrategyKind::OO,
                               StrategyKind::MO})
            configs.push_back(base('d', s, 2, DetectorKind::Basic));
    } else {
        throw ValidationError("unknown preset '" + name + "'");
    }
    return configs;
}

// ---- trace-style top-K tracking table --------------------------------------

struct TopKRow {
    std::string node_id;
    double baseline_accuracy = 0.0;                 // no chaff
    std::vector<std::pair<StrategyKind, double>> with_chaff;
};

// No-chaff detection across all node trajectories (each node in turn as the
// user), then one chaff per strategy for the K highest-accuracy nodes.
inline std::vector<TopKRow> top_k_report(const MobilityModel& model,
                                         const std::vector<std::string>& node_ids,
                                         const std::vector<Trajectory>& trajectories,
                                         int K, std::uint64_t seed) {
    int n = static_cast<int>(trajectories.size());
    if (n < 2) throw ValidationError("top_k_report requires at least 2 nodes");
    if (K > n) throw ValidationError("K exceeds node count");
    std::vector<TopKRow> rows(n);
    for (int u = 0; u < n; ++u) {
        TrajectorySet set{trajectories, u};
        int chosen = ml_detect(model, set, mix_seed(seed, u));
        rows[u].node_id = node_ids[u];
        rows[u].baseline_accuracy = tracking_accuracy(set, chosen).time_average;
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rows[a].baseline_accuracy > rows[b].baseline_accuracy;
    });
    std::vector<TopKRow> out;
    for (int k = 0; k < K; ++k) {
        int u = order[k];
        TopKRow row = rows[u];
        const Trajectory& user = trajectories[u];
        for (StrategyKind s : {StrategyKind::IM, StrategyKind::ML, StrategyKind::OO,
                               StrategyKind::MO}) {
            std::vector<Trajectory> chaffs =
                detail::make_chaffs(model, user, s, 2, mix_seed(seed, 1000 + u));
            TrajectorySet set{trajectories, u};
            for (auto& c : chaffs) set.trajectories.push_back(std::move(c));
            int chosen = ml_detect(model, set, mix_seed(seed, 2000 + u));
            row.with_chaff.emplace_back(s, tracking_accuracy(set, chosen).time_average);
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace chaffsim

#endif
