// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "chaffsim/analysis.hpp"
#include "chaffsim/harness.hpp"
#include "chaffsim/mobility.hpp"
#include "chaffsim/strategies.hpp"
#include "chaffsim/traces.hpp"

using namespace chaffsim;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// 1. IM closed-form agreement on a uniform-stationary 10-cell model.
bool criterion1() {
    double t0 = now_s();
    MobilityModel m = make_model(model_kind_from_letter('c'), 10, 42);
    bool ok = std::fabs(pim_closed_form(m.stationary, 2) - 0.55) < 1e-4;
    for (int N : {2, 5, 10}) {
        ExperimentConfig cfg;
        cfg.strategy = StrategyKind::IM;
        cfg.N = N;
        cfg.T = 100;
        cfg.trials = 1000;
        cfg.seed = 1000 + N;
        AccuracyReport rep = run_experiment(m, cfg);
        double expect = pim_closed_form(m.stationary, N);
        double gap = std::fabs(rep.mean_accuracy - expect);
        bool hit = gap <= 3.0 * rep.std_error;
        std::printf("  N=%d mc=%.4f closed=%.4f se=%.4f %s\n", N, rep.mean_accuracy,
                    expect, rep.std_error, hit ? "ok" : "MISS");
        ok = ok && hit;
    }
    double dt = now_s() - t0;
    std::printf("  elapsed %.1fs (budget 30s)\n", dt);
    return ok && dt < 30.0;
}

// 2. Exact oracle equivalence for ml_chaff and oo_chaff on 100 random models.
bool criterion2() {
    double t0 = now_s();
    bool ok = true;
    for (int i = 0; i < 100; ++i) {
        int L = 2 + i % 3;         // 2..4
        int T = 2 + i % 5;         // 2..6
        MobilityModel m = make_model(model_kind_from_letter('a'), L, 7000 + i);
        Trajectory ml = ml_chaff(m, T);
        BruteForceMl bf = brute_force_ml(m, T);
        if (trajectory_log_likelihood(m, ml) != bf.log_likelihood) {
            std::printf("  ml mismatch on model %d\n", i);
            ok = false;
        }
        Trajectory user = sample_trajectory(m, T, 9000 + i);
        OoResult oo = oo_chaff(m, user);
        BruteForceOo bfo = brute_force_oo(m, user);
        if (oo.intersections != bfo.intersections || oo.strict != bfo.strict) {
            std::printf("  oo mismatch on model %d: i*=%d/%d strict=%d/%d\n", i,
                        oo.intersections, bfo.intersections, oo.strict, bfo.strict);
            ok = false;
        }
    }
    double dt = now_s() - t0;
    std::printf("  elapsed %.1fs (budget 120s)\n", dt);
    return ok && dt < 120.0;
}

// 3. Decay behavior on model (a) under the basic eavesdropper.
bool criterion3() {
    MobilityModel m = make_model(model_kind_from_letter('a'), 10, 101);
    bool ok = true;
    for (StrategyKind s : {StrategyKind::OO, StrategyKind::MO}) {
        ExperimentConfig cfg;
        cfg.strategy = s;
        cfg.T = 100;
        cfg.trials = 1000;
        cfg.seed = 31;
        cfg.per_slot_curve = true;
        AccuracyReport rep = run_experiment(m, cfg);
        double last = rep.per_slot.back();
        std::printf("  %s per-slot acc at t=100: %.4f %s\n", strategy_name(s), last,
                    last < 0.05 ? "ok" : "MISS");
        ok = ok && last < 0.05;
    }
    {
        ExperimentConfig cfg;
        cfg.strategy = StrategyKind::IM;
        cfg.T = 100;
        cfg.trials = 1000;
        cfg.seed = 32;
        AccuracyReport rep = run_experiment(m, cfg);
        double expect = pim_closed_form(m.stationary, 2);
        bool hit = std::fabs(rep.mean_accuracy - expect) <= 3.0 * rep.std_error;
        std::printf("  IM mc=%.4f closed=%.4f se=%.4f %s\n", rep.mean_accuracy, expect,
                    rep.std_error, hit ? "ok" : "MISS");
        ok = ok && hit;
    }
    {
        ExperimentConfig cfg;
        cfg.strategy = StrategyKind::ML;
        cfg.T = 100;
        cfg.trials = 1000;
        cfg.seed = 33;
        AccuracyReport rep = run_experiment(m, cfg);
        double expect = pml_closed_form(m, 100);
        bool hit = std::fabs(rep.mean_accuracy - expect) <= 3.0 * rep.std_error;
        std::printf("  ML mc=%.4f closed=%.4f se=%.4f %s\n", rep.mean_accuracy, expect,
                    rep.std_error, hit ? "ok" : "MISS");
        ok = ok && hit;
    }
    return ok;
}

// 4. Theorem 1 bound dominates the Monte Carlo CML accuracy.
bool criterion4() {
    bool ok = true;
    int found = 0;
    int skipped = 0;
    for (int seed = 0; seed < 200 && found < 20; ++seed) {
        MobilityModel m = make_model(model_kind_from_letter('a'), 10, 5000 + seed);
        std::optional<double> bound;
        try {
            bound = theorem1_bound(theorem1_inputs(m, 0.05, 100, 2000));
        } catch (const NonMixingError&) {
            ++skipped;  // induced chain did not mix; condition cannot be checked
            continue;
        }
        if (!bound) continue;
        ++found;
        ExperimentConfig cfg;
        cfg.strategy = StrategyKind::CML;
        cfg.T = 100;
        cfg.trials = 300;
        cfg.seed = 60 + seed;
        AccuracyReport rep = run_experiment(m, cfg);
        double floor = rep.mean_accuracy - 3.0 * rep.std_error;
        if (*bound < floor) {
            std::printf("  model seed %d: bound %.4f < mc floor %.4f\n", seed, *bound,
                        floor);
            ok = false;
        }
    }
    std::printf("  %d models satisfied the Theorem 1 condition (%d non-mixing skipped)\n",
                found, skipped);
    return ok && found == 20;
}

// 5. Advanced eavesdropper defeats deterministic strategies; robust variants survive.
bool criterion5() {
    bool ok = true;
    for (char kind : {'a', 'b', 'c', 'd'}) {
        MobilityModel m = make_model(model_kind_from_letter(kind), 10, 400 + kind);
        for (StrategyKind s : {StrategyKind::ML, StrategyKind::OO, StrategyKind::MO}) {
            ExperimentConfig cfg;
            cfg.strategy = s;
            cfg.detector = DetectorKind::Advanced;
            cfg.T = 100;
            cfg.trials = 1000;
            cfg.seed = 70 + kind;
            AccuracyReport rep = run_experiment(m, cfg);
            bool hit = rep.mean_accuracy >= 0.99;
            if (!hit)
                std::printf("  model %c %s advanced acc %.4f < 0.99\n", kind,
                            strategy_name(s), rep.mean_accuracy);
            ok = ok && hit;
        }
    }
    MobilityModel ma = make_model(model_kind_from_letter('a'), 10, 400 + 'a');
    for (StrategyKind s : {StrategyKind::RML, StrategyKind::ROO}) {
        ExperimentConfig cfg;
        cfg.strategy = s;
        cfg.detector = DetectorKind::Advanced;  // falls back to plain ML detection
        cfg.N = 10;
        cfg.T = 100;
        cfg.trials = 1000;
        cfg.seed = 90;
        AccuracyReport rep = run_experiment(ma, cfg);
        bool hit = rep.mean_accuracy <= 0.2;
        std::printf("  %s N=10 advanced acc %.4f %s\n", strategy_name(s),
                    rep.mean_accuracy, hit ? "ok" : "MISS");
        ok = ok && hit;
    }
    return ok;
}

// 6. KL skewness soft targets for models (c) and (d).
bool criterion6() {
    double kc = temporal_skewness_kl(make_model(model_kind_from_letter('c'), 10, 1));
    double kd = temporal_skewness_kl(make_model(model_kind_from_letter('d'), 10, 1));
    std::printf("  model (c) skewness %.3f (target 8.18 +- 0.5)\n", kc);
    std::printf("  model (d) skewness %.3f (target 8.48 +- 0.5)\n", kd);
    bool hit = std::fabs(kc - 8.18) <= 0.5 && std::fabs(kd - 8.48) <= 0.5;
    if (!hit)
        std::printf(
            "  note: soft target missed; convention is the mean KL over ordered row "
            "pairs (i, j), i != j; value documented, criteria 1-5 govern acceptance\n");
    return true;  // soft criterion: documented either way
}

// 7. Trace round trip and transition recovery.
bool criterion7() {
    // towers laid out on a sparse line, well beyond the dedup radius
    std::vector<LatLon> towers;
    for (int i = 0; i < 5; ++i) towers.push_back({0.0, 0.05 * i});
    MobilityModel truth = make_model(model_kind_from_letter('a'), 5, 321);
    std::vector<std::string> ids;
    std::vector<Trajectory> cells;
    std::ostringstream traces, towers_txt;
    int T = 10;
    for (int n = 0; n < 3; ++n) {
        ids.push_back("node" + std::to_string(n));
        cells.push_back(sample_trajectory(truth, T, 800 + n));
        for (int t = 0; t < T; ++t) {
            const LatLon& p = towers[cells.back()[t]];
            traces << ids.back() << " " << (1000 + 60 * t) << " " << p.lat << " "
                   << p.lon << "\n";
        }
    }
    for (const auto& t : towers) towers_txt << t.lat << " " << t.lon << "\n";
    std::istringstream traces_in(traces.str()), towers_in(towers_txt.str());
    Corpus corpus = build_corpus(traces_in, towers_in, 1000.0, 60.0 * T);
    bool ok = corpus.node_ids == ids && corpus.trajectories == cells;
    if (!ok) std::printf("  GPS round trip did not reproduce the cell trajectories\n");

    // full file round trip on the recovered trajectories
    std::stringstream file;
    write_trajectories(file, corpus.node_ids, corpus.trajectories);
    auto [rids, rtrajs] = read_trajectories(file);
    ok = ok && rids == corpus.node_ids && rtrajs == corpus.trajectories;

    // estimate_model recovery within 0.05 per entry on 500 synthetic traces
    std::vector<Trajectory> samples;
    for (int i = 0; i < 500; ++i) samples.push_back(sample_trajectory(truth, 100, i));
    MobilityModel est = estimate_model(samples, 1e-6);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            worst = std::max(worst, std::fabs(est.p(i, j) - truth.p(i, j)));
    std::printf("  worst transition-entry error %.4f (limit 0.05)\n", worst);
    return ok && worst < 0.05;
}

// 8. Lemma-3-style tail inequality on synthetic dependent sequences.
bool criterion8() {
    const double a = 0.0, b = 1.0, mu = 0.6, eps = 0.1;
    const int n = 40;
    const int runs = 100000;
    Rng rng(12345);
    std::vector<double> deltas{0.05, 0.10, 0.15, 0.20};
    std::vector<long> exceed(deltas.size(), 0);
    for (int r = 0; r < runs; ++r) {
        double s = 0.0;
        double prev = 0.0;
        for (int t = 0; t < n; ++t) {
            // conditional mean mu - eps*prev, inside [mu - eps, mu]
            double p = mu - eps * prev;
            double x = rng.uniform() < p ? 1.0 : 0.0;
            s += x;
            prev = x;
        }
        for (std::size_t k = 0; k < deltas.size(); ++k)
            if (s >= n * (mu + deltas[k])) ++exceed[k];
    }
    bool ok = true;
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        double d = deltas[k];
        double bound = std::exp(-2.0 * n * d * d / ((b - a + eps) * (b - a + eps)));
        double freq = static_cast<double>(exceed[k]) / runs;
        double sigma = std::sqrt(std::max(bound * (1.0 - bound), 1.0 / runs) / runs);
        bool hit = freq <= bound + 3.0 * sigma;
        std::printf("  delta=%.2f freq=%.5f bound=%.5f %s\n", d, freq, bound,
                    hit ? "ok" : "VIOLATION");
        ok = ok && hit;
    }
    return ok;
}

}  // namespace

int main() {
    struct Item {
        const char* name;
        bool (*fn)();
    };
    Item items[] = {
        {"closed-form IM agreement", criterion1},
        {"oracle equivalence (exact)", criterion2},
        {"decay behavior on model (a)", criterion3},
        {"bound dominance", criterion4},
        {"advanced eavesdropper", criterion5},
        {"skewness targets (soft)", criterion6},
        {"trace round trip + model recovery", criterion7},
        {"concentration tail inequality", criterion8},
    };
    int failures = 0;
    int idx = 1;
    for (const auto& item : items) {
        std::printf("criterion %d: %s\n", idx, item.name);
        bool ok = item.fn();
        std::printf("criterion %d: %s -- %s\n", idx, item.name, ok ? "PASS" : "FAIL");
        failures += !ok;
        ++idx;
    }
    std::printf("%d/8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
