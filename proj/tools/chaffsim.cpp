// chaffsim command-line tool: model generation, strategy simulation, bound
// evaluation, and trace ingestion. Outputs are byte-identical for identical
// flags and inputs; wall-clock time lives only in the run manifest.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chaffsim/analysis.hpp"
#include "chaffsim/harness.hpp"
#include "chaffsim/mobility.hpp"
#include "chaffsim/strategies.hpp"
#include "chaffsim/traces.hpp"

using json = nlohmann::json;
using namespace chaffsim;

namespace {

constexpr const char* kVersion = "chaffsim 1.0.0";

// exit codes per the tool contract
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidation = 2;
constexpr int kConditionNotMet = 3;

std::string fnv1a_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return "missing";
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (is.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct Manifest {
    json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& path) {
        json j;
        j["tool_version"] = kVersion;
        j["config"] = config;
        j["seed"] = seed;
        json digests = json::object();
        for (const auto& in : inputs) digests[in] = fnv1a_digest(in);
        j["input_digests"] = digests;
        j["outputs"] = outputs;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        std::ofstream os(path);
        if (!os) throw IoError("cannot open " + path + " for writing");
        os << j.dump(2) << "\n";
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

double stationarity_residual(const MobilityModel& m) {
    double res = 0.0;
    for (int j = 0; j < m.cell_count; ++j) {
        double v = 0.0;
        for (int i = 0; i < m.cell_count; ++i) v += m.stationary[i] * m.p(i, j);
        res = std::max(res, std::fabs(v - m.stationary[j]));
    }
    return res;
}

// ---- model -----------------------------------------------------------------

struct ModelArgs {
    std::string kind;
    int cells = 10;
    std::uint64_t seed = 1;
    std::string out;
    std::string from_traces;
    double smoothing = 1e-6;
};

int cmd_model(const ModelArgs& a) {
    Manifest man;
    man.config = {{"command", "model"},   {"kind", a.kind},
                  {"cells", a.cells},     {"from_traces", a.from_traces},
                  {"smoothing", a.smoothing}, {"out", a.out}};
    man.seed = a.seed;

    MobilityModel model;
    if (!a.from_traces.empty()) {
        std::ifstream is(a.from_traces);
        if (!is) throw IoError("cannot open " + a.from_traces);
        man.inputs.push_back(a.from_traces);
        auto [ids, trajs] = read_trajectories(is);
        model = estimate_model(trajs, a.smoothing);
    } else {
        if (a.kind.size() != 1) throw ValidationError("--kind must be one of a, b, c, d");
        model = make_model(model_kind_from_letter(a.kind[0]), a.cells, a.seed);
    }
    save_model(a.out, model);
    man.outputs.push_back(a.out);
    std::cout << "cells " << model.cell_count << "\n";
    std::cout << "stationarity_residual " << fmt(stationarity_residual(model)) << "\n";
    double kl = temporal_skewness_kl(model);
    std::cout << "kl_skewness " << (std::isinf(kl) ? "inf" : fmt(kl)) << "\n";
    man.write(a.out + ".manifest.json");
    return kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string model_path;
    std::string kind;
    int cells = 10;
    std::uint64_t model_seed = 1;
    std::string strategy = "IM";
    std::string eavesdropper = "basic";
    int chaffs = 2;
    int slots = 100;
    int trials = 1000;
    std::uint64_t seed = 1;
    std::string out;
    std::string preset_name;
    int threads = 0;
    bool per_slot = false;
};

MobilityModel resolve_model(const std::string& path, const std::string& kind, int cells,
                            std::uint64_t model_seed, Manifest& man,
                            std::string* label = nullptr) {
    if (!path.empty()) {
        man.inputs.push_back(path);
        if (label) *label = path;
        return load_model(path);
    }
    if (kind.size() != 1) throw ValidationError("need --model or --kind a|b|c|d");
    if (label) *label = kind;
    return make_model(model_kind_from_letter(kind[0]), cells, model_seed);
}

void write_report(const std::string& out, const std::vector<AccuracyReport>& reports,
                  const std::vector<double>& mean_ct, Manifest& man) {
    std::ofstream os(out);
    if (!os) throw IoError("cannot open " + out + " for writing");
    os << "# " << kVersion << " simulation report\n";
    os << "# columns: row model strategy detector N T trials mean_accuracy"
          " std_error detection_rate mean_ct\n";
    json jrows = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const AccuracyReport& r = reports[i];
        const ExperimentConfig& c = r.config;
        const char* det = c.detector == DetectorKind::Advanced ? "advanced" : "basic";
        os << i << " " << c.model_label << " " << strategy_name(c.strategy) << " " << det
           << " " << c.N << " " << c.T << " " << c.trials << " " << fmt(r.mean_accuracy)
           << " " << fmt(r.std_error) << " " << fmt(r.detection_rate) << " "
           << (std::isnan(mean_ct[i]) ? std::string("-") : fmt(mean_ct[i])) << "\n";
        json jr = {{"model", c.model_label},
                   {"strategy", strategy_name(c.strategy)},
                   {"detector", det},
                   {"N", c.N},
                   {"T", c.T},
                   {"trials", c.trials},
                   {"mean_accuracy", r.mean_accuracy},
                   {"std_error", r.std_error},
                   {"detection_rate", r.detection_rate}};
        if (!std::isnan(mean_ct[i])) jr["mean_ct"] = mean_ct[i];
        if (!r.per_slot.empty()) jr["per_slot"] = r.per_slot;
        jrows.push_back(jr);
    }
    // long-form per-slot curves: one row per slot
    os << "# slot rows: slot row t accuracy\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
        for (std::size_t t = 0; t < reports[i].per_slot.size(); ++t)
            os << "slot " << i << " " << (t + 1) << " " << fmt(reports[i].per_slot[t])
               << "\n";
    std::ofstream js(out + ".json");
    if (!js) throw IoError("cannot open " + out + ".json for writing");
    js << json{{"tool_version", kVersion}, {"rows", jrows}}.dump(2) << "\n";
    man.outputs.push_back(out);
    man.outputs.push_back(out + ".json");
}

int cmd_simulate(const SimulateArgs& a) {
    Manifest man;
    man.config = {{"command", "simulate"}, {"model", a.model_path},
                  {"kind", a.kind},        {"cells", a.cells},
                  {"strategy", a.strategy}, {"eavesdropper", a.eavesdropper},
                  {"chaffs", a.chaffs},    {"slots", a.slots},
                  {"trials", a.trials},    {"preset", a.preset_name},
                  {"per_slot", a.per_slot}, {"out", a.out}};
    man.seed = a.seed;

    std::vector<ExperimentConfig> configs;
    if (!a.preset_name.empty()) {
        configs = preset(a.preset_name, a.seed);
    } else {
        ExperimentConfig c;
        auto s = strategy_from_name(a.strategy);
        if (!s) throw ValidationError("unknown strategy " + a.strategy);
        c.strategy = *s;
        if (a.eavesdropper == "basic") {
            c.detector = DetectorKind::Basic;
        } else if (a.eavesdropper == "advanced") {
            c.detector = DetectorKind::Advanced;
        } else {
            throw ValidationError("eavesdropper must be basic or advanced");
        }
        c.N = a.chaffs;
        c.T = a.slots;
        c.trials = a.trials;
        c.seed = a.seed;
        c.per_slot_curve = a.per_slot;
        configs.push_back(c);
    }

    std::vector<AccuracyReport> reports;
    std::vector<double> mean_ct;
    for (ExperimentConfig c : configs) {
        std::string label;
        MobilityModel model = resolve_model(
            a.model_path, a.preset_name.empty() ? a.kind : c.model_label, a.cells,
            a.model_seed, man, &label);
        if (a.preset_name.empty()) c.model_label = label;
        c.threads = a.threads;
        reports.push_back(run_experiment(model, c));
        mean_ct.push_back(
            c.collect_ct
                ? expected_c(model, c.strategy, c.trials, c.T, mix_seed(c.seed, 0xc7)).mean
                : std::numeric_limits<double>::quiet_NaN());
    }
    write_report(a.out, reports, mean_ct, man);
    for (const auto& r : reports)
        std::cout << r.config.model_label << " " << strategy_name(r.config.strategy) << " N="
                  << r.config.N << " accuracy=" << fmt(r.mean_accuracy) << " se="
                  << fmt(r.std_error) << "\n";
    man.write(a.out + ".manifest.json");
    return kOk;
}

// ---- bound -----------------------------------------------------------------

struct BoundArgs {
    std::string model_path;
    std::string strategy = "CML";
    int slots = 100;
    double epsilon = 0.05;
    std::uint64_t seed = 1;
    double w_prime = -1.0;       // overrides (< 0 = unset)
    double delta_prime = -1.0;
    double mu_prime = std::numeric_limits<double>::quiet_NaN();
    std::string out;
};

int cmd_bound(const BoundArgs& a) {
    Manifest man;
    man.config = {{"command", "bound"},   {"model", a.model_path},
                  {"strategy", a.strategy}, {"slots", a.slots},
                  {"epsilon", a.epsilon}, {"out", a.out}};
    man.seed = a.seed;
    man.inputs.push_back(a.model_path);
    MobilityModel model = load_model(a.model_path);
    ModelConstants mc = model_constants(model);

    std::ostringstream report;
    report << "# " << kVersion << " bound report\n";
    report << "strategy " << a.strategy << "\n";
    report << "c0 " << fmt(mc.c0) << "\n";
    report << "c_min " << fmt(mc.c_min) << "\n";
    report << "c_max " << fmt(mc.c_max) << "\n";
    report << "pi_max " << fmt(mc.pi_max) << "\n";
    report << "pi_2 " << fmt(mc.pi_2) << "\n";
    report << "p_max " << fmt(mc.p_max) << "\n";
    report << "p_min " << fmt(mc.p_min) << "\n";
    report << "p_2 " << fmt(mc.p_2) << "\n";

    std::optional<double> bound;
    json j = {{"tool_version", kVersion}, {"strategy", a.strategy}, {"T", a.slots},
              {"epsilon", a.epsilon},     {"c0", mc.c0},            {"c_min", mc.c_min},
              {"c_max", mc.c_max}};
    if (a.strategy == "CML") {
        BoundInputs in = theorem1_inputs(model, a.epsilon, a.slots);
        report << "mu " << fmt(in.mu) << "\n";
        report << "delta " << fmt(in.delta) << "\n";
        report << "mixing_time " << (in.w - 1) << "\n";
        j["mu"] = in.mu;
        j["delta"] = in.delta;
        j["mixing_time"] = in.w - 1;
        bound = theorem1_bound(in);
    } else if (a.strategy == "MO") {
        BoundInputs in;
        in.c0 = mc.c0;
        in.c_min = mc.c_min;
        in.c_max = mc.c_max;
        in.epsilon = a.epsilon;
        in.T = a.slots;
        if (a.w_prime >= 1.0 && a.delta_prime >= 0.0 && !std::isnan(a.mu_prime)) {
            in.w = static_cast<int>(a.w_prime);
            in.delta = a.delta_prime;
            in.mu = a.mu_prime;
            report << "inputs overridden\n";
        } else {
            Theorem2Estimate est = estimate_theorem2_inputs(model, a.epsilon, a.seed);
            in.w = a.w_prime >= 1.0 ? static_cast<int>(a.w_prime) : est.w_prime;
            in.delta = a.delta_prime >= 0.0 ? a.delta_prime : est.delta_prime;
            in.mu = !std::isnan(a.mu_prime) ? a.mu_prime : est.mu_prime;
            report << "estimate_mixed " << (est.mixed ? "yes" : "no") << "\n";
            if (!est.mixed) {
                report << "status condition_not_met (pair chain did not mix)\n";
                std::cout << report.str();
                std::cerr << "condition not met: empirical pair chain did not mix\n";
                return kConditionNotMet;
            }
        }
        report << "mu " << fmt(in.mu) << "\n";
        report << "delta " << fmt(in.delta) << "\n";
        report << "w " << in.w << "\n";
        j["mu"] = in.mu;
        j["delta"] = in.delta;
        j["w"] = in.w;
        bound = theorem2_bound(in);
    } else {
        throw ValidationError("--strategy must be CML or MO");
    }

    int code = kOk;
    if (bound) {
        report << "status ok\n";
        report << "bound " << fmt(*bound) << "\n";
        j["status"] = "ok";
        j["bound"] = *bound;
    } else {
        report << "status condition_not_met\n";
        j["status"] = "condition_not_met";
        code = kConditionNotMet;
    }
    std::cout << report.str();
    if (!a.out.empty()) {
        std::ofstream os(a.out);
        if (!os) throw IoError("cannot open " + a.out + " for writing");
        os << report.str();
        std::ofstream js(a.out + ".json");
        js << j.dump(2) << "\n";
        man.outputs.push_back(a.out);
        man.outputs.push_back(a.out + ".json");
        man.write(a.out + ".manifest.json");
    }
    if (code == kConditionNotMet)
        std::cerr << "condition not met: no numeric bound\n";
    return code;
}

// ---- ingest ----------------------------------------------------------------

struct IngestArgs {
    std::string traces;
    std::string towers;
    double window_start = 0.0;
    double window_length = 0.0;
    double interval = 60.0;
    double cutoff = 300.0;
    double dedup_radius = 100.0;
    double smoothing = 1e-6;
    std::string out_dir;
};

int cmd_ingest(const IngestArgs& a) {
    Manifest man;
    man.config = {{"command", "ingest"},       {"traces", a.traces},
                  {"towers", a.towers},        {"window_start", a.window_start},
                  {"window_length", a.window_length}, {"interval", a.interval},
                  {"cutoff", a.cutoff},        {"dedup_radius", a.dedup_radius},
                  {"smoothing", a.smoothing},  {"out_dir", a.out_dir}};
    man.inputs = {a.traces, a.towers};

    std::ifstream traces_in(a.traces);
    if (!traces_in) throw IoError("cannot open " + a.traces);
    std::ifstream towers_in(a.towers);
    if (!towers_in) throw IoError("cannot open " + a.towers);
    Corpus corpus = build_corpus(traces_in, towers_in, a.window_start, a.window_length,
                                 a.interval, a.cutoff, a.dedup_radius);

    std::string traj_path = a.out_dir + "/trajectories.txt";
    std::string model_path = a.out_dir + "/model.txt";
    std::string stats_path = a.out_dir + "/stats.txt";
    {
        std::ofstream os(traj_path);
        if (!os) throw IoError("cannot open " + traj_path + " for writing");
        write_trajectories(os, corpus.node_ids, corpus.trajectories);
    }
    MobilityModel model = estimate_model(corpus.trajectories, a.smoothing);
    save_model(model_path, model);
    {
        std::ofstream os(stats_path);
        if (!os) throw IoError("cannot open " + stats_path + " for writing");
        os << "nodes_kept " << corpus.stats.nodes_kept << "\n";
        os << "nodes_dropped " << corpus.stats.nodes_dropped << "\n";
        os << "malformed_records " << corpus.stats.malformed_records << "\n";
        os << "cell_count " << corpus.stats.cell_count << "\n";
        os << "slots " << corpus.stats.slots << "\n";
    }
    man.outputs = {traj_path, model_path, stats_path};
    std::cout << "kept " << corpus.stats.nodes_kept << " dropped "
              << corpus.stats.nodes_dropped << " cells " << corpus.stats.cell_count
              << " slots " << corpus.stats.slots << "\n";
    man.write(a.out_dir + "/manifest.json");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chaff-based location privacy simulator"};
    app.require_subcommand(1);

    ModelArgs ma;
    CLI::App* model = app.add_subcommand("model", "generate or estimate a mobility model");
    model->add_option("--kind", ma.kind, "model kind: a, b, c, or d");
    model->add_option("--cells", ma.cells, "number of cells");
    model->add_option("--seed", ma.seed, "generation seed");
    model->add_option("--out", ma.out, "output model file")->required();
    model->add_option("--from-traces", ma.from_traces, "estimate from a trajectory file")
        ->check(CLI::ExistingFile);
    model->add_option("--smoothing", ma.smoothing, "additive smoothing for estimation");

    SimulateArgs sa;
    CLI::App* sim = app.add_subcommand("simulate", "run seeded tracking experiments");
    sim->add_option("--model", sa.model_path, "model file")->check(CLI::ExistingFile);
    sim->add_option("--kind", sa.kind, "generate model of this kind instead");
    sim->add_option("--cells", sa.cells, "cells for a generated model");
    sim->add_option("--model-seed", sa.model_seed, "seed for a generated model");
    sim->add_option("--strategy", sa.strategy, "IM ML CML OO MO RML ROO RMO");
    sim->add_option("--eavesdropper", sa.eavesdropper, "basic or advanced");
    sim->add_option("--chaffs", sa.chaffs, "bundle size N (user + chaffs)");
    sim->add_option("--slots", sa.slots, "trajectory length T");
    sim->add_option("--trials", sa.trials, "Monte Carlo trials");
    sim->add_option("--seed", sa.seed, "experiment seed");
    sim->add_option("--out", sa.out, "report file")->required();
    sim->add_option("--preset", sa.preset_name, "fig4, fig5, fig6, or fig8-style");
    sim->add_option("--threads", sa.threads, "parallelism degree (0 = auto)");
    sim->add_flag("--per-slot", sa.per_slot, "emit the per-slot accuracy curve");

    BoundArgs ba;
    CLI::App* bound = app.add_subcommand("bound", "evaluate tracking-accuracy bounds");
    bound->add_option("--model", ba.model_path, "model file")
        ->required()
        ->check(CLI::ExistingFile);
    bound->add_option("--strategy", ba.strategy, "CML or MO");
    bound->add_option("--slots", ba.slots, "horizon T");
    bound->add_option("--epsilon", ba.epsilon, "mixing tolerance");
    bound->add_option("--seed", ba.seed, "seed for input estimation");
    bound->add_option("--w-prime", ba.w_prime, "override w'");
    bound->add_option("--delta-prime", ba.delta_prime, "override delta'");
    bound->add_option("--mu-prime", ba.mu_prime, "override mu'");
    bound->add_option("--out", ba.out, "report file");

    IngestArgs ia;
    CLI::App* ingest = app.add_subcommand("ingest", "quantize raw traces into trajectories");
    ingest->add_option("--traces", ia.traces, "raw trace file")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--towers", ia.towers, "tower coordinate file")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--window-start", ia.window_start, "window start (s)")->required();
    ingest->add_option("--window-length", ia.window_length, "window length (s)")->required();
    ingest->add_option("--interval", ia.interval, "grid interval (s)");
    ingest->add_option("--cutoff", ia.cutoff, "inactivity cutoff (s)");
    ingest->add_option("--dedup-radius", ia.dedup_radius, "tower merge radius (m)");
    ingest->add_option("--smoothing", ia.smoothing, "model estimation smoothing");
    ingest->add_option("--out-dir", ia.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (model->parsed()) return cmd_model(ma);
        if (sim->parsed()) return cmd_simulate(sa);
        if (bound->parsed()) return cmd_bound(ba);
        if (ingest->parsed()) return cmd_ingest(ia);
    } catch (const NonMixingError& e) {
        std::cerr << "condition not met: " << e.what() << "\n";
        return kConditionNotMet;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kUsage;
}
