#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "substruct/experiment.hpp"

using namespace substruct;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string method = "";
    std::string out_dir = "";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "configuration file (defaults used when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--method", flags.method, "reduction method: cb, dcb or both")
        ->check(CLI::IsMember({"cb", "dcb", "both"}));
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "random seed (overrides config)")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
}

ExperimentConfig resolve(const CommonFlags& flags) {
    ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
    if (!flags.method.empty()) cfg.method = parse_method(flags.method);
    if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
    if (flags.seed_set) cfg.seed = flags.seed;
    cfg.validate();
    return cfg;
}

int cmd_fidelity(const ExperimentConfig& cfg) {
    const FidelityReport rep = run_fidelity(cfg);
    double cb_worst = rep.cb_eig_err.maxCoeff(), dcb_worst = rep.dcb_eig_err.maxCoeff();
    std::printf("fidelity: %d modes, worst eigenvalue error cb %.3e dcb %.3e\n",
                static_cast<int>(rep.cb_eig_err.size()), cb_worst, dcb_worst);
    std::printf("wrote %s\n", rep.csv_path.c_str());
    return 0;
}

int cmd_identify(const ExperimentConfig& cfg) {
    std::vector<ReductionMethod> methods;
    if (cfg.method != MethodChoice::DCB) methods.push_back(ReductionMethod::CB);
    if (cfg.method != MethodChoice::CB) methods.push_back(ReductionMethod::DCB);
    for (ReductionMethod m : methods) {
        const IdentifyReport rep = run_identify(cfg, m);
        std::printf("identify (%s): mean = (%.4f, %.4f), truth = (%.4f, %.4f), stages %d, evals %ld, %.1fs\n",
                    to_string(m).c_str(), rep.summary.mean(0), rep.summary.mean(1), cfg.damage_theta1,
                    cfg.damage_theta2, rep.n_stages, rep.n_likelihood_evals, rep.wall_time_s);
        std::printf("wrote %s, %s, %s\n", rep.samples_csv.c_str(), rep.stages_csv.c_str(),
                    rep.summary_json.c_str());
    }
    return 0;
}

int cmd_bench(const ExperimentConfig& cfg) {
    const BenchReport rep = run_bench(cfg);
    std::printf("bench: full %.3e s, cb %.3e s (speedup %g), dcb %.3e s (speedup %g)\n", rep.full_mean_s,
                rep.cb_mean_s, rep.cb_speedup, rep.dcb_mean_s, rep.dcb_speedup);
    std::printf("wrote %s\n", rep.json_path.c_str());
    return 0;
}

int cmd_export(const ExperimentConfig& cfg) {
    for (const std::string& path : run_export_matrices(cfg)) std::printf("wrote %s\n", path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"substructured tower model reduction and damage identification"};
    app.require_subcommand(1);

    CommonFlags flags;
    CLI::App* fid = app.add_subcommand("fidelity", "per-mode reduction error report");
    CLI::App* ident = app.add_subcommand("identify", "TMCMC damage identification");
    CLI::App* bench = app.add_subcommand("bench", "reduced vs full likelihood timing");
    CLI::App* expm = app.add_subcommand("export-matrices", "dump operators as Matrix Market files");
    for (CLI::App* cmd : {fid, ident, bench, expm}) add_common(cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const ExperimentConfig cfg = resolve(flags);
        if (fid->parsed()) return cmd_fidelity(cfg);
        if (ident->parsed()) return cmd_identify(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        return cmd_export(cfg);
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "convergence error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
