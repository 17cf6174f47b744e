#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "substruct/cms_cb.hpp"
#include "substruct/cms_dcb.hpp"
#include "substruct/matrix_market.hpp"
#include "substruct/modal.hpp"
#include "substruct/model.hpp"
#include "substruct/updating.hpp"

namespace substruct {

/// Failure categories surfaced as distinct process exit codes by the CLI.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MethodChoice { CB, DCB, Both };

inline std::string to_string(MethodChoice m) {
    switch (m) {
        case MethodChoice::CB: return "cb";
        case MethodChoice::DCB: return "dcb";
        default: return "both";
    }
}

inline MethodChoice parse_method(const std::string& s) {
    if (s == "cb") return MethodChoice::CB;
    if (s == "dcb") return MethodChoice::DCB;
    if (s == "both") return MethodChoice::Both;
    throw std::invalid_argument("method must be cb, dcb or both, got '" + s + "'");
}

/// Everything a run needs, loadable from one human-editable config file.
struct ExperimentConfig {
    TowerConfig tower;
    MethodChoice method = MethodChoice::Both;
    int modes_per_substructure = 10;
    double damage_theta1 = 1.0;
    double damage_theta2 = 0.75;
    int n_modes = 10;
    double prior_log_mean = -0.125;
    double prior_log_sigma = 0.5;
    double beta_error = 0.01;
    TmcmcConfig tmcmc;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    int bench_iterations = 10;

    void validate() const {
        tower.validate();
        tmcmc.validate();
        if (modes_per_substructure < 1) throw std::invalid_argument("modes_per_substructure must be >= 1");
        if (n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
        if (damage_theta1 <= 0.0 || damage_theta2 <= 0.0)
            throw std::invalid_argument("damage factors must be > 0");
        if (prior_log_sigma <= 0.0) throw std::invalid_argument("prior_log_sigma must be > 0");
        if (beta_error <= 0.0) throw std::invalid_argument("beta_error must be > 0");
        if (bench_iterations < 1) throw std::invalid_argument("bench_iterations must be >= 1");
        if (output_dir.empty()) throw std::invalid_argument("output_dir must not be empty");
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Sectioned key/value text with '#' and ';' comments; parse(serialize(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
    using detail::fmt_double;
    std::ostringstream out;
    out << "# substruct experiment configuration\n\n";
    out << "[tower]\n";
    out << "height_total = " << fmt_double(c.tower.height_total) << "\n";
    out << "diameter_base = " << fmt_double(c.tower.diameter_base) << "\n";
    out << "diameter_top = " << fmt_double(c.tower.diameter_top) << "\n";
    out << "wall_thickness = " << fmt_double(c.tower.wall_thickness) << "\n";
    out << "youngs_modulus = " << fmt_double(c.tower.youngs_modulus) << "\n";
    out << "poisson_ratio = " << fmt_double(c.tower.poisson_ratio) << "\n";
    out << "density = " << fmt_double(c.tower.density) << "\n";
    out << "elements_per_substructure = " << c.tower.elements_per_substructure << "\n";
    out << "interface_fraction = " << fmt_double(c.tower.interface_fraction) << "\n";
    out << "flange_outer_diameter = " << fmt_double(c.tower.flange_outer_diameter) << "\n";
    out << "flange_thickness = " << fmt_double(c.tower.flange_thickness) << "\n\n";
    out << "[reduction]\n";
    out << "method = " << to_string(c.method) << "\n";
    out << "modes_per_substructure = " << c.modes_per_substructure << "\n\n";
    out << "[damage]\n";
    out << "theta1 = " << fmt_double(c.damage_theta1) << "\n";
    out << "theta2 = " << fmt_double(c.damage_theta2) << "\n\n";
    out << "[modal]\n";
    out << "n_modes = " << c.n_modes << "\n\n";
    out << "[prior]\n";
    out << "log_mean = " << fmt_double(c.prior_log_mean) << "\n";
    out << "log_sigma = " << fmt_double(c.prior_log_sigma) << "\n\n";
    out << "[likelihood]\n";
    out << "beta_error = " << fmt_double(c.beta_error) << "\n\n";
    out << "[tmcmc]\n";
    out << "n_samples = " << c.tmcmc.n_samples << "\n";
    out << "target_cov = " << fmt_double(c.tmcmc.target_cov) << "\n";
    out << "proposal_scale = " << fmt_double(c.tmcmc.proposal_scale) << "\n";
    out << "max_stages = " << c.tmcmc.max_stages << "\n\n";
    out << "[run]\n";
    out << "seed = " << c.seed << "\n";
    out << "output_dir = " << c.output_dir << "\n";
    out << "bench_iterations = " << c.bench_iterations << "\n";
    return out.str();
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;

        auto as_double = [&]() { return std::stod(val); };
        auto as_int = [&]() { return std::stoi(val); };

        if (qual == "tower.height_total") c.tower.height_total = as_double();
        else if (qual == "tower.diameter_base") c.tower.diameter_base = as_double();
        else if (qual == "tower.diameter_top") c.tower.diameter_top = as_double();
        else if (qual == "tower.wall_thickness") c.tower.wall_thickness = as_double();
        else if (qual == "tower.youngs_modulus") c.tower.youngs_modulus = as_double();
        else if (qual == "tower.poisson_ratio") c.tower.poisson_ratio = as_double();
        else if (qual == "tower.density") c.tower.density = as_double();
        else if (qual == "tower.elements_per_substructure") c.tower.elements_per_substructure = as_int();
        else if (qual == "tower.interface_fraction") c.tower.interface_fraction = as_double();
        else if (qual == "tower.flange_outer_diameter") c.tower.flange_outer_diameter = as_double();
        else if (qual == "tower.flange_thickness") c.tower.flange_thickness = as_double();
        else if (qual == "reduction.method") c.method = parse_method(val);
        else if (qual == "reduction.modes_per_substructure") c.modes_per_substructure = as_int();
        else if (qual == "damage.theta1") c.damage_theta1 = as_double();
        else if (qual == "damage.theta2") c.damage_theta2 = as_double();
        else if (qual == "modal.n_modes") c.n_modes = as_int();
        else if (qual == "prior.log_mean") c.prior_log_mean = as_double();
        else if (qual == "prior.log_sigma") c.prior_log_sigma = as_double();
        else if (qual == "likelihood.beta_error") c.beta_error = as_double();
        else if (qual == "tmcmc.n_samples") c.tmcmc.n_samples = as_int();
        else if (qual == "tmcmc.target_cov") c.tmcmc.target_cov = as_double();
        else if (qual == "tmcmc.proposal_scale") c.tmcmc.proposal_scale = as_double();
        else if (qual == "tmcmc.max_stages") c.tmcmc.max_stages = as_int();
        else if (qual == "run.seed") c.seed = std::stoull(val);
        else if (qual == "run.output_dir") c.output_dir = val;
        else if (qual == "run.bench_iterations") c.bench_iterations = as_int();
        else throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + qual + "'");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path);
    return parse_config(f);
}

/// Temp-file + rename so interrupted runs never leave a truncated artifact.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw IoError("output directory does not exist: " + dir.string());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
        f << content;
        if (!f) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

namespace detail {

struct BuiltModel {
    TowerModel tower;
    ModalData full;           // undamaged full-model reference
    CbAssembly cb;
    DcbAssembly dcb;
};

inline BuiltModel build_reduced_models(const ExperimentConfig& cfg) {
    TowerModel t = build_tower_model(cfg.tower);
    const auto [m_full, k_full] = full_assemble(t.lower, t.upper, t.interface_map);
    ModalData full = generalized_eig(k_full, m_full, cfg.n_modes);
    const AssemblyMap am = build_assembly_map(t.lower, t.upper, t.interface_map);
    const int nm = cfg.modes_per_substructure;
    CbAssembly cb(cb_reduce(t.lower, nm), cb_reduce(t.upper, nm), t.interface_map, am);
    DcbAssembly dcb(dcb_reduce(t.lower, nm), dcb_reduce(t.upper, nm), t.interface_map, am);
    return BuiltModel{std::move(t), std::move(full), std::move(cb), std::move(dcb)};
}

inline ModalData damaged_full_modal(const TowerModel& t, double th1, double th2, int n) {
    const SubstructureModel lower = apply_damage(t.lower, th1);
    const SubstructureModel upper = apply_damage(t.upper, th2);
    const auto [m_full, k_full] = full_assemble(lower, upper, t.interface_map);
    return generalized_eig(k_full, m_full, n);
}

}  // namespace detail

/// Per-mode eigenvalue errors and MAC diagonals of both reductions against
/// the full undamaged model; written as plot-ready CSV columns.
struct FidelityReport {
    VectorXd full_eigenvalues;
    VectorXd cb_eig_err, dcb_eig_err;
    VectorXd cb_mac, dcb_mac;
    std::string csv_path;
};

inline FidelityReport run_fidelity(const ExperimentConfig& cfg) {
    cfg.validate();
    const detail::BuiltModel bm = detail::build_reduced_models(cfg);
    const int n = cfg.n_modes;
    DamageState pristine{Eigen::Vector2d(1.0, 1.0)};

    FidelityReport rep;
    rep.full_eigenvalues = bm.full.eigenvalues;

    const ModalData cb_red = cb_eigenvalues(bm.cb.reduced_at(pristine), n);
    ModalData cb_exp{cb_red.eigenvalues, bm.cb.expand(cb_red.mode_shapes)};
    align_degenerate_clusters(bm.full, cb_exp, n);
    const DcbModalResult dcb_red = dcb_eigenvalues(bm.dcb, bm.dcb.reduced_at(pristine), n);
    ModalData dcb_exp{dcb_red.modes.eigenvalues, bm.dcb.expand(pristine, dcb_red.modes.mode_shapes)};
    align_degenerate_clusters(bm.full, dcb_exp, n);

    rep.cb_eig_err.resize(n);
    rep.dcb_eig_err.resize(n);
    rep.cb_mac.resize(n);
    rep.dcb_mac.resize(n);
    const MatrixXd mac_cb = mac_matrix(bm.full.mode_shapes, cb_exp.mode_shapes);
    const MatrixXd mac_dcb = mac_matrix(bm.full.mode_shapes, dcb_exp.mode_shapes);
    for (int i = 0; i < n; ++i) {
        rep.cb_eig_err(i) = std::abs(cb_exp.eigenvalues(i) - bm.full.eigenvalues(i)) / bm.full.eigenvalues(i);
        rep.dcb_eig_err(i) = std::abs(dcb_exp.eigenvalues(i) - bm.full.eigenvalues(i)) / bm.full.eigenvalues(i);
        rep.cb_mac(i) = mac_cb(i, i);
        rep.dcb_mac(i) = mac_dcb(i, i);
    }

    std::ostringstream csv;
    csv << "mode,cb_eig_err,dcb_eig_err,cb_mac,dcb_mac\n";
    for (int i = 0; i < n; ++i)
        csv << (i + 1) << "," << detail::fmt_double(rep.cb_eig_err(i)) << ","
            << detail::fmt_double(rep.dcb_eig_err(i)) << "," << detail::fmt_double(rep.cb_mac(i)) << ","
            << detail::fmt_double(rep.dcb_mac(i)) << "\n";
    const std::filesystem::path out = std::filesystem::path(cfg.output_dir) / "fidelity.csv";
    atomic_write_file(out, csv.str());
    rep.csv_path = out.string();
    return rep;
}

/// One identification run: posterior summary plus the emitted artifact paths.
struct IdentifyReport {
    ReductionMethod method = ReductionMethod::CB;
    PosteriorSummary summary;
    double log_evidence = 0.0;
    double j_at_map = 0.0;
    double freq_error_at_map = 0.0;
    int n_stages = 0;
    long n_likelihood_evals = 0;
    double wall_time_s = 0.0;
    std::string samples_csv, stages_csv, summary_json;
};

namespace detail {

inline std::string samples_csv_text(const std::vector<PosteriorSample>& samples) {
    std::ostringstream csv;
    csv << "stage,theta1,theta2,log_prior,log_likelihood\n";
    for (const auto& s : samples)
        csv << s.stage << "," << fmt_double(s.theta(0)) << "," << fmt_double(s.theta(1)) << ","
            << fmt_double(s.log_prior) << "," << fmt_double(s.log_likelihood) << "\n";
    return csv.str();
}

inline std::string json_vector(const VectorXd& v) {
    std::string s = "[";
    for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v(i));
    return s + "]";
}

}  // namespace detail

inline IdentifyReport run_identify(const ExperimentConfig& cfg, ReductionMethod method) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const detail::BuiltModel bm = detail::build_reduced_models(cfg);

    LikelihoodSpec lspec;
    lspec.n_modes = cfg.n_modes;
    lspec.beta_error = cfg.beta_error;
    lspec.reduction_method = method;
    lspec.data = detail::damaged_full_modal(bm.tower, cfg.damage_theta1, cfg.damage_theta2, cfg.n_modes);
    const ReducedLikelihood likelihood(std::move(lspec), &bm.cb, &bm.dcb);

    PriorSpec prior;
    prior.log_mean = VectorXd::Constant(2, cfg.prior_log_mean);
    prior.log_sigma = VectorXd::Constant(2, cfg.prior_log_sigma);

    TmcmcConfig tc = cfg.tmcmc;
    tc.seed = cfg.seed;
    TmcmcResult result;
    try {
        result = tmcmc(make_updating_problem(prior, likelihood), tc);
    } catch (const std::runtime_error& e) {
        throw ConvergenceError(e.what());
    }

    IdentifyReport rep;
    rep.method = method;
    rep.summary = posterior_summary(result.final_samples());
    rep.log_evidence = result.log_evidence;
    rep.j_at_map = likelihood.objective(rep.summary.map);
    rep.freq_error_at_map = freq_error(likelihood.predict(rep.summary.map), likelihood.spec().data, cfg.n_modes);
    rep.n_stages = static_cast<int>(result.exponents.size());
    rep.n_likelihood_evals = result.n_likelihood_evals;

    const std::string tag = to_string(method);
    const std::filesystem::path dir(cfg.output_dir);

    std::ostringstream stages;
    stages << "stage,theta1,theta2,log_prior,log_likelihood\n";
    for (const auto& cloud : result.stages)
        for (const auto& s : cloud)
            stages << s.stage << "," << detail::fmt_double(s.theta(0)) << ","
                   << detail::fmt_double(s.theta(1)) << "," << detail::fmt_double(s.log_prior) << ","
                   << detail::fmt_double(s.log_likelihood) << "\n";
    const auto stages_path = dir / ("stages_" + tag + ".csv");
    atomic_write_file(stages_path, stages.str());
    rep.stages_csv = stages_path.string();

    const auto samples_path = dir / ("samples_" + tag + ".csv");
    atomic_write_file(samples_path, detail::samples_csv_text(result.final_samples()));
    rep.samples_csv = samples_path.string();

    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream js;
    js << "{\n";
    js << "  \"method\": \"" << tag << "\",\n";
    js << "  \"damage_truth\": [" << detail::fmt_double(cfg.damage_theta1) << ", "
       << detail::fmt_double(cfg.damage_theta2) << "],\n";
    js << "  \"posterior_mean\": " << detail::json_vector(rep.summary.mean) << ",\n";
    js << "  \"posterior_stddev\": " << detail::json_vector(rep.summary.stddev) << ",\n";
    js << "  \"map\": " << detail::json_vector(rep.summary.map) << ",\n";
    js << "  \"q025\": " << detail::json_vector(rep.summary.q025) << ",\n";
    js << "  \"q975\": " << detail::json_vector(rep.summary.q975) << ",\n";
    js << "  \"j_at_map\": " << detail::fmt_double(rep.j_at_map) << ",\n";
    js << "  \"freq_error_at_map\": " << detail::fmt_double(rep.freq_error_at_map) << ",\n";
    js << "  \"log_evidence\": " << detail::fmt_double(rep.log_evidence) << ",\n";
    js << "  \"n_stages\": " << rep.n_stages << ",\n";
    js << "  \"n_likelihood_evals\": " << rep.n_likelihood_evals << ",\n";
    js << "  \"seed\": " << cfg.seed << ",\n";
    js << "  \"wall_time_s\": " << detail::fmt_double(rep.wall_time_s) << "\n";
    js << "}\n";
    const auto json_path = dir / ("summary_" + tag + ".json");
    atomic_write_file(json_path, js.str());
    rep.summary_json = json_path.string();
    return rep;
}

/// Mean wall time per likelihood evaluation, reduced vs full model.
struct BenchReport {
    double full_mean_s = 0.0;
    double cb_mean_s = 0.0;
    double dcb_mean_s = 0.0;
    double cb_speedup = 0.0;   // full / reduced, 3 significant digits
    double dcb_speedup = 0.0;
    std::string json_path;
};

namespace detail {

inline double round_3sig(double v) {
    if (v == 0.0) return 0.0;
    const double mag = std::pow(10.0, std::floor(std::log10(std::abs(v))) - 2.0);
    return std::round(v / mag) * mag;
}

}  // namespace detail

inline BenchReport run_bench(const ExperimentConfig& cfg) {
    cfg.validate();
    const detail::BuiltModel bm = detail::build_reduced_models(cfg);

    LikelihoodSpec base;
    base.n_modes = cfg.n_modes;
    base.beta_error = cfg.beta_error;
    base.data = detail::damaged_full_modal(bm.tower, cfg.damage_theta1, cfg.damage_theta2, cfg.n_modes);

    // deterministic theta sweep around the truth
    std::vector<VectorXd> thetas;
    for (int i = 0; i < cfg.bench_iterations; ++i) {
        const double w = 0.8 + 0.4 * (i % 5) / 4.0;
        thetas.push_back(Eigen::Vector2d(cfg.damage_theta1 * w, cfg.damage_theta2 * (1.6 - w)));
    }

    auto time_loop = [&](auto&& eval) {
        const auto t0 = std::chrono::steady_clock::now();
        double sink = 0.0;
        for (const VectorXd& th : thetas) sink += eval(th);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!std::isfinite(sink)) throw std::runtime_error("bench: non-finite objective");
        return dt / thetas.size();
    };

    BenchReport rep;
    rep.full_mean_s = time_loop([&](const VectorXd& th) {
        const ModalData model = detail::damaged_full_modal(bm.tower, th(0), th(1), cfg.n_modes);
        return objective_j(model, base.data, cfg.n_modes);
    });
    {
        LikelihoodSpec s = base;
        s.reduction_method = ReductionMethod::CB;
        const ReducedLikelihood lik(std::move(s), &bm.cb, &bm.dcb);
        rep.cb_mean_s = time_loop([&](const VectorXd& th) { return lik.objective(th); });
    }
    {
        LikelihoodSpec s = base;
        s.reduction_method = ReductionMethod::DCB;
        const ReducedLikelihood lik(std::move(s), &bm.cb, &bm.dcb);
        rep.dcb_mean_s = time_loop([&](const VectorXd& th) { return lik.objective(th); });
    }
    rep.cb_speedup = detail::round_3sig(rep.full_mean_s / rep.cb_mean_s);
    rep.dcb_speedup = detail::round_3sig(rep.full_mean_s / rep.dcb_mean_s);

    std::ostringstream js;
    js << "{\n";
    js << "  \"iterations\": " << cfg.bench_iterations << ",\n";
    js << "  \"full_mean_s\": " << detail::fmt_double(rep.full_mean_s) << ",\n";
    js << "  \"cb_mean_s\": " << detail::fmt_double(rep.cb_mean_s) << ",\n";
    js << "  \"dcb_mean_s\": " << detail::fmt_double(rep.dcb_mean_s) << ",\n";
    js << "  \"cb_speedup\": " << detail::fmt_double(rep.cb_speedup) << ",\n";
    js << "  \"dcb_speedup\": " << detail::fmt_double(rep.dcb_speedup) << "\n";
    js << "}\n";
    const auto json_path = std::filesystem::path(cfg.output_dir) / "bench.json";
    atomic_write_file(json_path, js.str());
    rep.json_path = json_path.string();
    return rep;
}

/// Dump the full and reduced operator pairs as Matrix Market files.
inline std::vector<std::string> run_export_matrices(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("output directory does not exist: " + dir.string());

    const detail::BuiltModel bm = detail::build_reduced_models(cfg);
    const auto [m_full, k_full] = full_assemble(bm.tower.lower, bm.tower.upper, bm.tower.interface_map);
    DamageState pristine{Eigen::Vector2d(1.0, 1.0)};
    const ReducedSystem cb = bm.cb.reduced_at(pristine);
    const ReducedSystem dcb = bm.dcb.reduced_at(pristine);

    std::vector<std::pair<std::string, const MatrixXd*>> items = {
        {"full_stiffness.mtx", &k_full},
        {"full_mass.mtx", &m_full},
        {"lower_stiffness.mtx", &bm.tower.lower.stiffness},
        {"lower_mass.mtx", &bm.tower.lower.mass},
        {"upper_stiffness.mtx", &bm.tower.upper.stiffness},
        {"upper_mass.mtx", &bm.tower.upper.mass},
        {"cb_stiffness.mtx", &cb.stiffness},
        {"cb_mass.mtx", &cb.mass},
        {"dcb_stiffness.mtx", &dcb.stiffness},
        {"dcb_mass.mtx", &dcb.mass},
    };
    std::vector<std::string> written;
    for (const auto& [name, mat] : items) {
        const fs::path p = dir / name;
        try {
            save_matrix(*mat, p.string());
        } catch (const std::runtime_error& e) {
            throw IoError(e.what());
        }
        written.push_back(p.string());
    }
    return written;
}

}  // namespace substruct
