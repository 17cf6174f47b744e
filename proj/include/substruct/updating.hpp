#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "substruct/cms_cb.hpp"
#include "substruct/cms_dcb.hpp"
#include "substruct/modal.hpp"
#include "substruct/model.hpp"

namespace substruct {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Independent log-normal priors, one per stiffness parameter.
struct PriorSpec {
    VectorXd log_mean;
    VectorXd log_sigma;

    /// Defaults with prior mean exactly 1: log_sigma 0.5, log_mean -0.125.
    static PriorSpec defaults(int dim) {
        PriorSpec s;
        s.log_sigma = VectorXd::Constant(dim, 0.5);
        s.log_mean = VectorXd::Constant(dim, -0.125);
        return s;
    }

    void validate() const {
        if (log_mean.size() != log_sigma.size() || log_mean.size() == 0)
            throw std::invalid_argument("PriorSpec: dimension mismatch");
        if ((log_sigma.array() <= 0.0).any()) throw std::invalid_argument("PriorSpec: log_sigma must be > 0");
    }
};

/// Sum of log-normal log-densities; -inf outside the support.
inline double log_prior(const VectorXd& theta, const PriorSpec& spec) {
    if (theta.size() != spec.log_mean.size()) throw std::invalid_argument("log_prior: dimension mismatch");
    double lp = 0.0;
    for (int i = 0; i < theta.size(); ++i) {
        if (theta(i) <= 0.0) return kNegInf;
        const double lt = std::log(theta(i));
        const double s = spec.log_sigma(i);
        const double z = (lt - spec.log_mean(i)) / s;
        lp += -lt - std::log(s) - 0.5 * std::log(2.0 * 3.14159265358979323846) - 0.5 * z * z;
    }
    return lp;
}

enum class ReductionMethod { CB, DCB };

inline std::string to_string(ReductionMethod m) { return m == ReductionMethod::CB ? "cb" : "dcb"; }

/// Modal likelihood spec: J mapped to log L = -J / (2 eps^2).
struct LikelihoodSpec {
    int n_modes = 10;
    double beta_error = 0.01;  // eps
    ReductionMethod reduction_method = ReductionMethod::CB;
    ModalData data;  // synthetic measurement on the assembled physical DOFs

    void validate() const {
        if (n_modes < 1) throw std::invalid_argument("LikelihoodSpec: n_modes must be >= 1");
        if (beta_error <= 0.0) throw std::invalid_argument("LikelihoodSpec: beta_error must be > 0");
        if (data.n_modes() < n_modes) throw std::invalid_argument("LikelihoodSpec: data has too few modes");
    }
};

/// Evaluates the modal log-likelihood through a fixed reduction basis.
/// Assembly, eigensolve and expansion are pure, so instances are safe to
/// call from many workers at once.
class ReducedLikelihood {
public:
    ReducedLikelihood(LikelihoodSpec spec, const CbAssembly* cb, const DcbAssembly* dcb)
        : spec_(std::move(spec)), cb_(cb), dcb_(dcb) {
        spec_.validate();
        if (spec_.reduction_method == ReductionMethod::CB && cb_ == nullptr)
            throw std::invalid_argument("ReducedLikelihood: CB basis missing");
        if (spec_.reduction_method == ReductionMethod::DCB && dcb_ == nullptr)
            throw std::invalid_argument("ReducedLikelihood: DCB basis missing");
    }

    const LikelihoodSpec& spec() const { return spec_; }

    /// Modal prediction at theta on the assembled physical DOFs, mode-matched
    /// against the measurement to guard against crossings under damage.
    ModalData predict(const VectorXd& theta) const {
        DamageState ds{theta};
        ModalData reduced;
        MatrixXd physical;
        if (spec_.reduction_method == ReductionMethod::CB) {
            const ReducedSystem sys = cb_->reduced_at(ds);
            reduced = cb_eigenvalues(sys, spec_.n_modes);
            physical = cb_->expand(reduced.mode_shapes);
        } else {
            const ReducedSystem sys = dcb_->reduced_at(ds);
            reduced = dcb_eigenvalues(*dcb_, sys, spec_.n_modes).modes;
            physical = dcb_->expand(ds, reduced.mode_shapes);
        }
        ModalData model;
        model.mode_shapes = physical;
        model.eigenvalues = reduced.eigenvalues;

        const ModeMatch match = match_modes(spec_.data, model);
        ModalData ordered;
        ordered.eigenvalues.resize(spec_.n_modes);
        ordered.mode_shapes.resize(physical.rows(), spec_.n_modes);
        for (int i = 0; i < spec_.n_modes; ++i) {
            ordered.eigenvalues(i) = model.eigenvalues(match.permutation[i]);
            ordered.mode_shapes.col(i) = model.mode_shapes.col(match.permutation[i]);
        }
        // degenerate pairs come back in an arbitrary rotation; align them to
        // the measurement so the MAC term vanishes at the true parameters
        align_degenerate_clusters(spec_.data, ordered, spec_.n_modes);
        return ordered;
    }

    double objective(const VectorXd& theta) const {
        const ModalData model = predict(theta);
        return objective_j(model, spec_.data, spec_.n_modes);
    }

    double operator()(const VectorXd& theta) const {
        if ((theta.array() <= 0.0).any()) return kNegInf;
        try {
            const double j = objective(theta);
            return -j / (2.0 * spec_.beta_error * spec_.beta_error);
        } catch (const std::exception&) {
            // pathological theta: eigensolver failure treated as a rejected sample
            return kNegInf;
        }
    }

private:
    LikelihoodSpec spec_;
    const CbAssembly* cb_;
    const DcbAssembly* dcb_;
};

struct TmcmcConfig {
    int n_samples = 1000;
    double target_cov = 1.0;
    double proposal_scale = 0.2;  // beta scaling of the stagewise covariance
    int max_stages = 50;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_samples < 100) throw std::invalid_argument("TmcmcConfig: n_samples must be >= 100");
        if (proposal_scale <= 0.0 || proposal_scale >= 1.0)
            throw std::invalid_argument("TmcmcConfig: proposal_scale must be in (0, 1)");
        if (target_cov <= 0.0) throw std::invalid_argument("TmcmcConfig: target_cov must be > 0");
        if (max_stages < 1) throw std::invalid_argument("TmcmcConfig: max_stages must be >= 1");
    }
};

struct PosteriorSample {
    VectorXd theta;
    double log_likelihood = 0.0;
    double log_prior = 0.0;
    int stage = 0;
};

struct TmcmcResult {
    std::vector<std::vector<PosteriorSample>> stages;  // one cloud per stage, stage 0 = prior
    std::vector<double> exponents;                     // tempering exponent after each stage
    double log_evidence = 0.0;
    long n_likelihood_evals = 0;

    const std::vector<PosteriorSample>& final_samples() const { return stages.back(); }
};

/// Target density factored for the sampler; generic so synthetic test
/// problems (Gaussian, constant likelihood) run through the same code path.
struct TmcmcProblem {
    int dim = 0;
    std::function<VectorXd(std::mt19937_64&)> sample_prior;
    std::function<double(const VectorXd&)> log_prior;
    std::function<double(const VectorXd&)> log_likelihood;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent per-(stage, particle) stream so parallel execution cannot
/// perturb reproducibility.
inline std::mt19937_64 particle_rng(std::uint64_t seed, int stage, int particle, std::uint64_t salt) {
    std::uint64_t s = splitmix64(seed ^ salt);
    s = splitmix64(s ^ (static_cast<std::uint64_t>(stage) << 32));
    s = splitmix64(s ^ static_cast<std::uint64_t>(particle));
    return std::mt19937_64(s);
}

inline int worker_count() {
    if (const char* env = std::getenv("SUBSTRUCT_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    const int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

/// Coefficient of variation of w_k = exp(dp * (ll_k - max)), shift-stable.
inline double weight_cov(const std::vector<double>& ll, double dp) {
    const double mx = *std::max_element(ll.begin(), ll.end());
    double sum = 0.0, sum2 = 0.0;
    for (double l : ll) {
        const double w = std::isfinite(l) ? std::exp(dp * (l - mx)) : 0.0;
        sum += w;
        sum2 += w * w;
    }
    const int n = static_cast<int>(ll.size());
    const double mean = sum / n;
    if (mean <= 0.0) return std::numeric_limits<double>::infinity();
    const double var = std::max(0.0, sum2 / n - mean * mean);
    return std::sqrt(var) / mean;
}

}  // namespace detail

/// Staged tempering from prior to posterior: reweight, resample, one
/// Metropolis move per particle, until the exponent reaches exactly 1.
/// Also accumulates the log-evidence from the stagewise weight means.
inline TmcmcResult tmcmc(const TmcmcProblem& problem, const TmcmcConfig& config) {
    config.validate();
    const int n = config.n_samples;
    const int dim = problem.dim;

    TmcmcResult result;
    result.stages.emplace_back(n);
    std::vector<PosteriorSample>& stage0 = result.stages.back();

    std::atomic<long> evals{0};
    detail::parallel_for(n, [&](int k) {
        std::mt19937_64 rng = detail::particle_rng(config.seed, 0, k, 0x5a11);
        PosteriorSample& s = stage0[k];
        s.theta = problem.sample_prior(rng);
        s.log_prior = problem.log_prior(s.theta);
        s.log_likelihood = problem.log_likelihood(s.theta);
        s.stage = 0;
        evals.fetch_add(1);
    });

    double exponent = 0.0;
    int stage = 0;
    while (exponent < 1.0) {
        if (stage >= config.max_stages)
            throw std::runtime_error("tmcmc: max_stages exceeded at exponent " + std::to_string(exponent));
        const std::vector<PosteriorSample>& cur = result.stages.back();

        std::vector<double> ll(n);
        for (int k = 0; k < n; ++k) ll[k] = cur[k].log_likelihood;

        // tempering increment by bisection on the weight coefficient of variation
        double dp = 1.0 - exponent;
        if (detail::weight_cov(ll, dp) > config.target_cov) {
            double lo = 0.0, hi = dp;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (detail::weight_cov(ll, mid) > config.target_cov)
                    hi = mid;
                else
                    lo = mid;
            }
            dp = 0.5 * (lo + hi);
        }
        const double new_exponent = std::min(1.0, exponent + dp);
        dp = new_exponent - exponent;

        // evidence increment: log mean of the incremental weights
        const double mx = *std::max_element(ll.begin(), ll.end());
        std::vector<double> w(n);
        double wsum = 0.0;
        for (int k = 0; k < n; ++k) {
            w[k] = std::isfinite(ll[k]) ? std::exp(dp * (ll[k] - mx)) : 0.0;
            wsum += w[k];
        }
        if (wsum <= 0.0) throw std::runtime_error("tmcmc: all incremental weights are zero");
        result.log_evidence += dp * mx + std::log(wsum / n);

        // weighted sample mean/covariance for the proposal
        VectorXd mean = VectorXd::Zero(dim);
        for (int k = 0; k < n; ++k) mean += (w[k] / wsum) * cur[k].theta;
        MatrixXd cov = MatrixXd::Zero(dim, dim);
        for (int k = 0; k < n; ++k) {
            const VectorXd d = cur[k].theta - mean;
            cov += (w[k] / wsum) * (d * d.transpose());
        }
        MatrixXd prop = config.proposal_scale * config.proposal_scale * cov;
        Eigen::LLT<MatrixXd> chol(prop);
        if (chol.info() != Eigen::Success) {
            prop += 1e-12 * prop.trace() * MatrixXd::Identity(dim, dim) +
                    1e-300 * MatrixXd::Identity(dim, dim);
            chol.compute(prop);
            if (chol.info() != Eigen::Success)
                throw std::runtime_error("tmcmc: degenerate proposal covariance");
        }
        const MatrixXd chol_l = chol.matrixL();

        // multinomial resampling from the normalized weights
        std::mt19937_64 rng_rs = detail::particle_rng(config.seed, stage, 0, 0x4e5a);
        std::discrete_distribution<int> pick(w.begin(), w.end());
        std::vector<int> ancestors(n);
        for (int k = 0; k < n; ++k) ancestors[k] = pick(rng_rs);

        result.stages.emplace_back(n);
        std::vector<PosteriorSample>& nxt = result.stages.back();
        const std::vector<PosteriorSample>& prev = result.stages[result.stages.size() - 2];

        detail::parallel_for(n, [&](int k) {
            std::mt19937_64 rng = detail::particle_rng(config.seed, stage + 1, k, 0x3c8d);
            PosteriorSample s = prev[ancestors[k]];
            s.stage = stage + 1;

            std::normal_distribution<double> nd(0.0, 1.0);
            VectorXd step(dim);
            for (int d = 0; d < dim; ++d) step(d) = nd(rng);
            const VectorXd cand = s.theta + chol_l * step;

            const double cand_lp = problem.log_prior(cand);
            double cand_ll = kNegInf;
            if (std::isfinite(cand_lp)) {
                cand_ll = problem.log_likelihood(cand);
                evals.fetch_add(1);
            }
            const double log_alpha = new_exponent * (cand_ll - s.log_likelihood) + cand_lp - s.log_prior;
            std::uniform_real_distribution<double> ud(0.0, 1.0);
            if (std::log(ud(rng)) < log_alpha) {
                s.theta = cand;
                s.log_prior = cand_lp;
                s.log_likelihood = cand_ll;
            }
            nxt[k] = std::move(s);
        });

        exponent = new_exponent;
        result.exponents.push_back(exponent);
        ++stage;
    }
    result.n_likelihood_evals = evals.load();
    return result;
}

struct PosteriorSummary {
    VectorXd mean;
    VectorXd stddev;
    VectorXd map;  // sample with the highest log posterior
    VectorXd q025;
    VectorXd q975;
    double map_log_posterior = kNegInf;
};

inline PosteriorSummary posterior_summary(const std::vector<PosteriorSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("posterior_summary: empty sample set");
    const int n = static_cast<int>(samples.size());
    const int dim = static_cast<int>(samples.front().theta.size());

    PosteriorSummary s;
    s.mean = VectorXd::Zero(dim);
    for (const auto& smp : samples) s.mean += smp.theta;
    s.mean /= n;

    s.stddev = VectorXd::Zero(dim);
    for (const auto& smp : samples) s.stddev += (smp.theta - s.mean).cwiseAbs2();
    s.stddev = (s.stddev / n).cwiseSqrt();

    for (const auto& smp : samples) {
        const double lpost = smp.log_prior + smp.log_likelihood;
        if (lpost > s.map_log_posterior) {
            s.map_log_posterior = lpost;
            s.map = smp.theta;
        }
    }

    s.q025.resize(dim);
    s.q975.resize(dim);
    std::vector<double> vals(n);
    for (int d = 0; d < dim; ++d) {
        for (int k = 0; k < n; ++k) vals[k] = samples[k].theta(d);
        std::sort(vals.begin(), vals.end());
        auto quantile = [&](double q) {
            const double pos = q * (n - 1);
            const int lo = static_cast<int>(pos);
            const int hi = std::min(lo + 1, n - 1);
            return vals[lo] + (pos - lo) * (vals[hi] - vals[lo]);
        };
        s.q025(d) = quantile(0.025);
        s.q975(d) = quantile(0.975);
    }
    return s;
}

/// Prior sampler + densities wired into the generic TMCMC problem.
inline TmcmcProblem make_updating_problem(const PriorSpec& prior, const ReducedLikelihood& likelihood) {
    prior.validate();
    TmcmcProblem p;
    p.dim = static_cast<int>(prior.log_mean.size());
    p.sample_prior = [prior](std::mt19937_64& rng) {
        VectorXd theta(prior.log_mean.size());
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int i = 0; i < theta.size(); ++i)
            theta(i) = std::exp(prior.log_mean(i) + prior.log_sigma(i) * nd(rng));
        return theta;
    };
    p.log_prior = [prior](const VectorXd& t) { return log_prior(t, prior); };
    p.log_likelihood = [&likelihood](const VectorXd& t) { return likelihood(t); };
    return p;
}

}  // namespace substruct
