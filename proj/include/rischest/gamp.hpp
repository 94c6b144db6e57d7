#pragma once

// Generalized approximate message passing with a Bernoulli/Gaussian-mixture
// coefficient prior, 1-bit or AWGN output channels, and EM learning of the
// prior and noise hyperparameters. All variances are circular-complex
// (E|x - mean|^2); the 1-bit channel acts on real and imaginary parts
// independently.

#include "rischest/transform.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rischest {

inline constexpr int max_mixture_components = 8;

struct GmPrior {
    double sparsity = 0.1;  // eta
    std::vector<double> weights{1.0};
    std::vector<cplx> means{cplx{}};
    std::vector<double> variances{1.0};
    double noise_variance = 1e-2;

    int components() const { return static_cast<int>(weights.size()); }

    void validate() const
    {
        const int l = components();
        if (l < 1 || l > max_mixture_components)
            throw std::invalid_argument("GmPrior: component count out of range");
        if (static_cast<int>(means.size()) != l || static_cast<int>(variances.size()) != l)
            throw std::invalid_argument("GmPrior: component arrays differ in length");
        if (!(sparsity >= 0 && sparsity <= 1))
            throw std::invalid_argument("GmPrior: sparsity rate outside [0, 1]");
        double total = 0.0;
        for (int i = 0; i < l; ++i) {
            if (!(variances[i] > 0) || !(weights[i] >= 0))
                throw std::invalid_argument("GmPrior: variances must be positive and weights nonnegative");
            total += weights[i];
        }
        if (std::abs(total - 1.0) > 1e-10)
            throw std::invalid_argument("GmPrior: weights do not sum to one");
        if (!(noise_variance > 0))
            throw std::invalid_argument("GmPrior: noise variance must be positive");
    }

    cplx mean() const
    {
        cplx m{};
        for (int l = 0; l < components(); ++l)
            m += weights[l] * means[l];
        return sparsity * m;
    }

    double variance() const
    {
        double second = 0.0;
        for (int l = 0; l < components(); ++l)
            second += weights[l] * (variances[l] + std::norm(means[l]));
        return std::max(0.0, sparsity * second - std::norm(mean()));
    }

    // Zero-mean components with variances spaced by 4x, equal weights, whose
    // mixture variance is `active_variance`.
    static GmPrior initial(double active_variance, double noise_variance, int components = 3, double sparsity = 0.1)
    {
        GmPrior q;
        q.sparsity = sparsity;
        q.noise_variance = noise_variance;
        q.weights.assign(components, 1.0 / components);
        q.means.assign(components, cplx{});
        q.variances.resize(components);
        double mean_ratio = 0.0;
        for (int l = 0; l < components; ++l)
            mean_ratio += std::pow(4.0, l) / components;
        for (int l = 0; l < components; ++l)
            q.variances[l] = active_variance * std::pow(4.0, l) / mean_ratio;
        return q;
    }
};

struct ScalarMoments {
    cplx mean;
    double variance = 0.0;
};

namespace detail {

// phi(c) / Phi(c), stable for very negative c.
inline double inverse_mills(double c)
{
    if (c > -30.0) {
        const double pdf = std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
        const double cdf = 0.5 * std::erfc(-c / std::numbers::sqrt2);
        return pdf / cdf;
    }
    const double c2 = c * c;
    return -c / (1.0 - 1.0 / c2 + 3.0 / (c2 * c2) - 15.0 / (c2 * c2 * c2));
}

inline double log_normal_cdf(double c)
{
    if (c > -30.0)
        return std::log(0.5 * std::erfc(-c / std::numbers::sqrt2));
    return -0.5 * c * c - std::log(-c) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Posterior of u ~ N(mean, var) given sign(u + w) = s, w ~ N(0, noise).
inline void probit_part(double s, double mean, double var, double noise, double& out_mean, double& out_var)
{
    const double scale = std::sqrt(var + noise);
    const double c = s * mean / scale;
    const double ratio = inverse_mills(c);
    out_mean = mean + s * var / scale * ratio;
    out_var = var - var * var / (var + noise) * ratio * (c + ratio);
    out_var = std::clamp(out_var, 0.0, var);
}

} // namespace detail

// Posterior mean and variance of z given Q(z + w) = symbol, z ~ CN(p, mu_p),
// w ~ CN(0, noise).
inline ScalarMoments one_bit_output_moments(cplx symbol, cplx p, double mu_p, double noise)
{
    if (!(mu_p > 0) || !(noise >= 0))
        throw std::invalid_argument("one_bit_output_moments: variances must be positive");
    double mr, vr, mi, vi;
    detail::probit_part(symbol.real() >= 0 ? 1.0 : -1.0, p.real(), mu_p / 2, noise / 2, mr, vr);
    detail::probit_part(symbol.imag() >= 0 ? 1.0 : -1.0, p.imag(), mu_p / 2, noise / 2, mi, vi);
    return {{mr, mi}, vr + vi};
}

inline ScalarMoments awgn_output_moments(cplx y, cplx p, double mu_p, double noise)
{
    if (!(mu_p > 0) || !(noise >= 0))
        throw std::invalid_argument("awgn_output_moments: variances must be positive");
    const double g = mu_p / (mu_p + noise);
    return {p + g * (y - p), g * noise};
}

// Per-coefficient posterior under the spike + Gaussian-mixture prior.
struct PosteriorCoeffs {
    double support = 0.0;                                       // pi_n
    std::array<double, max_mixture_components> responsibility{};  // beta_bar_{n,l}
    std::array<cplx, max_mixture_components> mean{};              // gamma_{n,l}
    std::array<double, max_mixture_components> variance{};        // nu_{n,l}
    double log_normalizer = 0.0;                                 // log zeta_n
};

struct InputPosterior {
    cplx mean;
    double variance = 0.0;
    PosteriorCoeffs coeffs;
};

// Spike + Gaussian-mixture posterior of x given r = x + CN(0, mu_r). The
// mu_r-dependent constants are cached across consecutive calls with the same
// mu_r, which GAMP produces in long runs.
class InputDenoiser {
public:
    explicit InputDenoiser(const GmPrior& prior) : prior_(prior), nl_(prior.components())
    {
        constexpr double ninf = -std::numeric_limits<double>::infinity();
        log_spike_weight_ = prior.sparsity < 1.0 ? std::log1p(-prior.sparsity) : ninf;
        for (int l = 0; l < nl_; ++l)
            log_slab_weight_[l] = (prior.sparsity > 0 && prior.weights[l] > 0)
                                      ? std::log(prior.sparsity) + std::log(prior.weights[l])
                                      : ninf;
    }

    InputPosterior operator()(cplx r, double mu_r, bool with_normalizer = true)
    {
        if (!(mu_r > 0))
            throw std::invalid_argument("input_moments: variance must be positive");
        if (mu_r != cached_mu_)
            refresh(mu_r);
        InputPosterior out;
        auto& c = out.coeffs;

        // Log evidences of the spike and of each slab component.
        const double log_spike = log_spike_weight_ + spike_log_scale_ - std::norm(r) * inv_mu_;
        std::array<double, max_mixture_components> log_slab;
        double peak = log_spike;
        for (int l = 0; l < nl_; ++l) {
            log_slab[l] = log_slab_weight_[l] + slab_log_scale_[l] - std::norm(r - prior_.means[l]) * inv_total_[l];
            peak = std::max(peak, log_slab[l]);
        }
        double slab_sum = 0.0;
        for (int l = 0; l < nl_; ++l) {
            c.responsibility[l] = std::isinf(log_slab[l]) ? 0.0 : std::exp(log_slab[l] - peak);
            slab_sum += c.responsibility[l];
        }
        const double spike_term = std::isinf(log_spike) ? 0.0 : std::exp(log_spike - peak);
        if (with_normalizer)
            c.log_normalizer = peak + std::log(spike_term + slab_sum);
        c.support = slab_sum / (spike_term + slab_sum);
        if (slab_sum > 0)
            for (int l = 0; l < nl_; ++l)
                c.responsibility[l] /= slab_sum;

        cplx mean{};
        double second = 0.0;
        for (int l = 0; l < nl_; ++l) {
            c.mean[l] = r * gain_[l] + prior_.means[l] * (1.0 - gain_[l]);
            c.variance[l] = post_var_[l];
            mean += c.responsibility[l] * c.mean[l];
            second += c.responsibility[l] * (c.variance[l] + std::norm(c.mean[l]));
        }
        out.mean = c.support * mean;
        out.variance = std::max(0.0, c.support * second - std::norm(out.mean));
        return out;
    }

private:
    void refresh(double mu_r)
    {
        cached_mu_ = mu_r;
        inv_mu_ = 1.0 / mu_r;
        spike_log_scale_ = -std::log(std::numbers::pi * mu_r);
        for (int l = 0; l < nl_; ++l) {
            const double total = prior_.variances[l] + mu_r;
            inv_total_[l] = 1.0 / total;
            slab_log_scale_[l] = -std::log(std::numbers::pi * total);
            gain_[l] = prior_.variances[l] / total;
            post_var_[l] = prior_.variances[l] * mu_r / total;
        }
    }

    const GmPrior& prior_;
    int nl_;
    double log_spike_weight_;
    std::array<double, max_mixture_components> log_slab_weight_{};
    double cached_mu_ = -1.0;
    double inv_mu_ = 0.0;
    double spike_log_scale_ = 0.0;
    std::array<double, max_mixture_components> inv_total_{};
    std::array<double, max_mixture_components> slab_log_scale_{};
    std::array<double, max_mixture_components> gain_{};
    std::array<double, max_mixture_components> post_var_{};
};

inline InputPosterior input_moments(cplx r, double mu_r, const GmPrior& prior)
{
    return InputDenoiser(prior)(r, mu_r);
}

// Sum over n of log p(r_n; prior) where r_n = x_n + CN(0, mu_r_n).
inline double prior_log_evidence(const Vec& r, const RVec& mu_r, const GmPrior& prior)
{
    InputDenoiser denoise(prior);
    double total = 0.0;
    for (Eigen::Index n = 0; n < r.size(); ++n)
        total += denoise(r(n), mu_r(n)).coeffs.log_normalizer;
    return total;
}

// Closed-form M-step for eta, omega, theta, phi from the input-side
// posteriors. Components whose variance collapses are pruned.
inline GmPrior em_update_prior(const GmPrior& prior, const Vec& r, const RVec& mu_r, bool learn_means = true)
{
    const int nl = prior.components();
    const auto n = static_cast<double>(r.size());
    double support_sum = 0.0;
    std::array<double, max_mixture_components> mass{};
    std::array<cplx, max_mixture_components> first{};
    std::array<double, max_mixture_components> raw_second{};
    InputDenoiser denoise(prior);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const InputPosterior post = denoise(r(i), mu_r(i), false);
        const auto& c = post.coeffs;
        support_sum += c.support;
        for (int l = 0; l < nl; ++l) {
            const double w = c.support * c.responsibility[l];
            mass[l] += w;
            first[l] += w * c.mean[l];
            raw_second[l] += w * (std::norm(c.mean[l]) + c.variance[l]);
        }
    }
    GmPrior next = prior;
    next.sparsity = std::clamp(support_sum / n, 0.0, 1.0);
    // sum_n w (|theta - gamma|^2 + nu) expanded around the updated mean.
    std::array<double, max_mixture_components> second{};
    for (int l = 0; l < nl; ++l) {
        if (learn_means && mass[l] > 0)
            next.means[l] = first[l] / mass[l];
        const cplx t = next.means[l];
        second[l] = std::max(0.0, raw_second[l] - 2.0 * (std::conj(t) * first[l]).real() + std::norm(t) * mass[l]);
    }
    for (int l = 0; l < nl; ++l) {
        if (mass[l] > 0)
            next.variances[l] = second[l] / mass[l];
        next.weights[l] = support_sum > 0 ? mass[l] / support_sum : prior.weights[l];
    }

    GmPrior pruned = next;
    pruned.weights.clear();
    pruned.means.clear();
    pruned.variances.clear();
    for (int l = 0; l < nl; ++l)
        if (next.variances[l] >= 1e-12 && next.weights[l] > 0) {
            pruned.weights.push_back(next.weights[l]);
            pruned.means.push_back(next.means[l]);
            pruned.variances.push_back(next.variances[l]);
        }
    if (pruned.weights.empty())
        return next;  // nothing survives; keep the raw update
    double total = 0.0;
    for (double w : pruned.weights)
        total += w;
    for (double& w : pruned.weights)
        w /= total;
    return pruned;
}

// ---------------------------------------------------------------------------
// Output channels

enum class OutputKind { one_bit, awgn };
enum class NoisePolicy { learned, fixed, relative };

struct OutputChannel {
    OutputKind kind = OutputKind::one_bit;
    Vec y;
    // Noise group per measurement (empty: a single group). Each group has
    // its own noise variance.
    std::vector<std::uint8_t> group;
    std::vector<double> noise{1e-2};
    // Per group: how EM treats the noise variance (default: learned).
    std::vector<NoisePolicy> policy;
    // For NoisePolicy::relative: variance = ratio * mean(|p|^2 + mu_p).
    std::vector<double> ratio;

    NoisePolicy policy_of(int g) const
    {
        return static_cast<std::size_t>(g) < policy.size() ? policy[g] : NoisePolicy::learned;
    }

    int groups() const { return static_cast<int>(noise.size()); }
    int group_of(Eigen::Index m) const { return group.empty() ? 0 : group[static_cast<std::size_t>(m)]; }

    ScalarMoments moments(Eigen::Index m, cplx p, double mu_p) const
    {
        const double w = noise[group_of(m)];
        return kind == OutputKind::one_bit ? one_bit_output_moments(y(m), p, mu_p, w)
                                           : awgn_output_moments(y(m), p, mu_p, w);
    }
};

namespace detail {

// Type-II maximum-likelihood noise variance for the 1-bit channel under the
// Gaussian predictive z ~ CN(p, mu_p): maximize sum log Phi(s p / sqrt((mu_p + w) / 2))
// over log w by golden-section search.
inline double one_bit_noise_ml(const OutputChannel& ch, int g, const Vec& p, const RVec& mu_p, double current)
{
    auto objective = [&](double log_w) {
        const double w = std::exp(log_w);
        double total = 0.0;
        for (Eigen::Index m = 0; m < p.size(); ++m) {
            if (ch.group_of(m) != g)
                continue;
            const double scale = std::sqrt((mu_p(m) + w) / 2.0);
            total += log_normal_cdf((ch.y(m).real() >= 0 ? 1.0 : -1.0) * p(m).real() / scale);
            total += log_normal_cdf((ch.y(m).imag() >= 0 ? 1.0 : -1.0) * p(m).imag() / scale);
        }
        return total;
    };
    double lo = std::log(current) - 6.0;
    double hi = std::log(current) + 6.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    double fa = objective(a);
    double fb = objective(b);
    for (int it = 0; it < 40; ++it) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = objective(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = objective(a);
        }
    }
    return std::exp(0.5 * (lo + hi));
}

} // namespace detail

// ---------------------------------------------------------------------------
// GAMP

struct GampOptions {
    int max_iterations = 15;
    double tolerance = 1e-5;   // relative: ||dx|| <= tolerance ||x||
    double damping = 0.7;      // weight on the new iterate
    double variance_floor = 1e-12;
    double divergence_factor = 1e3;
};

struct GampState {
    Vec x;       // posterior mean
    RVec x_var;
    Vec s;       // scaled residual (Onsager memory)
    RVec s_var;
    Vec r;       // input-side pseudo-observations
    RVec r_var;
    Vec p;       // output-side predictions
    RVec p_var;
    Vec z;       // output posterior means
    RVec z_var;
    int iterations = 0;
    double reference_norm = 0.0;  // prior-expected ||x|| at initialization
};

class GampDivergence : public std::runtime_error {
public:
    explicit GampDivergence(const std::string& what)
        : std::runtime_error(what + "; increase damping (smaller damping weight)")
    {
    }
};

template <MagnitudeOperator Op>
GampState gamp_initial_state(const Op& a, const GmPrior& prior)
{
    GampState st;
    st.x = Vec::Constant(a.cols(), prior.mean());
    st.x_var = RVec::Constant(a.cols(), std::max(prior.variance(), 1e-12));
    st.s = Vec::Zero(a.rows());
    st.s_var = RVec::Zero(a.rows());
    st.r = st.x;
    st.r_var = st.x_var;
    st.p = Vec::Zero(a.rows());
    st.p_var = RVec::Ones(a.rows());
    st.z = st.p;
    st.z_var = st.p_var;
    st.reference_norm = std::sqrt(static_cast<double>(a.cols()) * (std::norm(prior.mean()) + prior.variance()));
    return st;
}

// Runs up to options.max_iterations GAMP iterations from `state`, in place.
// Per iteration: two operator applications and two |A|^2 applications.
template <MagnitudeOperator Op>
void gamp_iterate(const Op& a, const OutputChannel& out, const GmPrior& prior, const GampOptions& options,
                  GampState& st)
{
    prior.validate();
    const double floor = options.variance_floor;
    const double beta = options.damping;
    const double start_norm = st.x.norm();
    const double yardstick = std::max(start_norm, st.reference_norm);
    for (int it = 0; it < options.max_iterations; ++it) {
        const bool first = st.iterations == 0;

        st.p_var = a.abs2_forward(st.x_var).cwiseMax(floor);
        st.p = a.forward(st.x) - st.p_var.cwiseProduct(st.s);

        Vec s_new(a.rows());
        RVec s_var_new(a.rows());
        for (Eigen::Index m = 0; m < a.rows(); ++m) {
            const ScalarMoments zm = out.moments(m, st.p(m), st.p_var(m));
            st.z(m) = zm.mean;
            st.z_var(m) = zm.variance;
            s_new(m) = (zm.mean - st.p(m)) / st.p_var(m);
            s_var_new(m) = std::max(floor, (1.0 - zm.variance / st.p_var(m)) / st.p_var(m));
        }
        if (first) {
            st.s = s_new;
            st.s_var = s_var_new;
        } else {
            st.s = beta * s_new + (1.0 - beta) * st.s;
            st.s_var = beta * s_var_new + (1.0 - beta) * st.s_var;
        }

        st.r_var = a.abs2_adjoint(st.s_var).cwiseMax(floor).cwiseInverse().cwiseMin(1.0 / floor);
        st.r = st.x + st.r_var.cwiseProduct(a.adjoint(st.s));

        Vec x_new(a.cols());
        RVec x_var_new(a.cols());
        InputDenoiser denoise(prior);
        for (Eigen::Index n = 0; n < a.cols(); ++n) {
            const InputPosterior post = denoise(st.r(n), st.r_var(n), false);
            x_new(n) = post.mean;
            x_var_new(n) = post.variance;
        }
        if (!x_new.allFinite() || !x_var_new.allFinite())
            throw GampDivergence("gamp: non-finite estimate at iteration " + std::to_string(st.iterations + 1));

        const Vec x_prev = st.x;
        if (first) {
            st.x = x_new;
            st.x_var = x_var_new.cwiseMax(floor);
        } else {
            st.x = beta * x_new + (1.0 - beta) * st.x;
            st.x_var = (beta * x_var_new + (1.0 - beta) * st.x_var).cwiseMax(floor);
        }
        ++st.iterations;

        const double norm = st.x.norm();
        if (yardstick > 0 && norm > options.divergence_factor * yardstick)
            throw GampDivergence("gamp: estimate norm grew " + std::to_string(norm / yardstick) +
                                 "x at iteration " + std::to_string(st.iterations));
        if ((st.x - x_prev).norm() <= options.tolerance * norm)
            break;
    }
}

template <MagnitudeOperator Op>
Vec gamp_run(const Op& a, const OutputChannel& out, const GmPrior& prior, const GampOptions& options = {})
{
    GampState st = gamp_initial_state(a, prior);
    gamp_iterate(a, out, prior, options, st);
    return st.x;
}

// ---------------------------------------------------------------------------
// EM-GAMP

struct EmGampOptions {
    int max_outer = 25;           // t_max
    int inner_iterations = 15;    // GAMP iterations per E-step
    double tolerance = 1e-5;      // epsilon_2 relative to ||x||
    double damping = 0.7;
    bool learn_prior = true;
    bool learn_noise = true;
    bool learn_means = true;
    // 1-bit data fixes the signal only up to scale; rescale after every M-step
    // so the predicted output power is one.
    bool normalize_scale = true;
};

struct EmTraceRow {
    int outer = 0;
    int inner = 0;
    double residual = 0.0;  // ||x_t - x_{t-1}||
    double sparsity = 0.0;
    double noise = 0.0;
};

struct EmGampResult {
    Vec x;
    GmPrior prior;
    std::vector<double> noise;  // per measurement group
    int outer_iterations = 0;
    int gamp_iterations = 0;
    std::vector<EmTraceRow> trace;
};

inline void write_em_trace_csv(std::ostream& os, const std::vector<EmTraceRow>& trace)
{
    os << "outer,inner,residual,sparsity,noise_variance\n";
    for (const auto& t : trace)
        os << t.outer << ',' << t.inner << ',' << t.residual << ',' << t.sparsity << ',' << t.noise << '\n';
}

// mean(|p|^2 + mu_p): the current prior-predictive power of the noiseless output.
inline double predicted_power(const GampState& st)
{
    if (st.p.size() == 0)
        return 0.0;
    return (st.p.cwiseAbs2() + st.p_var).mean();
}

// M-step noise update for measurement group g from the output-side GAMP
// quantities: mean squared residual for AWGN, type-II ML for 1-bit.
inline double em_update_noise(const OutputChannel& out, int g, const GampState& st, double current)
{
    if (out.kind == OutputKind::awgn) {
        double total = 0.0;
        double count = 0.0;
        for (Eigen::Index m = 0; m < out.y.size(); ++m)
            if (out.group_of(m) == g) {
                total += std::norm(out.y(m) - st.z(m)) + st.z_var(m);
                count += 1.0;
            }
        return count > 0 ? std::max(total / count, 1e-30) : current;
    }
    return std::max(detail::one_bit_noise_ml(out, g, st.p, st.p_var, current), 1e-8 * predicted_power(st));
}

// Multiplies the signal by c and carries every dependent quantity along;
// the 1-bit likelihood is unchanged.
inline void rescale(GampState& st, GmPrior& prior, OutputChannel& out, double c)
{
    const double c2 = c * c;
    st.x *= c;
    st.x_var *= c2;
    st.r *= c;
    st.r_var *= c2;
    st.p *= c;
    st.p_var *= c2;
    st.z *= c;
    st.z_var *= c2;
    st.s /= c;
    st.s_var /= c2;
    for (auto& m : prior.means)
        m *= c;
    for (auto& v : prior.variances)
        v *= c2;
    prior.noise_variance *= c2;
    for (auto& w : out.noise)
        w *= c2;
}

// Alternates GAMP E-steps with EM M-steps until ||x_t - x_{t-1}|| <= eps_2
// or max_outer. With max_outer = 0 the prior mean is returned.
template <MagnitudeOperator Op>
EmGampResult estimate_sparse(const Op& a, OutputChannel out, GmPrior prior, const EmGampOptions& options = {})
{
    prior.validate();
    if (out.y.size() != a.rows())
        throw std::invalid_argument("estimate_sparse: measurement length does not match the operator");
    if (out.noise.empty())
        out.noise.assign(1, prior.noise_variance);

    EmGampResult result;
    GampState st = gamp_initial_state(a, prior);
    GampOptions gopt;
    gopt.max_iterations = options.inner_iterations;
    gopt.damping = options.damping;
    gopt.tolerance = options.tolerance;

    Vec previous = st.x;
    for (int t = 1; t <= options.max_outer; ++t) {
        out.noise[0] = prior.noise_variance;
        const int before = st.iterations;
        gamp_iterate(a, out, prior, gopt, st);
        result.gamp_iterations += st.iterations - before;

        if (options.learn_prior)
            prior = em_update_prior(prior, st.r, st.r_var, options.learn_means);
        if (options.learn_noise) {
            for (int g = 0; g < out.groups(); ++g) {
                if (out.policy_of(g) == NoisePolicy::learned)
                    out.noise[g] = em_update_noise(out, g, st, out.noise[g]);
                else if (out.policy_of(g) == NoisePolicy::relative)
                    out.noise[g] = out.ratio.at(g) * predicted_power(st);
            }
            prior.noise_variance = out.noise[0];
        }

        if (options.normalize_scale && out.kind == OutputKind::one_bit) {
            const double power = predicted_power(st);
            if (power > 0) {
                const double c = 1.0 / std::sqrt(power);
                rescale(st, prior, out, c);
                previous *= c;
            }
        }

        const double delta = (st.x - previous).norm();
        result.trace.push_back({t, st.iterations - before, delta, prior.sparsity, prior.noise_variance});
        result.outer_iterations = t;
        previous = st.x;
        if (delta <= options.tolerance * st.x.norm())
            break;
    }
    result.x = st.x;
    result.prior = prior;
    result.noise = out.noise;
    return result;
}

// Starting prior for complex data: an SNR guess splits the measurement
// energy between signal and noise.
template <MagnitudeOperator Op>
GmPrior initial_prior(const Op& a, const OutputChannel& out, int components = 3, double sparsity = 0.1,
                      double snr_guess = 100.0)
{
    const double m = static_cast<double>(a.rows());
    const double frob2 = a.abs2_forward(RVec::Ones(a.cols())).sum();
    double energy = out.y.squaredNorm();
    if (out.kind == OutputKind::one_bit)
        energy = m;  // unit-power convention for sign data
    const double noise = energy / ((snr_guess + 1.0) * m);
    const double active = std::max(energy - m * noise, 1e-12 * energy) / (frob2 * sparsity);
    return GmPrior::initial(active, noise, components, sparsity);
}

} // namespace rischest
