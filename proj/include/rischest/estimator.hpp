#pragma once

// The proposed estimator end to end: complete the sampled 1-bit receiver
// matrix, then run EM-GAMP on the completed measurements.

#include "rischest/admm_mc.hpp"
#include "rischest/gamp.hpp"
#include "rischest/observation.hpp"
#include "rischest/transform.hpp"

#include <cstdint>
#include <stdexcept>

namespace rischest {

struct ProposedOptions {
    double nuclear_scale = 0.1;     // sigma = scale sqrt(N_path) ||Y_O||_F / sqrt(rho)
    bool masked_residual = true;
    bool exact_projection = false;
    int admm_max_iterations = 100;
    int admm_rank_hint = 10;        // the projection keeps 2x this many triplets
    double admm_mu0 = 1e-2;
    double admm_growth = 1.01;
    EmGampOptions em;
    int components = 3;
    double initial_sparsity = 0.1;
    // Noise variance of filled (unobserved) entries as a multiple of the
    // predicted output power. 0 feeds the completed matrix to GAMP as one
    // homogeneous measurement vector.
    double fill_noise_ratio = 1e3;

    void validate() const
    {
        if (!(nuclear_scale > 0))
            throw std::invalid_argument("ProposedOptions: nuclear_scale must be positive");
        if (admm_rank_hint < 1)
            throw std::invalid_argument("ProposedOptions: admm_rank_hint must be >= 1");
        if (admm_max_iterations < 1)
            throw std::invalid_argument("ProposedOptions: admm_max_iterations must be >= 1");
        if (components < 1 || components > max_mixture_components)
            throw std::invalid_argument("ProposedOptions: components out of range");
        if (!(initial_sparsity > 0 && initial_sparsity <= 1))
            throw std::invalid_argument("ProposedOptions: initial_sparsity must lie in (0, 1]");
        if (!(fill_noise_ratio >= 0))
            throw std::invalid_argument("ProposedOptions: fill_noise_ratio must be >= 0");
        if (em.max_outer < 0 || em.inner_iterations < 1)
            throw std::invalid_argument("ProposedOptions: EM iteration counts out of range");
    }
};

// GAMP measurement vector (ordered as vec(Z)) built from a completed
// receiver matrix. Observed entries keep their samples; filled entries take
// the completion (quantized when the data is 1-bit) in their own noise group.
inline OutputChannel completed_measurements(const Mat& completed, const Observation& obs, double fill_noise_ratio)
{
    if (completed.rows() != obs.values.rows() || completed.cols() != obs.values.cols())
        throw std::invalid_argument("completed_measurements: completed matrix does not match the observation");
    OutputChannel out;
    out.kind = obs.quantized ? OutputKind::one_bit : OutputKind::awgn;
    const Mat z = from_receiver_matrix(completed, obs.subcarriers);
    out.y = Eigen::Map<const Vec>(z.data(), z.size());
    if (fill_noise_ratio == 0.0) {
        if (obs.quantized)
            out.y = quantize_1bit(out.y);
        return out;
    }

    const Mat observed = from_receiver_matrix(obs.values, obs.subcarriers);
    const Mat w = from_receiver_matrix(obs.weights().cast<cplx>(), obs.subcarriers);
    out.group.resize(static_cast<std::size_t>(out.y.size()));
    bool any_filled = false;
    for (Eigen::Index m = 0; m < out.y.size(); ++m) {
        const bool seen = w.data()[m].real() > 0.5;
        out.group[m] = seen ? 0 : 1;
        any_filled = any_filled || !seen;
        if (seen)
            out.y(m) = observed.data()[m];
        else if (obs.quantized)
            out.y(m) = quantize_1bit(out.y(m));
    }
    if (!any_filled) {
        out.group.clear();
        return out;
    }
    out.noise = {1.0, 1.0};
    out.policy = {NoisePolicy::learned, NoisePolicy::relative};
    out.ratio = {0.0, fill_noise_ratio};
    return out;
}

// EM-GAMP on a completed matrix. The filled-group variance starts at its
// ratio times the prior-predicted output power.
inline EmGampResult estimate_channel(const Mat& completed, const Observation& obs, const Dictionary& psi,
                                     const ProposedOptions& options = {})
{
    options.validate();
    OutputChannel out = completed_measurements(completed, obs, options.fill_noise_ratio);
    const GmPrior prior = initial_prior(psi, out, options.components, options.initial_sparsity);
    if (out.groups() > 1) {
        const double power = psi.abs2_forward(RVec::Constant(psi.cols(), prior.variance())).mean();
        out.noise = {prior.noise_variance, options.fill_noise_ratio * power};
    } else {
        out.noise = {prior.noise_variance};
    }
    return estimate_sparse(psi, std::move(out), prior, options.em);
}

struct ProposedResult {
    Vec x;
    int admm_iterations = 0;
    bool admm_converged = false;
    EmGampResult em;
};

inline ProposedResult run_proposed(const Observation& obs, const Dictionary& psi, int n_paths,
                                   const ProposedOptions& options = {}, std::uint64_t seed = 0x5eed)
{
    options.validate();
    AdmmParams params = AdmmParams::defaults_for(obs, n_paths, options.nuclear_scale);
    params.masked_residual = options.masked_residual;
    params.exact_projection = options.exact_projection;
    params.max_iterations = options.admm_max_iterations;
    params.rank_hint = options.admm_rank_hint;
    params.mu0 = options.admm_mu0;
    params.growth = options.admm_growth;
    const AdmmResult completion = admm_complete(obs, params, false, seed);

    ProposedResult out;
    out.admm_iterations = completion.iterations;
    out.admm_converged = completion.converged;
    out.em = estimate_channel(completion.completed, obs, psi, options);
    out.x = out.em.x;
    return out;
}

// Stacked channel vec(H) from joint-basis coefficients.
inline Vec channel_from_coefficients(const Vec& x, const JointBasis& basis)
{
    return basis.adjoint(x);
}

} // namespace rischest
