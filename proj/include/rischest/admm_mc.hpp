#pragma once

// Quantized matrix completion: recover the full receiver matrix from the
// sampled 1-bit entries under a nuclear-norm ball and an entrywise modulus
// ball, by the split iteration
//   Ybar <- P_inf((2 Y_O + 2 F + (2 + mu) Yhat) / (4 + mu))
//   F    <- F + mu (Yhat - Ybar)
//   Yhat <- P_nuc(Ybar - 2 F / (2 + mu))
//   mu   <- 1.01 mu

#include "rischest/observation.hpp"
#include "rischest/rng.hpp"
#include "rischest/transform.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rischest {

struct AdmmParams {
    double nuclear_radius = 1.0;   // sigma
    double modulus_radius = 1.05;  // gamma
    double mu0 = 1e-2;
    double growth = 1.01;
    double tolerance = 1e-4;       // epsilon_1, absolute Frobenius
    int max_iterations = 500;
    int rank_hint = 20;            // partial SVD keeps 2 * rank_hint triplets
    bool masked_residual = false;  // restrict the data term to observed entries
    bool exact_projection = true;  // false: keep the rank-truncated projection

    void validate() const
    {
        if (!(nuclear_radius > 0) || !(modulus_radius > 0) || !(mu0 > 0) || !(tolerance > 0))
            throw std::invalid_argument("AdmmParams: radii, mu0 and tolerance must be positive");
        if (max_iterations < 1)
            throw std::invalid_argument("AdmmParams: max_iterations must be >= 1");
        if (!(growth >= 1))
            throw std::invalid_argument("AdmmParams: growth must be >= 1");
    }

    // Radii scaled from the data: sigma = scale sqrt(N_path) ||Y_O||_F / sqrt(rho),
    // gamma = 1.05 max observed modulus, epsilon_1 = 1e-4 ||Y_O||_F.
    static AdmmParams defaults_for(const Observation& obs, int n_paths, double nuclear_scale = 1.2)
    {
        AdmmParams p;
        const double fro = obs.values.norm();
        const double rho = static_cast<double>(obs.observed_count()) / static_cast<double>(obs.values.size());
        p.nuclear_radius = nuclear_scale * std::sqrt(static_cast<double>(n_paths)) * fro / std::sqrt(rho);
        p.modulus_radius = 1.05 * obs.values.cwiseAbs().maxCoeff();
        p.tolerance = 1e-4 * fro;
        p.rank_hint = n_paths;
        return p;
    }
};

// Entrywise projection onto {|m_ij| <= gamma}.
inline Mat project_inf_ball(const Mat& m, double gamma)
{
    if (!(gamma > 0))
        throw std::invalid_argument("project_inf_ball: radius must be positive");
    const double g2 = gamma * gamma;
    return m.unaryExpr([gamma, g2](cplx v) {
        const double a2 = std::norm(v);
        return a2 > g2 ? v * (gamma / std::sqrt(a2)) : v;
    });
}

// Euclidean projection of a nonnegative vector onto {s >= 0, sum s <= radius}.
inline RVec project_l1_nonneg(const RVec& s, double radius)
{
    if (s.sum() <= radius)
        return s;
    std::vector<double> sorted(s.data(), s.data() + s.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        const double t = (cumulative - radius) / static_cast<double>(i + 1);
        if (i + 1 == sorted.size() || sorted[i + 1] <= t) {
            threshold = t;
            break;
        }
    }
    return (s.array() - threshold).max(0.0).matrix();
}

inline double nuclear_norm(const Mat& m)
{
    return Eigen::BDCSVD<Mat>(m).singularValues().sum();
}

// Projection onto {||M||_* <= sigma} via a full SVD.
inline Mat project_nuclear_ball(const Mat& m, double sigma)
{
    if (!(sigma > 0))
        throw std::invalid_argument("project_nuclear_ball: radius must be positive");
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("project_nuclear_ball: SVD failed");
    const RVec& s = svd.singularValues();
    if (s.sum() <= sigma)
        return m;
    const RVec t = project_l1_nonneg(s, sigma);
    return svd.matrixU() * t.asDiagonal() * svd.matrixV().adjoint();
}

// Nuclear-ball projection from a warm-started randomized partial SVD of the
// leading `rank` triplets. In exact mode it falls back to a full SVD whenever
// the truncated spectrum cannot certify the exact projection; otherwise the
// discarded tail is dropped (a rank-constrained projection).
class NuclearBallProjector {
public:
    NuclearBallProjector(int rank, std::uint64_t seed, bool exact = true, int oversample = 8, int power_iterations = 1)
        : rank_(rank), oversample_(oversample), power_(power_iterations), exact_(exact), rng_(seed)
    {
    }

    int full_svd_count() const { return full_svds_; }
    int partial_svd_count() const { return partial_svds_; }
    double last_nuclear_norm() const { return last_nuclear_; }

    Mat project(const Mat& m, double sigma)
    {
        const Eigen::Index min_dim = std::min(m.rows(), m.cols());
        const Eigen::Index k = std::min<Eigen::Index>(rank_, min_dim);
        const Eigen::Index width = std::min<Eigen::Index>(k + oversample_, min_dim);
        if (width >= min_dim / 2)
            return full(m, sigma);

        // Range finder on the right, seeded with the previous subspace.
        Mat omega(m.cols(), width);
        for (Eigen::Index c = 0; c < width; ++c)
            for (Eigen::Index r = 0; r < m.cols(); ++r)
                omega(r, c) = rng_.complex_normal();
        if (warm_.rows() == m.cols()) {
            const Eigen::Index keep = std::min(warm_.cols(), width);
            omega.leftCols(keep) = warm_.leftCols(keep);
        }
        Mat q = orthonormal(m * omega);
        for (int i = 0; i < power_; ++i) {
            const Mat w = orthonormal(m.adjoint() * q);
            q = orthonormal(m * w);
        }
        // SVD of the sketch B = Q^H M through B^H = P R: B = R^H P^H.
        const Mat bh = m.adjoint() * q;
        Eigen::HouseholderQR<Mat> qr(bh);
        const Mat p = qr.householderQ() * Mat::Identity(bh.rows(), bh.cols());
        const Mat rh = qr.matrixQR().topRows(bh.cols()).triangularView<Eigen::Upper>().toDenseMatrix().adjoint();
        Eigen::JacobiSVD<Mat> svd(rh, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const RVec s = svd.singularValues().head(k);
        const Mat u = q * svd.matrixU().leftCols(k);
        const Mat v = p * svd.matrixV().leftCols(k);
        warm_ = p * svd.matrixV();
        ++partial_svds_;

        const double top_sum = s.sum();
        const double rest_energy = std::max(0.0, m.squaredNorm() - s.squaredNorm());
        const double rest_bound = std::sqrt(static_cast<double>(min_dim - k) * rest_energy);
        if (top_sum + rest_bound <= sigma) {
            last_nuclear_ = top_sum + rest_bound;
            return m;
        }
        if (exact_ && top_sum <= sigma)
            return full(m, sigma);
        const RVec t = project_l1_nonneg(s, sigma);
        // Exact only if every discarded singular value would also be zeroed.
        if (exact_ && t(k - 1) > 0.0 && k < min_dim)
            return full(m, sigma);
        last_nuclear_ = t.sum();
        return u * t.asDiagonal() * v.adjoint();
    }

private:
    static Mat orthonormal(const Mat& a)
    {
        Eigen::HouseholderQR<Mat> qr(a);
        return qr.householderQ() * Mat::Identity(a.rows(), a.cols());
    }

    Mat full(const Mat& m, double sigma)
    {
        ++full_svds_;
        Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success)
            throw std::runtime_error("NuclearBallProjector: SVD failed");
        const RVec& s = svd.singularValues();
        warm_ = svd.matrixV().leftCols(std::min<Eigen::Index>(rank_ + oversample_, s.size()));
        if (s.sum() <= sigma) {
            last_nuclear_ = s.sum();
            return m;
        }
        const RVec t = project_l1_nonneg(s, sigma);
        last_nuclear_ = t.sum();
        return svd.matrixU() * t.asDiagonal() * svd.matrixV().adjoint();
    }

    int rank_;
    int oversample_;
    int power_;
    bool exact_;
    Rng rng_;
    Mat warm_;
    int full_svds_ = 0;
    int partial_svds_ = 0;
    double last_nuclear_ = 0.0;
};

struct AdmmIterate {
    int iteration = 0;
    double residual = 0.0;       // ||P_O(Yhat - Y_O)||_F
    double gap = 0.0;            // ||Yhat - Ybar||_F
    double nuclear = 0.0;        // ||Yhat||_* (upper bound when the projection was inactive)
};

struct AdmmResult {
    Mat completed;  // Yhat
    int iterations = 0;
    bool converged = false;
    std::vector<AdmmIterate> trace;
};

inline void write_admm_trace_csv(std::ostream& os, const std::vector<AdmmIterate>& trace)
{
    os << "iteration,residual,feasibility_gap,nuclear_norm\n";
    for (const auto& t : trace)
        os << t.iteration << ',' << t.residual << ',' << t.gap << ',' << t.nuclear << '\n';
}

class AdmmError : public std::runtime_error {
public:
    AdmmError(const std::string& what, int iteration)
        : std::runtime_error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration)
    {
    }
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

inline AdmmResult admm_complete(const Observation& obs, const AdmmParams& params, bool keep_trace = false,
                                std::uint64_t seed = 0x5eed)
{
    params.validate();
    if (obs.values.size() == 0 || obs.observed_count() == 0)
        throw std::invalid_argument("admm_complete: empty observation");

    const Mat& y = obs.values;
    const Eigen::MatrixXd w = obs.weights();
    // Data weight per entry: 1 everywhere, or only on observed entries.
    const Eigen::MatrixXd data_w = params.masked_residual ? w : Eigen::MatrixXd::Ones(y.rows(), y.cols());

    NuclearBallProjector nuclear(2 * params.rank_hint, seed, params.exact_projection, 8,
                                 params.exact_projection ? 1 : 0);
    Mat yhat = Mat::Zero(y.rows(), y.cols());
    Mat ybar = yhat;
    Mat f = Mat::Zero(y.rows(), y.cols());
    double mu = params.mu0;

    AdmmResult result;
    const Mat data_term = 2.0 * data_w.cast<cplx>().cwiseProduct(y);
    for (int k = 1; k <= params.max_iterations; ++k) {
        const Eigen::ArrayXXd inv_den = (2.0 * data_w.array() + 2.0 + mu).inverse();
        const Mat num = data_term + 2.0 * f + (2.0 + mu) * yhat;
        ybar = project_inf_ball((num.array() * inv_den.cast<cplx>()).matrix(), params.modulus_radius);
        if (!ybar.allFinite())
            throw AdmmError("admm_complete: non-finite iterate", k);
        f += mu * (yhat - ybar);
        yhat = nuclear.project(ybar - (2.0 / (2.0 + mu)) * f, params.nuclear_radius);
        mu *= params.growth;

        if (!yhat.allFinite())
            throw AdmmError("admm_complete: non-finite iterate", k);

        const double residual = w.cast<cplx>().cwiseProduct(yhat - y).norm();
        const double gap = (yhat - ybar).norm();
        result.iterations = k;
        if (keep_trace)
            result.trace.push_back({k, residual, gap, nuclear.last_nuclear_norm()});
        if (residual <= params.tolerance || gap <= params.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.completed = std::move(yhat);
    return result;
}

} // namespace rischest
