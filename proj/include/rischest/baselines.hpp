#pragma once

// Reference sparse estimators: orthogonal matching pursuit and quantized
// iterative hard thresholding. Both touch the dictionary only through
// operator applications.

#include "rischest/observation.hpp"
#include "rischest/rng.hpp"
#include "rischest/transform.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rischest {

struct BaselineConfig {
    int sparsity = 1;            // K
    std::optional<double> step;  // QIHT step; unset selects 1 / ||psi||_2
    int max_iterations = 100;    // QIHT iterations
    double tolerance = 0.0;      // OMP stops once ||r|| <= tolerance

    void validate() const
    {
        if (sparsity < 1)
            throw std::invalid_argument("BaselineConfig: K must be >= 1");
        if (step && !(*step >= 0))
            throw std::invalid_argument("BaselineConfig: step must be nonnegative");
        if (max_iterations < 0)
            throw std::invalid_argument("BaselineConfig: max_iterations must be >= 0");
    }
};

// Largest singular value by power iteration on A^H A.
template <LinearOperator Op>
double estimate_spectral_norm(const Op& a, int iterations = 30, std::uint64_t seed = 7)
{
    Rng rng(seed);
    Vec v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = rng.complex_normal();
    v.normalize();
    double sigma = 0.0;
    for (int i = 0; i < iterations; ++i) {
        Vec w = a.adjoint(a.forward(v));
        const double n = w.norm();
        if (n == 0.0)
            return 0.0;
        sigma = std::sqrt(n);
        v = w / n;
    }
    return sigma;
}

// ---------------------------------------------------------------------------
// OMP

struct OmpResult {
    Vec x;
    std::vector<Eigen::Index> support;
    std::vector<double> residual_norms;  // after each accepted atom, starting with ||y||
    std::vector<std::string> warnings;
};

template <LinearOperator Op>
OmpResult omp(const Vec& y, const Op& a, int k, double tolerance = 0.0)
{
    detail::require_length(y.size(), a.rows(), "omp");
    if (k < 0 || k > a.cols())
        throw std::invalid_argument("omp: K must lie in [0, number of atoms]");
    OmpResult out;
    out.x = Vec::Zero(a.cols());
    if (k == 0)
        return out;

    auto atom = [&](Eigen::Index j) {
        Vec e = Vec::Zero(a.cols());
        e(j) = 1.0;
        return a.forward(e);
    };
    // Atom norms for normalized correlation.
    RVec norms(a.cols());
    if constexpr (MagnitudeOperator<Op>)
        norms = a.abs2_adjoint(RVec::Ones(a.rows())).cwiseSqrt();
    else
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            norms(j) = atom(j).norm();

    // Incremental Gram-Schmidt with one reorthogonalization pass: columns of q
    // span the selected atoms, r is the upper-triangular factor, coef = q^H y.
    const Eigen::Index m = a.rows();
    Mat q(m, k);
    Mat r = Mat::Zero(k, k);
    Vec coef(k);
    std::vector<char> used(static_cast<std::size_t>(a.cols()), 0);
    Vec residual = y;
    out.residual_norms.push_back(residual.norm());

    int rank = 0;
    while (rank < k && residual.norm() > tolerance) {
        const Vec corr = a.adjoint(residual);
        Eigen::Index best = -1;
        double best_score = 0.0;
        for (Eigen::Index j = 0; j < corr.size(); ++j) {
            if (used[j] || norms(j) <= 0.0)
                continue;
            const double score = std::abs(corr(j)) / norms(j);
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        if (best < 0)
            break;
        used[best] = 1;

        Vec v = atom(best);
        const double original = v.norm();
        for (int pass = 0; pass < 2 && rank > 0; ++pass) {
            const Vec proj = q.leftCols(rank).adjoint() * v;
            r.col(rank).head(rank) += proj;
            v.noalias() -= q.leftCols(rank) * proj;
        }
        const double len = v.norm();
        if (!(len > 1e-10 * original)) {
            r.col(rank).head(rank).setZero();
            out.warnings.push_back("omp: atom " + std::to_string(best) + " is linearly dependent on the active set; skipped");
            continue;
        }
        r(rank, rank) = len;
        q.col(rank) = v / len;
        coef(rank) = q.col(rank).dot(y);
        residual -= coef(rank) * q.col(rank);
        out.support.push_back(best);
        ++rank;
        out.residual_norms.push_back(residual.norm());
    }

    if (rank > 0) {
        const Vec w = r.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solve(coef.head(rank));
        for (int i = 0; i < rank; ++i)
            out.x(out.support[i]) = w(i);
    }
    return out;
}

// psi restricted to sub-band k: the N_r x N_t angular coefficients A_k of
// that sub-band map to its N_r x N_p received block B_r A_k C.
class SubbandOperator {
public:
    SubbandOperator(ArrayShape rx, Mat pilot_transform)
        : basis_(rx), c_(std::move(pilot_transform)), c_abs2_(c_.cwiseAbs2())
    {
    }

    Eigen::Index rows() const { return static_cast<Eigen::Index>(basis_.size()) * c_.cols(); }
    Eigen::Index cols() const { return static_cast<Eigen::Index>(basis_.size()) * c_.rows(); }

    Vec forward(const Vec& a) const
    {
        detail::require_length(a.size(), cols(), "SubbandOperator::forward");
        const Mat w = basis_.apply_columns(Eigen::Map<const Mat>(a.data(), basis_.size(), c_.rows()));
        Vec z(rows());
        Eigen::Map<Mat>(z.data(), basis_.size(), c_.cols()).noalias() = w * c_;
        return z;
    }

    Vec adjoint(const Vec& z) const
    {
        detail::require_length(z.size(), rows(), "SubbandOperator::adjoint");
        const Mat w = Eigen::Map<const Mat>(z.data(), basis_.size(), c_.cols()) * c_.adjoint();
        const Mat a = basis_.apply_columns(w, true);
        return Eigen::Map<const Vec>(a.data(), a.size());
    }

    RVec abs2_forward(const RVec& v) const
    {
        detail::require_length(v.size(), cols(), "SubbandOperator::abs2_forward");
        const Eigen::RowVectorXd per_pilot =
            Eigen::Map<const Eigen::MatrixXd>(v.data(), basis_.size(), c_.rows()).colwise().sum() * c_abs2_ /
            static_cast<double>(basis_.size());
        RVec out(rows());
        Eigen::Map<Eigen::MatrixXd>(out.data(), basis_.size(), c_.cols()).rowwise() = per_pilot;
        return out;
    }

    RVec abs2_adjoint(const RVec& v) const
    {
        detail::require_length(v.size(), rows(), "SubbandOperator::abs2_adjoint");
        const Eigen::VectorXd sums =
            Eigen::Map<const Eigen::MatrixXd>(v.data(), basis_.size(), c_.cols()).colwise().sum().transpose();
        const Eigen::RowVectorXd per_tx = (c_abs2_ * sums).transpose() / static_cast<double>(basis_.size());
        RVec out(cols());
        Eigen::Map<Eigen::MatrixXd>(out.data(), basis_.size(), c_.rows()).rowwise() = per_tx;
        return out;
    }

private:
    UpaBasis basis_;
    Mat c_;
    Eigen::MatrixXd c_abs2_;
};

// Angular coefficients of sub-band k, vec(A_k) with A_k = sum_d F(k, d) X_d.
inline Vec subband_coefficients(const Vec& x, const ModelDims& dims, int k)
{
    const int nk = dims.subcarriers;
    const int nr = dims.n_rx();
    const int nt = dims.n_tx();
    detail::require_length(x.size(), dims.n_coefficients(), "subband_coefficients");
    if (k < 0 || k >= nk)
        throw std::out_of_range("subband_coefficients: sub-band index out of range");
    Vec f(nk);
    for (int d = 0; d < nk; ++d)
        f(d) = std::polar(1.0 / std::sqrt(static_cast<double>(nk)),
                          -2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(k) * d) % nk) / nk);
    Vec a(static_cast<Eigen::Index>(nr) * nt);
    for (int t = 0; t < nt; ++t)
        for (int r = 0; r < nr; ++r) {
            const Eigen::Index base = static_cast<Eigen::Index>(t) * nr * nk + static_cast<Eigen::Index>(r) * nk;
            a(r + static_cast<Eigen::Index>(nr) * t) = f.cwiseProduct(x.segment(base, nk)).sum();
        }
    return a;
}

// Measurements of sub-band k as vec of the N_r x N_p block (rows r * N_k + k of Z).
inline Vec subband_measurements(const Mat& z, int subcarriers, int k)
{
    if (z.rows() % subcarriers != 0 || k < 0 || k >= subcarriers)
        throw std::invalid_argument("subband_measurements: bad block shape or sub-band index");
    const Eigen::Index nr = z.rows() / subcarriers;
    Vec y(nr * z.cols());
    for (Eigen::Index p = 0; p < z.cols(); ++p)
        for (Eigen::Index r = 0; r < nr; ++r)
            y(r + nr * p) = z(r * subcarriers + k, p);
    return y;
}

// ---------------------------------------------------------------------------
// QIHT

// Keeps the K largest-magnitude entries (ties broken by lower index).
inline Vec hard_threshold(const Vec& x, int k)
{
    if (k <= 0)
        return Vec::Zero(x.size());
    if (k >= x.size())
        return x;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double ma = std::norm(x(a));
        const double mb = std::norm(x(b));
        return ma > mb || (ma == mb && a < b);
    });
    Vec out = Vec::Zero(x.size());
    for (int i = 0; i < k; ++i)
        out(idx[i]) = x(idx[i]);
    return out;
}

// Fraction of real/imaginary sign bits of Q(z) agreeing with y.
inline double sign_consistency(const Vec& y, const Vec& z)
{
    if (y.size() != z.size() || y.size() == 0)
        throw std::invalid_argument("sign_consistency: length mismatch");
    long long agree = 0;
    for (Eigen::Index m = 0; m < y.size(); ++m) {
        const cplx q = quantize_1bit(z(m));
        agree += (q.real() == y(m).real()) + (q.imag() == y(m).imag());
    }
    return static_cast<double>(agree) / (2.0 * static_cast<double>(y.size()));
}

struct QihtResult {
    Vec x;                 // unit norm, exactly K-sparse
    double consistency = 0.0;
    int best_iteration = 0;
    double step = 0.0;
};

// x <- H_K(x + step psi^H (y - Q(psi x))), started from H_K(psi^H y) / ||psi||.
template <LinearOperator Op>
QihtResult qiht(const Vec& y, const Op& a, const BaselineConfig& config)
{
    config.validate();
    detail::require_length(y.size(), a.rows(), "qiht");
    const int k = static_cast<int>(std::min<Eigen::Index>(config.sparsity, a.cols()));
    const double norm = estimate_spectral_norm(a);
    if (!(norm > 0))
        throw std::invalid_argument("qiht: operator is zero");
    QihtResult out;
    out.step = config.step ? *config.step : 1.0 / norm;

    Vec x = hard_threshold(a.adjoint(y), k) / norm;
    auto score = [&](const Vec& v) { return sign_consistency(y, a.forward(v)); };
    Vec best = x;
    double best_score = score(x);
    for (int it = 1; it <= config.max_iterations; ++it) {
        const Vec z = a.forward(x);
        Vec resid(z.size());
        for (Eigen::Index m = 0; m < z.size(); ++m)
            resid(m) = y(m) - quantize_1bit(z(m));
        x = hard_threshold(x + out.step * a.adjoint(resid), k);
        if (!x.allFinite())
            break;
        const double s = score(x);
        if (s > best_score) {
            best_score = s;
            best = x;
            out.best_iteration = it;
        }
        if (best_score == 1.0)
            break;
    }
    const double n = best.norm();
    out.x = n > 0 ? Vec(best / n) : best;
    out.consistency = best_score;
    return out;
}

// Smallest K whose top-K magnitudes carry `fraction` of the energy of x.
inline int oracle_sparsity(const Vec& x, double fraction = 0.95)
{
    std::vector<double> e(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i)
        e[i] = std::norm(x(i));
    std::sort(e.begin(), e.end(), std::greater<>());
    const double total = std::accumulate(e.begin(), e.end(), 0.0);
    if (!(total > 0))
        return 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        acc += e[i];
        if (acc >= fraction * total)
            return static_cast<int>(i + 1);
    }
    return static_cast<int>(e.size());
}

} // namespace rischest
