#pragma once

// Matrix-free unitary transforms for the joint angular-delay model.
//
// Index conventions (all vectorizations column-major):
//   stacked channel h = vec(H),  H is N_k N_r x N_t with row  k * N_r + r
//   coefficients    x = vec(X),  X is N_r N_k x N_t with row  r * N_k + d
//   measurements    z = vec(Z),  Z is N_r N_k x N_p with row  r * N_k + k
// where r, t run over array elements horizontal-fastest, k over sub-bands and
// d over delay bins.
//
// The dictionary maps coefficients to noiseless measurements,
//   Z = (B_r (x) F_k) X C,    C = B_t^H T,
// and the joint basis maps the channel to coefficients,
//   X = (B_r^H (x) F_k^H) H~ B_t,
// where H~ is H with rows regrouped receiver-major. B = F_v (x) F_h is the
// unitary 2-D DFT of a planar array and F_n the unitary n-point DFT, so the
// two maps compose to the physical received block H[f_k] T.

#include "rischest/config.hpp"
#include "rischest/fft.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rischest {

using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Mat = Eigen::MatrixXcd;

template <class Op>
concept LinearOperator = requires(const Op& a, const Vec& v) {
    { a.rows() } -> std::convertible_to<Eigen::Index>;
    { a.cols() } -> std::convertible_to<Eigen::Index>;
    { a.forward(v) } -> std::convertible_to<Vec>;
    { a.adjoint(v) } -> std::convertible_to<Vec>;
};

// Operators that can also apply the elementwise squared magnitude |A|^2 and
// its transpose, which message passing needs for variance propagation.
template <class Op>
concept MagnitudeOperator = LinearOperator<Op> && requires(const Op& a, const RVec& v) {
    { a.abs2_forward(v) } -> std::convertible_to<RVec>;
    { a.abs2_adjoint(v) } -> std::convertible_to<RVec>;
};

namespace detail {

inline void require_length(Eigen::Index got, Eigen::Index want, const char* who)
{
    if (got != want)
        throw std::invalid_argument(std::string(who) + ": expected length " + std::to_string(want) +
                                    ", got " + std::to_string(got));
}

} // namespace detail

class DftBasis {
public:
    explicit DftBasis(int n)
        : n_(n), fwd_({n}, {0}, DftSign::forward), inv_({n}, {0}, DftSign::inverse)
    {
    }

    int size() const { return n_; }

    Vec forward(const Vec& v) const { return run(v, fwd_); }
    Vec adjoint(const Vec& v) const { return run(v, inv_); }

    // Explicit unitary DFT matrix, entry (m, n) = exp(-2 pi i m n / N) / sqrt(N).
    static Mat matrix(int n)
    {
        Mat d(n, n);
        const double s = 1.0 / std::sqrt(static_cast<double>(n));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                d(r, c) = std::polar(s, -2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(r) * c) % n) / n);
        return d;
    }

private:
    Vec run(const Vec& v, const AxisDft& plan) const
    {
        detail::require_length(v.size(), n_, "DftBasis");
        Vec out = v;
        plan.apply({out.data(), static_cast<std::size_t>(out.size())});
        return out;
    }

    int n_;
    AxisDft fwd_;
    AxisDft inv_;
};

// B = F_v (x) F_h for a planar array.
class UpaBasis {
public:
    explicit UpaBasis(ArrayShape shape)
        : shape_(shape),
          fwd_({shape.horizontal, shape.vertical}, {0, 1}, DftSign::forward),
          inv_({shape.horizontal, shape.vertical}, {0, 1}, DftSign::inverse)
    {
    }

    ArrayShape shape() const { return shape_; }
    int size() const { return shape_.size(); }

    Vec apply(const Vec& v, bool adjoint = false) const
    {
        detail::require_length(v.size(), shape_.size(), "UpaBasis");
        Vec out = v;
        (adjoint ? inv_ : fwd_).apply({out.data(), static_cast<std::size_t>(out.size())});
        return out;
    }

    // Applies to every column of an (elements x m) matrix.
    Mat apply_columns(const Mat& m, bool adjoint = false) const
    {
        if (m.rows() != shape_.size())
            throw std::invalid_argument("UpaBasis: row count does not match the array");
        Mat out = m;
        AxisDft plan({shape_.horizontal, shape_.vertical, static_cast<int>(m.cols())}, {0, 1},
                     adjoint ? DftSign::inverse : DftSign::forward);
        plan.apply({out.data(), static_cast<std::size_t>(out.size())});
        return out;
    }

    static Mat matrix(ArrayShape s)
    {
        return Eigen::kroneckerProduct(DftBasis::matrix(s.vertical), DftBasis::matrix(s.horizontal));
    }

private:
    ArrayShape shape_;
    AxisDft fwd_;
    AxisDft inv_;
};

// Model dimensions shared by the dictionary and the joint basis.
struct ModelDims {
    ArrayShape rx;
    ArrayShape tx;
    int subcarriers = 1;
    int pilots = 1;

    static ModelDims from(const SystemConfig& c) { return {c.rx, c.tx, c.subcarriers, c.pilots}; }

    int n_rx() const { return rx.size(); }
    int n_tx() const { return tx.size(); }
    Eigen::Index n_coefficients() const { return static_cast<Eigen::Index>(subcarriers) * n_rx() * n_tx(); }
    Eigen::Index n_measurements() const { return static_cast<Eigen::Index>(subcarriers) * n_rx() * pilots; }
};

// The sparse-recovery dictionary psi = C^T (x) (B_r (x) F_k), applied without
// ever forming it.
class Dictionary {
public:
    Dictionary(ModelDims dims, Mat pilot_transform)
        : dims_(dims),
          c_(std::move(pilot_transform)),
          synth_({dims.subcarriers, dims.rx.horizontal, dims.rx.vertical, dims.n_tx()}, {0, 1, 2},
                 DftSign::forward),
          analysis_({dims.subcarriers, dims.rx.horizontal, dims.rx.vertical, dims.n_tx()}, {0, 1, 2},
                    DftSign::inverse)
    {
        if (c_.size() == 0)
            throw std::invalid_argument("Dictionary: pilot matrix C is unset");
        if (c_.rows() != dims.n_tx() || c_.cols() != dims.pilots)
            throw std::invalid_argument("Dictionary: C must be N_t x N_p (" + std::to_string(dims.n_tx()) + " x " +
                                        std::to_string(dims.pilots) + "), got " + std::to_string(c_.rows()) +
                                        " x " + std::to_string(c_.cols()));
        c_abs2_ = c_.cwiseAbs2();
    }

    const ModelDims& dims() const { return dims_; }
    const Mat& pilot_transform() const { return c_; }
    Eigen::Index rows() const { return dims_.n_measurements(); }
    Eigen::Index cols() const { return dims_.n_coefficients(); }

    Vec forward(const Vec& x) const
    {
        detail::require_length(x.size(), cols(), "Dictionary::forward");
        const Eigen::Index block = static_cast<Eigen::Index>(dims_.subcarriers) * dims_.n_rx();
        Mat w = Eigen::Map<const Mat>(x.data(), block, dims_.n_tx());
        synth_.apply({w.data(), static_cast<std::size_t>(w.size())});
        Vec z(rows());
        Eigen::Map<Mat>(z.data(), block, dims_.pilots).noalias() = w * c_;
        return z;
    }

    Vec adjoint(const Vec& z) const
    {
        detail::require_length(z.size(), rows(), "Dictionary::adjoint");
        const Eigen::Index block = static_cast<Eigen::Index>(dims_.subcarriers) * dims_.n_rx();
        Vec x(cols());
        Eigen::Map<Mat> w(x.data(), block, dims_.n_tx());
        w.noalias() = Eigen::Map<const Mat>(z.data(), block, dims_.pilots) * c_.adjoint();
        analysis_.apply({x.data(), static_cast<std::size_t>(x.size())});
        return x;
    }

    // |psi_{mn}|^2 = |C(t, p)|^2 / (N_r N_k) for measurement m in pilot column p
    // and coefficient n in transmit column t.
    RVec abs2_forward(const RVec& v) const
    {
        detail::require_length(v.size(), cols(), "Dictionary::abs2_forward");
        const Eigen::Index block = static_cast<Eigen::Index>(dims_.subcarriers) * dims_.n_rx();
        const Eigen::RowVectorXd col_sums = Eigen::Map<const Eigen::MatrixXd>(v.data(), block, dims_.n_tx()).colwise().sum();
        const Eigen::RowVectorXd per_pilot = col_sums * c_abs2_ / static_cast<double>(block);
        RVec out(rows());
        Eigen::Map<Eigen::MatrixXd>(out.data(), block, dims_.pilots).rowwise() = per_pilot;
        return out;
    }

    RVec abs2_adjoint(const RVec& v) const
    {
        detail::require_length(v.size(), rows(), "Dictionary::abs2_adjoint");
        const Eigen::Index block = static_cast<Eigen::Index>(dims_.subcarriers) * dims_.n_rx();
        const Eigen::VectorXd col_sums = Eigen::Map<const Eigen::MatrixXd>(v.data(), block, dims_.pilots).colwise().sum().transpose();
        const Eigen::RowVectorXd per_tx = (c_abs2_ * col_sums).transpose() / static_cast<double>(block);
        RVec out(cols());
        Eigen::Map<Eigen::MatrixXd>(out.data(), block, dims_.n_tx()).rowwise() = per_tx;
        return out;
    }

    // Spectral norm of psi, equal to that of C since the DFT factor is unitary.
    double spectral_norm() const
    {
        Eigen::JacobiSVD<Mat> svd(c_);
        return svd.singularValues()(0);
    }

private:
    ModelDims dims_;
    Mat c_;
    Eigen::MatrixXd c_abs2_;
    AxisDft synth_;
    AxisDft analysis_;
};

// The joint spatial-frequency basis: h = vec(H) -> x = vec(X). Unitary.
class JointBasis {
public:
    explicit JointBasis(ModelDims dims)
        : dims_(dims),
          shape_{dims.subcarriers, dims.rx.horizontal, dims.rx.vertical, dims.tx.horizontal, dims.tx.vertical},
          rx_delay_inv_(shape_, {0, 1, 2}, DftSign::inverse),
          rx_delay_fwd_(shape_, {0, 1, 2}, DftSign::forward),
          tx_fwd_(shape_, {3, 4}, DftSign::forward),
          tx_inv_(shape_, {3, 4}, DftSign::inverse)
    {
    }

    const ModelDims& dims() const { return dims_; }
    Eigen::Index size() const { return dims_.n_coefficients(); }
    Eigen::Index rows() const { return size(); }
    Eigen::Index cols() const { return size(); }

    Vec forward(const Vec& h) const
    {
        detail::require_length(h.size(), size(), "JointBasis::forward");
        Vec x = regroup(h, true);
        rx_delay_inv_.apply({x.data(), static_cast<std::size_t>(x.size())});
        tx_fwd_.apply({x.data(), static_cast<std::size_t>(x.size())});
        return x;
    }

    Vec adjoint(const Vec& x) const
    {
        detail::require_length(x.size(), size(), "JointBasis::adjoint");
        Vec y = x;
        tx_inv_.apply({y.data(), static_cast<std::size_t>(y.size())});
        rx_delay_fwd_.apply({y.data(), static_cast<std::size_t>(y.size())});
        return regroup(y, false);
    }

private:
    // Swaps the (r, k) axis order of a N_r x N_k x N_t tensor: sub-band-major
    // stacking <-> receiver-major stacking.
    Vec regroup(const Vec& in, bool to_receiver_major) const
    {
        const int nr = dims_.n_rx();
        const int nk = dims_.subcarriers;
        const int nt = dims_.n_tx();
        Vec out(in.size());
        for (int t = 0; t < nt; ++t) {
            const Eigen::Index base = static_cast<Eigen::Index>(t) * nr * nk;
            for (int k = 0; k < nk; ++k)
                for (int r = 0; r < nr; ++r) {
                    const Eigen::Index sub_major = base + r + static_cast<Eigen::Index>(nr) * k;
                    const Eigen::Index rx_major = base + k + static_cast<Eigen::Index>(nk) * r;
                    if (to_receiver_major)
                        out(rx_major) = in(sub_major);
                    else
                        out(sub_major) = in(rx_major);
                }
        }
        return out;
    }

    ModelDims dims_;
    std::vector<int> shape_;
    AxisDft rx_delay_inv_;
    AxisDft rx_delay_fwd_;
    AxisDft tx_fwd_;
    AxisDft tx_inv_;
};

// Explicit matrix wrapped as an operator.
class DenseOperator {
public:
    explicit DenseOperator(Mat a) : a_(std::move(a)), a_abs2_(a_.cwiseAbs2()) {}

    Eigen::Index rows() const { return a_.rows(); }
    Eigen::Index cols() const { return a_.cols(); }
    const Mat& matrix() const { return a_; }

    Vec forward(const Vec& x) const
    {
        detail::require_length(x.size(), cols(), "DenseOperator::forward");
        return a_ * x;
    }
    Vec adjoint(const Vec& z) const
    {
        detail::require_length(z.size(), rows(), "DenseOperator::adjoint");
        return a_.adjoint() * z;
    }
    RVec abs2_forward(const RVec& v) const { return a_abs2_ * v; }
    RVec abs2_adjoint(const RVec& v) const { return a_abs2_.transpose() * v; }

private:
    Mat a_;
    Eigen::MatrixXd a_abs2_;
};

static_assert(MagnitudeOperator<Dictionary>);
static_assert(MagnitudeOperator<DenseOperator>);
static_assert(LinearOperator<JointBasis>);

} // namespace rischest
