#pragma once

// Pilots, noise, 1-bit quantization and the time-varying spatial sampling
// mask of the semi-passive RIS.

#include "rischest/rng.hpp"
#include "rischest/transform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rischest {

// ---------------------------------------------------------------------------
// Pilots

// zc[n] = exp(-j pi u n (n + 1) / N) for odd N.
inline Vec zadoff_chu(int length, int root)
{
    if (length < 1 || length % 2 == 0)
        throw std::invalid_argument("zadoff_chu: length must be odd and positive");
    if (std::gcd(root, length) != 1)
        throw std::invalid_argument("zadoff_chu: root " + std::to_string(root) + " is not coprime to length " +
                                    std::to_string(length));
    Vec s(length);
    for (long long n = 0; n < length; ++n) {
        // Reduce the quadratic phase exactly before converting to radians.
        const long long q = (static_cast<long long>(root) * n * (n + 1)) % (2LL * length);
        s(n) = std::polar(1.0, -std::numbers::pi * static_cast<double>(q) / length);
    }
    return s;
}

// Smallest odd length covering both the transmit array and the pilot count.
inline int default_zc_length(int n_tx, int n_pilots)
{
    int n = std::max(n_tx, n_pilots);
    return n % 2 == 0 ? n + 1 : n;
}

struct PilotBlock {
    Mat t;  // N_t x N_p transmitted symbols
    Mat c;  // B_t^H T, the pilot block seen in the transmit angular domain
};

// Column p of T is the length-N_zc sequence cyclically shifted by p and
// truncated to the N_t transmit elements.
inline PilotBlock zc_pilot_block(int zc_length, int root, ArrayShape tx, int pilots)
{
    if (zc_length < tx.size())
        throw std::invalid_argument("zc_pilot_block: ZC length shorter than the transmit array");
    if (pilots > zc_length)
        throw std::invalid_argument("zc_pilot_block: more pilots than distinct cyclic shifts");
    const Vec zc = zadoff_chu(zc_length, root);
    PilotBlock b;
    b.t.resize(tx.size(), pilots);
    for (int p = 0; p < pilots; ++p)
        for (int t = 0; t < tx.size(); ++t)
            b.t(t, p) = zc((t + p) % zc_length);
    b.c = UpaBasis(tx).apply_columns(b.t, true);
    return b;
}

inline PilotBlock zc_pilot_block(const SystemConfig& c, int root = 1)
{
    return zc_pilot_block(default_zc_length(c.n_tx(), c.pilots), root, c.tx, c.pilots);
}

// ---------------------------------------------------------------------------
// Received block

// Z = unvec(psi x), N_r N_k x N_p.
template <LinearOperator Op>
Mat noiseless_block(const Vec& x, const Op& dictionary, int pilots)
{
    const Vec z = dictionary.forward(x);
    return Eigen::Map<const Mat>(z.data(), z.size() / pilots, pilots);
}

inline Mat noiseless_block(const Vec& x, const Dictionary& dictionary)
{
    return noiseless_block(x, dictionary, dictionary.dims().pilots);
}

struct NoisyBlock {
    Mat values;
    double noise_variance = 0.0;
};

// Per-entry noise variance ||Z||_F^2 / (count 10^(snr/10)). An infinite SNR
// leaves Z untouched.
inline NoisyBlock add_awgn(const Mat& z, double snr_db, Rng& rng)
{
    if (std::isinf(snr_db) && snr_db > 0)
        return {z, 0.0};
    const double energy = z.squaredNorm();
    if (!(energy > 0))
        throw std::invalid_argument("add_awgn: signal block is zero");
    const double var = energy / (static_cast<double>(z.size()) * std::pow(10.0, snr_db / 10.0));
    NoisyBlock out{z, var};
    for (Eigen::Index i = 0; i < out.values.size(); ++i)
        out.values.data()[i] += rng.complex_normal(var);
    return out;
}

// (sign(Re m) + j sign(Im m)) / sqrt(2) with sign(0) = +1.
inline cplx quantize_1bit(cplx m)
{
    constexpr double a = std::numbers::sqrt2 / 2.0;
    return {m.real() >= 0 ? a : -a, m.imag() >= 0 ? a : -a};
}

template <class Derived>
auto quantize_1bit(const Eigen::MatrixBase<Derived>& m)
{
    return m.unaryExpr([](cplx v) { return quantize_1bit(v); }).eval();
}

// ---------------------------------------------------------------------------
// Sampling

// Omega: which RIS element feeds a receiver unit during each pilot symbol.
class SamplingMask {
public:
    SamplingMask() = default;
    SamplingMask(int n_rx, int pilots) : rows_(n_rx), cols_(pilots), bits_(static_cast<std::size_t>(n_rx) * pilots, 0) {}

    // Independent draw per pilot symbol with exactly round(ratio * N_r) ones.
    static SamplingMask random(int n_rx, int pilots, double ratio, Rng& rng)
    {
        if (!(ratio > 0) || ratio > 1)
            throw std::invalid_argument("SamplingMask: ratio must lie in (0, 1]");
        SamplingMask m(n_rx, pilots);
        const int per_column = std::max(1, static_cast<int>(std::lround(ratio * n_rx)));
        for (int p = 0; p < pilots; ++p)
            for (int r : rng.choose(n_rx, per_column))
                m.set(r, p, true);
        return m;
    }

    static SamplingMask full(int n_rx, int pilots)
    {
        SamplingMask m(n_rx, pilots);
        std::fill(m.bits_.begin(), m.bits_.end(), 1);
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool operator()(int r, int p) const { return bits_[index(r, p)] != 0; }
    void set(int r, int p, bool on) { bits_[index(r, p)] = on ? 1 : 0; }

    int column_count(int p) const
    {
        int n = 0;
        for (int r = 0; r < rows_; ++r)
            n += (*this)(r, p);
        return n;
    }
    long long count() const { return std::accumulate(bits_.begin(), bits_.end(), 0LL); }

    bool operator==(const SamplingMask&) const = default;

private:
    std::size_t index(int r, int p) const { return static_cast<std::size_t>(r) + static_cast<std::size_t>(rows_) * p; }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Regroups N_r N_k x N_p into the receiver matrix N_r x N_p N_k with
// column p * N_k + k.
inline Mat to_receiver_matrix(const Mat& z, int subcarriers)
{
    const Eigen::Index nk = subcarriers;
    const Eigen::Index nr = z.rows() / nk;
    Mat m(nr, z.cols() * nk);
    for (Eigen::Index p = 0; p < z.cols(); ++p)
        for (Eigen::Index r = 0; r < nr; ++r)
            for (Eigen::Index k = 0; k < nk; ++k)
                m(r, p * nk + k) = z(r * nk + k, p);
    return m;
}

inline Mat from_receiver_matrix(const Mat& m, int subcarriers)
{
    const Eigen::Index nk = subcarriers;
    const Eigen::Index np = m.cols() / nk;
    Mat z(m.rows() * nk, np);
    for (Eigen::Index p = 0; p < np; ++p)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index k = 0; k < nk; ++k)
                z(r * nk + k, p) = m(r, p * nk + k);
    return z;
}

struct Observation {
    Mat values;  // N_r x N_p N_k; zero where unobserved
    SamplingMask mask;
    int subcarriers = 1;
    double noise_variance = 0.0;
    bool quantized = true;

    int n_rx() const { return static_cast<int>(values.rows()); }
    int pilots() const { return mask.cols(); }
    bool observed(Eigen::Index r, Eigen::Index col) const
    {
        return mask(static_cast<int>(r), static_cast<int>(col / subcarriers));
    }
    long long observed_count() const { return mask.count() * subcarriers; }

    // 0/1 weights aligned with `values`.
    Eigen::MatrixXd weights() const
    {
        Eigen::MatrixXd w(values.rows(), values.cols());
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            for (Eigen::Index r = 0; r < values.rows(); ++r)
                w(r, c) = observed(r, c) ? 1.0 : 0.0;
        return w;
    }
};

// Keeps entry (r, k, p) iff Omega(r, p) = 1, the same element for all
// sub-bands of one pilot symbol.
inline Observation sample(const Mat& block, const SamplingMask& mask, int subcarriers, double noise_variance = 0.0,
                          bool quantized = true)
{
    if (block.rows() != static_cast<Eigen::Index>(mask.rows()) * subcarriers || block.cols() != mask.cols())
        throw std::invalid_argument("sample: block is " + std::to_string(block.rows()) + " x " +
                                    std::to_string(block.cols()) + ", mask expects " +
                                    std::to_string(mask.rows() * subcarriers) + " x " + std::to_string(mask.cols()));
    Observation o;
    o.values = to_receiver_matrix(block, subcarriers);
    o.mask = mask;
    o.subcarriers = subcarriers;
    o.noise_variance = noise_variance;
    o.quantized = quantized;
    for (Eigen::Index c = 0; c < o.values.cols(); ++c)
        for (Eigen::Index r = 0; r < o.values.rows(); ++r)
            if (!o.observed(r, c))
                o.values(r, c) = 0.0;
    return o;
}

// ---------------------------------------------------------------------------
// Binary record (little-endian):
//   char[8]  "RISOBS1\0"
//   u32      n_rx, subcarriers, pilots, flags (bit 0: quantized)
//   f64      noise variance
//   u8[]     mask bits, index r + n_rx * p, LSB-first, padded to a byte
//   f64[2]   (re, im) per observed sample, receiver-matrix column-major order

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::ostream& os, double d)
{
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i)
        os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint8_t get_byte(std::istream& is)
{
    const int c = is.get();
    if (c == std::char_traits<char>::eof())
        throw std::runtime_error("observation record truncated");
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t get_u32(std::istream& is)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(get_byte(is)) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(get_byte(is)) << (8 * i);
    return std::bit_cast<double>(v);
}

inline constexpr char observation_magic[8] = {'R', 'I', 'S', 'O', 'B', 'S', '1', '\0'};

} // namespace detail

inline void write_observation(std::ostream& os, const Observation& o)
{
    os.write(detail::observation_magic, 8);
    detail::put_u32(os, static_cast<std::uint32_t>(o.n_rx()));
    detail::put_u32(os, static_cast<std::uint32_t>(o.subcarriers));
    detail::put_u32(os, static_cast<std::uint32_t>(o.pilots()));
    detail::put_u32(os, o.quantized ? 1u : 0u);
    detail::put_f64(os, o.noise_variance);
    const std::size_t nbits = static_cast<std::size_t>(o.n_rx()) * o.pilots();
    std::vector<std::uint8_t> packed((nbits + 7) / 8, 0);
    for (int p = 0; p < o.pilots(); ++p)
        for (int r = 0; r < o.n_rx(); ++r)
            if (o.mask(r, p)) {
                const std::size_t i = static_cast<std::size_t>(r) + static_cast<std::size_t>(o.n_rx()) * p;
                packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
            }
    os.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    for (Eigen::Index c = 0; c < o.values.cols(); ++c)
        for (Eigen::Index r = 0; r < o.values.rows(); ++r)
            if (o.observed(r, c)) {
                detail::put_f64(os, o.values(r, c).real());
                detail::put_f64(os, o.values(r, c).imag());
            }
}

inline Observation read_observation(std::istream& is)
{
    char magic[8];
    for (char& ch : magic)
        ch = static_cast<char>(detail::get_byte(is));
    if (std::memcmp(magic, detail::observation_magic, 8) != 0)
        throw std::runtime_error("not an observation record");
    const auto n_rx = static_cast<int>(detail::get_u32(is));
    const auto nk = static_cast<int>(detail::get_u32(is));
    const auto np = static_cast<int>(detail::get_u32(is));
    const auto flags = detail::get_u32(is);
    Observation o;
    o.noise_variance = detail::get_f64(is);
    o.subcarriers = nk;
    o.quantized = (flags & 1u) != 0;
    o.mask = SamplingMask(n_rx, np);
    const std::size_t nbits = static_cast<std::size_t>(n_rx) * np;
    std::vector<std::uint8_t> packed((nbits + 7) / 8);
    for (auto& b : packed)
        b = detail::get_byte(is);
    for (int p = 0; p < np; ++p)
        for (int r = 0; r < n_rx; ++r) {
            const std::size_t i = static_cast<std::size_t>(r) + static_cast<std::size_t>(n_rx) * p;
            o.mask.set(r, p, (packed[i / 8] >> (i % 8)) & 1u);
        }
    o.values = Mat::Zero(n_rx, static_cast<Eigen::Index>(np) * nk);
    for (Eigen::Index c = 0; c < o.values.cols(); ++c)
        for (Eigen::Index r = 0; r < o.values.rows(); ++r)
            if (o.observed(r, c)) {
                const double re = detail::get_f64(is);
                const double im = detail::get_f64(is);
                o.values(r, c) = {re, im};
            }
    return o;
}

} // namespace rischest
