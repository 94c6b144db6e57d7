#pragma once

// Clustered wideband far-field channel between a planar-array UE and the RIS.

#include "rischest/config.hpp"
#include "rischest/rng.hpp"
#include "rischest/transform.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rischest {

struct ArrayGeometry {
    int horizontal = 1;
    int vertical = 1;
    double spacing_h_m = 0.0;
    double spacing_v_m = 0.0;
    double wavelength_m = 1.0;

    int size() const { return horizontal * vertical; }

    static ArrayGeometry from(ArrayShape shape, const SystemConfig& c)
    {
        const double lambda = c.wavelength();
        const double d = c.element_spacing_wavelengths * lambda;
        return {shape.horizontal, shape.vertical, d, d, lambda};
    }
};

struct PathParams {
    cplx gain{0.0, 0.0};
    double delay_s = 0.0;
    double arrival_azimuth = 0.0;
    double arrival_zenith = std::numbers::pi / 2;
    double departure_azimuth = 0.0;
    double departure_zenith = std::numbers::pi / 2;
};

struct ChannelRealization {
    std::vector<std::vector<PathParams>> clusters;
    ArrayGeometry rx;
    ArrayGeometry tx;

    int path_count() const
    {
        int n = 0;
        for (const auto& c : clusters)
            n += static_cast<int>(c.size());
        return n;
    }
};

// Steering vector of a planar array in the YZ plane, horizontal-fastest:
// entry (h, v) = exp(j 2 pi (h D_h sin(zen) sin(az) + v D_v cos(zen)) / lambda).
inline Vec array_response(double azimuth, double zenith, const ArrayGeometry& g)
{
    const double kh = 2.0 * std::numbers::pi * g.spacing_h_m * std::sin(zenith) * std::sin(azimuth) / g.wavelength_m;
    const double kv = 2.0 * std::numbers::pi * g.spacing_v_m * std::cos(zenith) / g.wavelength_m;
    Vec a(g.size());
    for (int v = 0; v < g.vertical; ++v)
        for (int h = 0; h < g.horizontal; ++h)
            a(h + g.horizontal * v) = std::polar(1.0, kh * h + kv * v);
    return a;
}

namespace detail {

inline double wrap_azimuth(double a)
{
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a < 0)
        a += two_pi;
    return a - std::numbers::pi;
}

// Reflect back into [0, pi].
inline double fold_zenith(double z)
{
    if (z < 0)
        z = -z;
    if (z > std::numbers::pi)
        z = 2.0 * std::numbers::pi - z;
    return std::clamp(z, 0.0, std::numbers::pi);
}

} // namespace detail

// Cluster centres uniform over azimuth [-pi, pi) and zenith [0, pi]; subpaths
// offset uniformly within +-spread. Cluster delays are uniform in
// [0, (N_k - 1) / (N_k df)] with per-subpath jitter below one delay bin.
// Gains are CN(0, 1 / N_path), so E ||H||_F^2 = N_r N_t N_k.
inline ChannelRealization draw_channel(const SystemConfig& config, Rng& rng)
{
    config.validate();
    ChannelRealization ch;
    ch.rx = ArrayGeometry::from(config.rx, config);
    ch.tx = ArrayGeometry::from(config.tx, config);

    const double spread = config.angular_spread_deg * std::numbers::pi / 180.0;
    const double bin = 1.0 / (config.subcarriers * config.subcarrier_spacing_hz);
    const double max_cluster_delay = (config.subcarriers - 1) * bin;
    const double gain_var = 1.0 / config.n_paths();

    ch.clusters.resize(config.clusters);
    for (auto& cluster : ch.clusters) {
        const double aoa_az = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double aoa_zen = rng.uniform(0.0, std::numbers::pi);
        const double aod_az = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double aod_zen = rng.uniform(0.0, std::numbers::pi);
        const double tau = rng.uniform(0.0, max_cluster_delay);
        cluster.resize(config.subpaths);
        for (auto& p : cluster) {
            p.arrival_azimuth = detail::wrap_azimuth(aoa_az + rng.uniform(-spread, spread));
            p.arrival_zenith = detail::fold_zenith(aoa_zen + rng.uniform(-spread, spread));
            p.departure_azimuth = detail::wrap_azimuth(aod_az + rng.uniform(-spread, spread));
            p.departure_zenith = detail::fold_zenith(aod_zen + rng.uniform(-spread, spread));
            p.delay_s = tau + rng.uniform(0.0, bin);
            p.gain = rng.complex_normal(gain_var);
        }
    }
    return ch;
}

namespace detail {

// Angles whose steering vector is exactly DFT column `bin` of each axis,
// for half-wavelength-style spacing expressed through the geometry.
// Returns false if the bin pair lies outside the visible region.
inline bool grid_angles(const ArrayGeometry& g, int bin_h, int bin_v, double& azimuth, double& zenith)
{
    // Phase step per element is 2 pi bin / N.
    const double u_h = static_cast<double>(bin_h) / g.horizontal * g.wavelength_m / g.spacing_h_m;
    const double u_v = static_cast<double>(bin_v) / g.vertical * g.wavelength_m / g.spacing_v_m;
    if (u_v < -1.0 || u_v > 1.0)
        return false;
    zenith = std::acos(u_v);
    const double s = std::sin(zenith);
    if (std::abs(u_h) > s + 1e-15)
        return false;
    azimuth = s > 0 ? std::asin(std::clamp(u_h / s, -1.0, 1.0)) : 0.0;
    return true;
}

inline void draw_grid_direction(const ArrayGeometry& g, Rng& rng, double& azimuth, double& zenith)
{
    for (;;) {
        const int bh = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.horizontal))) - g.horizontal / 2;
        const int bv = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.vertical))) - g.vertical / 2;
        if (grid_angles(g, bh, bv, azimuth, zenith))
            return;
    }
}

} // namespace detail

// Channel whose every path sits exactly on the angular and delay DFT grids,
// so its coefficient vector has at most N_path nonzeros.
inline ChannelRealization draw_on_grid_channel(const SystemConfig& config, Rng& rng)
{
    config.validate();
    ChannelRealization ch;
    ch.rx = ArrayGeometry::from(config.rx, config);
    ch.tx = ArrayGeometry::from(config.tx, config);
    const double bin = 1.0 / (config.subcarriers * config.subcarrier_spacing_hz);
    const double gain_var = 1.0 / config.n_paths();
    ch.clusters.resize(config.clusters);
    for (auto& cluster : ch.clusters) {
        cluster.resize(config.subpaths);
        for (auto& p : cluster) {
            detail::draw_grid_direction(ch.rx, rng, p.arrival_azimuth, p.arrival_zenith);
            detail::draw_grid_direction(ch.tx, rng, p.departure_azimuth, p.departure_zenith);
            p.delay_s = static_cast<double>(rng.below(static_cast<std::uint64_t>(config.subcarriers))) * bin;
            p.gain = rng.complex_normal(gain_var);
        }
    }
    return ch;
}

// H[f] = sum alpha a_r a_t^H exp(-j 2 pi f tau), f measured from the carrier.
inline Mat channel_at(const ChannelRealization& ch, double frequency_hz)
{
    Mat h = Mat::Zero(ch.rx.size(), ch.tx.size());
    for (const auto& cluster : ch.clusters)
        for (const auto& p : cluster) {
            const Vec ar = array_response(p.arrival_azimuth, p.arrival_zenith, ch.rx);
            const Vec at = array_response(p.departure_azimuth, p.departure_zenith, ch.tx);
            const cplx w = p.gain * std::polar(1.0, -2.0 * std::numbers::pi * frequency_hz * p.delay_s);
            h.noalias() += w * ar * at.adjoint();
        }
    return h;
}

struct StackedChannel {
    Mat h;  // N_k N_r x N_t, sub-band blocks stacked vertically
    Vec x;  // joint-basis coefficients
};

inline StackedChannel stack_channel(const ChannelRealization& ch, const SystemConfig& config, const JointBasis& basis)
{
    const int nr = ch.rx.size();
    StackedChannel out;
    out.h.resize(static_cast<Eigen::Index>(config.subcarriers) * nr, ch.tx.size());
    for (int k = 0; k < config.subcarriers; ++k)
        out.h.middleRows(static_cast<Eigen::Index>(k) * nr, nr) = channel_at(ch, k * config.subcarrier_spacing_hz);
    out.x = basis.forward(Eigen::Map<const Vec>(out.h.data(), out.h.size()));
    return out;
}

inline StackedChannel stack_channel(const ChannelRealization& ch, const SystemConfig& config)
{
    return stack_channel(ch, config, JointBasis(ModelDims::from(config)));
}

// JSON record: angles in degrees, delays in ns, gains as [re, im].
inline nlohmann::json to_json(const ChannelRealization& ch)
{
    constexpr double deg = 180.0 / std::numbers::pi;
    auto geometry = [](const ArrayGeometry& g) {
        return nlohmann::json{{"horizontal", g.horizontal},
                              {"vertical", g.vertical},
                              {"spacing_h_m", g.spacing_h_m},
                              {"spacing_v_m", g.spacing_v_m},
                              {"wavelength_m", g.wavelength_m}};
    };
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& cluster : ch.clusters) {
        nlohmann::json paths = nlohmann::json::array();
        for (const auto& p : cluster)
            paths.push_back({{"gain", {p.gain.real(), p.gain.imag()}},
                             {"delay_ns", p.delay_s * 1e9},
                             {"arrival_azimuth_deg", p.arrival_azimuth * deg},
                             {"arrival_zenith_deg", p.arrival_zenith * deg},
                             {"departure_azimuth_deg", p.departure_azimuth * deg},
                             {"departure_zenith_deg", p.departure_zenith * deg}});
        clusters.push_back(std::move(paths));
    }
    return {{"rx", geometry(ch.rx)}, {"tx", geometry(ch.tx)}, {"clusters", std::move(clusters)}};
}

inline ChannelRealization channel_from_json(const nlohmann::json& j)
{
    constexpr double rad = std::numbers::pi / 180.0;
    auto geometry = [](const nlohmann::json& g) {
        return ArrayGeometry{g.at("horizontal").get<int>(), g.at("vertical").get<int>(),
                             g.at("spacing_h_m").get<double>(), g.at("spacing_v_m").get<double>(),
                             g.at("wavelength_m").get<double>()};
    };
    ChannelRealization ch;
    ch.rx = geometry(j.at("rx"));
    ch.tx = geometry(j.at("tx"));
    for (const auto& cj : j.at("clusters")) {
        std::vector<PathParams> cluster;
        for (const auto& pj : cj) {
            PathParams p;
            const auto& g = pj.at("gain");
            p.gain = {g.at(0).get<double>(), g.at(1).get<double>()};
            p.delay_s = pj.at("delay_ns").get<double>() * 1e-9;
            p.arrival_azimuth = pj.at("arrival_azimuth_deg").get<double>() * rad;
            p.arrival_zenith = pj.at("arrival_zenith_deg").get<double>() * rad;
            p.departure_azimuth = pj.at("departure_azimuth_deg").get<double>() * rad;
            p.departure_zenith = pj.at("departure_zenith_deg").get<double>() * rad;
            cluster.push_back(p);
        }
        ch.clusters.push_back(std::move(cluster));
    }
    return ch;
}

} // namespace rischest
