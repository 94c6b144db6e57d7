#pragma once

#include <stdexcept>
#include <string>

namespace rischest {

inline constexpr double speed_of_light = 299792458.0;

// Uniform planar array extents. Elements are indexed horizontal-fastest:
// element (h, v) sits at h + horizontal * v.
struct ArrayShape {
    int horizontal = 1;
    int vertical = 1;

    int size() const { return horizontal * vertical; }
    bool operator==(const ArrayShape&) const = default;
};

struct SystemConfig {
    ArrayShape rx{16, 16};  // RIS
    ArrayShape tx{2, 4};    // UE
    int subcarriers = 16;   // sub-bands carrying one pilot each
    double subcarrier_spacing_hz = 2.88e6;
    double carrier_hz = 28e9;
    int pilots = 16;
    double sampling_ratio = 0.08;
    double snr_db = 20.0;
    int clusters = 4;
    int subpaths = 5;
    double angular_spread_deg = 7.5;
    double element_spacing_wavelengths = 0.5;

    int n_rx() const { return rx.size(); }
    int n_tx() const { return tx.size(); }
    int n_paths() const { return clusters * subpaths; }
    double wavelength() const { return speed_of_light / carrier_hz; }

    // Coefficient count N_k * N_r * N_t.
    int n_coefficients() const { return subcarriers * n_rx() * n_tx(); }
    // Measurement count N_k * N_r * N_p.
    int n_measurements() const { return subcarriers * n_rx() * pilots; }
    // Sampled receiver rows per pilot symbol.
    int sampled_rows() const
    {
        const int k = static_cast<int>(sampling_ratio * n_rx() + 0.5);
        return k < 1 ? 1 : k;
    }

    void validate() const
    {
        auto fail = [](const std::string& what) {
            throw std::invalid_argument("SystemConfig: " + what);
        };
        if (rx.horizontal < 1 || rx.vertical < 1 || tx.horizontal < 1 || tx.vertical < 1)
            fail("array extents must be positive");
        if (subcarriers < 1)
            fail("subcarriers must be positive");
        if (pilots < 1)
            fail("pilots must be positive");
        if (!(subcarrier_spacing_hz > 0) || !(carrier_hz > 0))
            fail("frequencies must be positive");
        if (!(sampling_ratio > 0) || sampling_ratio > 1)
            fail("sampling_ratio must lie in (0, 1]");
        if (clusters < 1 || subpaths < 1)
            fail("cluster and subpath counts must be positive");
        if (!(angular_spread_deg >= 0))
            fail("angular spread must be non-negative");
        if (!(element_spacing_wavelengths > 0))
            fail("element spacing must be positive");
    }

    // 16x16 RIS, 2x4 UE, 16 sub-bands, 16 pilots.
    static SystemConfig desk_scale() { return {}; }

    // 32x32 RIS, 2x8 UE, 64 sub-bands.
    static SystemConfig paper_scale()
    {
        SystemConfig c;
        c.rx = {32, 32};
        c.tx = {2, 8};
        c.subcarriers = 64;
        c.pilots = 16;
        return c;
    }
};

} // namespace rischest
