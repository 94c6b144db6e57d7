#pragma once

// Unitary multi-axis DFTs over column-major tensors, backed by FFTW's guru
// interface. A plan is built once per (shape, axes, sign) and executed
// in-place on caller memory through the new-array execute API, which FFTW
// documents as thread-safe.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rischest {

using cplx = std::complex<double>;

enum class DftSign : int { forward = FFTW_FORWARD, inverse = FFTW_BACKWARD };

namespace detail {

// FFTW's planner is not reentrant.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

} // namespace detail

class AxisDft {
public:
    // `shape` lists tensor extents fastest-varying first; `axes` selects the
    // dimensions to transform jointly.
    AxisDft(std::vector<int> shape, std::vector<int> axes, DftSign sign)
        : shape_(std::move(shape)), sign_(sign)
    {
        if (shape_.empty())
            throw std::invalid_argument("AxisDft: empty shape");
        std::vector<std::ptrdiff_t> stride(shape_.size());
        std::ptrdiff_t s = 1;
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (shape_[i] <= 0)
                throw std::invalid_argument("AxisDft: non-positive extent");
            stride[i] = s;
            s *= shape_[i];
        }
        total_ = s;

        std::vector<bool> selected(shape_.size(), false);
        for (int a : axes) {
            if (a < 0 || a >= static_cast<int>(shape_.size()) || selected[a])
                throw std::invalid_argument("AxisDft: bad axis " + std::to_string(a));
            selected[a] = true;
        }

        std::vector<fftw_iodim64> dims;
        std::vector<fftw_iodim64> loops;
        double transformed = 1.0;
        // FFTW wants the slowest dimension first.
        for (int i = static_cast<int>(shape_.size()) - 1; i >= 0; --i) {
            fftw_iodim64 d{shape_[i], stride[i], stride[i]};
            if (selected[i]) {
                dims.push_back(d);
                transformed *= shape_[i];
            } else {
                loops.push_back(d);
            }
        }
        scale_ = 1.0 / std::sqrt(transformed);

        std::vector<cplx> scratch(static_cast<std::size_t>(total_));
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan raw = nullptr;
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            raw = fftw_plan_guru64_dft(static_cast<int>(dims.size()), dims.data(),
                                       static_cast<int>(loops.size()), loops.data(), buf, buf,
                                       static_cast<int>(sign_), FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
        if (!raw)
            throw std::runtime_error("AxisDft: FFTW planning failed");
        plan_ = std::shared_ptr<fftw_plan_s>(raw, detail::PlanDeleter{});
    }

    std::ptrdiff_t size() const { return total_; }
    const std::vector<int>& shape() const { return shape_; }
    DftSign sign() const { return sign_; }

    void apply(std::span<cplx> data) const
    {
        if (static_cast<std::ptrdiff_t>(data.size()) != total_)
            throw std::invalid_argument("AxisDft: expected " + std::to_string(total_) +
                                        " samples, got " + std::to_string(data.size()));
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan_.get(), p, p);
        for (auto& v : data)
            v *= scale_;
    }

private:
    std::vector<int> shape_;
    DftSign sign_;
    std::ptrdiff_t total_ = 0;
    double scale_ = 1.0;
    std::shared_ptr<fftw_plan_s> plan_;
};

} // namespace rischest
