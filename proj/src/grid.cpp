#include "kvh/grid.hpp"

#include "fft_plans.hpp"
#include "kvh/errors.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

namespace kvh {

namespace detail {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

FftLine::FftLine(int n_) : n(n_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(buf);
}

FftLine::~FftLine() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
}

std::vector<double> angular_wavenumbers(int n, double length) {
    std::vector<double> k(n);
    for (int m = 0; m < n; ++m) {
        int mm = m <= n / 2 ? m : m - n;
        if (2 * m == n) mm = 0;
        k[m] = 2 * std::numbers::pi * mm / length;
    }
    return k;
}

} // namespace detail

Grid::Grid(int nq, int np, double q_min, double q_max, double p_min, double p_max)
    : nq_(nq), np_(np), q_min_(q_min), q_max_(q_max), p_min_(p_min), p_max_(p_max) {
    if (nq < 8 || np < 8 || nq % 2 || np % 2) throw InvalidGrid("nq, np must be even and >= 8");
    if (!(q_max > q_min) || !(p_max > p_min) || !std::isfinite(q_max - q_min) || !std::isfinite(p_max - p_min))
        throw InvalidGrid("domain extents must satisfy max > min");
    auto plans = std::make_shared<detail::FftPlans>(nq, np);
    plans->kq = detail::angular_wavenumbers(nq, lq());
    plans->kp = detail::angular_wavenumbers(np, lp());
    plans_ = std::move(plans);
}

const std::vector<double>& Grid::wavenumbers(Axis a) const { return a == Axis::Q ? plans_->kq : plans_->kp; }

bool Grid::same_as(const Grid& o) const {
    return plans_ == o.plans_ || (nq_ == o.nq_ && np_ == o.np_ && q_min_ == o.q_min_ && q_max_ == o.q_max_ &&
                                  p_min_ == o.p_min_ && p_max_ == o.p_max_);
}

} // namespace kvh
