#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace kvh {

using cplx = std::complex<double>;

enum class Axis { Q, P };

namespace detail {
struct FftPlans;
}

// Periodic box [q_min,q_max) x [p_min,p_max), row-major storage with q as the slow index.
class Grid {
public:
    Grid(int nq, int np, double q_min, double q_max, double p_min, double p_max);
    Grid(int n, double extent) : Grid(n, n, -extent, extent, -extent, extent) {}

    int nq() const { return nq_; }
    int np() const { return np_; }
    std::size_t size() const { return static_cast<std::size_t>(nq_) * np_; }
    int n(Axis a) const { return a == Axis::Q ? nq_ : np_; }

    double q_min() const { return q_min_; }
    double q_max() const { return q_max_; }
    double p_min() const { return p_min_; }
    double p_max() const { return p_max_; }
    double lq() const { return q_max_ - q_min_; }
    double lp() const { return p_max_ - p_min_; }
    double length(Axis a) const { return a == Axis::Q ? lq() : lp(); }
    double dq() const { return lq() / nq_; }
    double dp() const { return lp() / np_; }
    double cell_area() const { return dq() * dp(); }

    double q(int i) const { return q_min_ + i * dq(); }
    double p(int j) const { return p_min_ + j * dp(); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * np_ + j; }

    // Angular wavenumbers in FFTW order; the Nyquist entry is stored as zero.
    const std::vector<double>& wavenumbers(Axis a) const;

    const detail::FftPlans& fft() const { return *plans_; }

    bool same_as(const Grid& o) const;
    bool square() const { return nq_ == np_ && q_min_ == p_min_ && q_max_ == p_max_; }

private:
    int nq_, np_;
    double q_min_, q_max_, p_min_, p_max_;
    std::shared_ptr<const detail::FftPlans> plans_;
};

} // namespace kvh
