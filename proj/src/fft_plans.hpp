#pragma once

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace kvh::detail {

// In-place 1D plans for one line length; executed on thread-local fftw_malloc buffers.
struct FftLine {
    explicit FftLine(int n);
    ~FftLine();
    FftLine(const FftLine&) = delete;
    FftLine& operator=(const FftLine&) = delete;
    int n;
    fftw_plan fwd{}, bwd{};
};

struct FftPlans {
    FftPlans(int nq, int np) : q(nq), p(np) {}
    FftLine q, p;
    std::vector<double> kq, kp;
};

std::vector<double> angular_wavenumbers(int n, double length);

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex();

} // namespace kvh::detail
