#pragma once

#include "kvh/errors.hpp"
#include "kvh/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace kvh {

template <class T>
class Field {
public:
    using value_type = T;

    explicit Field(const Grid& g, T fill = T{}) : grid_(g), v_(g.size(), fill) {}
    Field(const Grid& g, std::vector<T> values) : grid_(g), v_(std::move(values)) {
        if (v_.size() != g.size()) throw ShapeMismatch("field buffer does not match grid");
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    std::span<T> span() { return v_; }
    std::span<const T> span() const { return v_; }
    std::vector<T>& values() { return v_; }
    const std::vector<T>& values() const { return v_; }

    T& operator[](std::size_t k) { return v_[k]; }
    const T& operator[](std::size_t k) const { return v_[k]; }
    T& at(int i, int j) { return v_[grid_.index(i, j)]; }
    const T& at(int i, int j) const { return v_[grid_.index(i, j)]; }

    // Samples f(q,p) at the grid nodes.
    template <class F>
    static Field sample(const Grid& g, F&& f) {
        Field out(g);
        for (int i = 0; i < g.nq(); ++i)
            for (int j = 0; j < g.np(); ++j) out.at(i, j) = f(g.q(i), g.p(j));
        return out;
    }

    Field& operator+=(const Field& o) {
        check(o);
        for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check(o);
        for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
        return *this;
    }
    Field& operator*=(T s) {
        for (auto& x : v_) x *= s;
        return *this;
    }
    Field& operator*=(const Field& o) {
        check(o);
        for (std::size_t k = 0; k < v_.size(); ++k) v_[k] *= o.v_[k];
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, const Field& b) { return a *= b; }
    friend Field operator*(T s, Field a) { return a *= s; }
    friend Field operator*(Field a, T s) { return a *= s; }
    Field operator-() const {
        Field out = *this;
        for (auto& x : out.v_) x = -x;
        return out;
    }

    void check(const Field& o) const {
        if (o.v_.size() != v_.size() || !grid_.same_as(o.grid_))
            throw ShapeMismatch("fields live on different grids");
    }

private:
    Grid grid_;
    std::vector<T> v_;
};

using ScalarField = Field<double>;
using ComplexField = Field<cplx>;

inline ComplexField to_complex(const ScalarField& f) {
    ComplexField out(f.grid());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k];
    return out;
}
inline ScalarField real_part(const ComplexField& f) {
    ScalarField out(f.grid());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k].real();
    return out;
}
inline ScalarField imag_part(const ComplexField& f) {
    ScalarField out(f.grid());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k].imag();
    return out;
}
inline ScalarField abs2(const ComplexField& f) {
    ScalarField out(f.grid());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::norm(f[k]);
    return out;
}

template <class T>
double max_abs(const Field<T>& f) {
    double m = 0;
    for (const auto& x : f.values()) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
}

struct CovectorField {
    ScalarField q, p;
    explicit CovectorField(const Grid& g) : q(g), p(g) {}
    CovectorField(ScalarField cq, ScalarField cp) : q(std::move(cq)), p(std::move(cp)) { q.check(p); }
};

struct PhaseVectorField {
    ScalarField q, p;
    explicit PhaseVectorField(const Grid& g) : q(g), p(g) {}
    PhaseVectorField(ScalarField cq, ScalarField cp) : q(std::move(cq)), p(std::move(cp)) { q.check(p); }
};

// n complex components per grid point, stored component-major.
class AmplitudeField {
public:
    AmplitudeField(const Grid& g, int n) : grid_(g), n_(n), v_(g.size() * n) {
        if (n < 1) throw WrongQuantumDimension("n must be >= 1");
    }
    const Grid& grid() const { return grid_; }
    int n() const { return n_; }
    std::size_t npts() const { return grid_.size(); }
    cplx* comp(int a) { return v_.data() + a * npts(); }
    const cplx* comp(int a) const { return v_.data() + a * npts(); }
    ComplexField component(int a) const {
        return ComplexField(grid_, std::vector<cplx>(comp(a), comp(a) + npts()));
    }
    void set_component(int a, const ComplexField& f) { std::copy(f.data(), f.data() + npts(), comp(a)); }
    std::vector<cplx>& raw() { return v_; }
    const std::vector<cplx>& raw() const { return v_; }

    AmplitudeField& operator+=(const AmplitudeField& o) {
        check(o);
        for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
        return *this;
    }
    AmplitudeField& operator*=(cplx s) {
        for (auto& x : v_) x *= s;
        return *this;
    }
    void check(const AmplitudeField& o) const {
        if (o.n_ != n_ || !grid_.same_as(o.grid_)) throw ShapeMismatch("amplitude fields differ in shape");
    }

private:
    Grid grid_;
    int n_;
    std::vector<cplx> v_;
};

// n x n complex matrix per grid point, stored as n*n planes (entry (a,b) is plane a*n+b).
class MatrixField {
public:
    MatrixField(const Grid& g, int n) : grid_(g), n_(n), v_(g.size() * n * n) {
        if (n < 1) throw WrongQuantumDimension("n must be >= 1");
    }
    const Grid& grid() const { return grid_; }
    int n() const { return n_; }
    std::size_t npts() const { return grid_.size(); }
    cplx* entry(int a, int b) { return v_.data() + (a * n_ + b) * npts(); }
    const cplx* entry(int a, int b) const { return v_.data() + (a * n_ + b) * npts(); }
    cplx& operator()(int a, int b, std::size_t k) { return entry(a, b)[k]; }
    const cplx& operator()(int a, int b, std::size_t k) const { return entry(a, b)[k]; }
    std::vector<cplx>& raw() { return v_; }
    const std::vector<cplx>& raw() const { return v_; }

    MatrixField& operator+=(const MatrixField& o) {
        check(o);
        for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
        return *this;
    }
    MatrixField& operator-=(const MatrixField& o) {
        check(o);
        for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
        return *this;
    }
    MatrixField& operator*=(cplx s) {
        for (auto& x : v_) x *= s;
        return *this;
    }
    friend MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
    friend MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
    friend MatrixField operator*(cplx s, MatrixField a) { return a *= s; }

    ScalarField trace() const {
        ScalarField t(grid_);
        for (int a = 0; a < n_; ++a)
            for (std::size_t k = 0; k < npts(); ++k) t[k] += entry(a, a)[k].real();
        return t;
    }
    double hermiticity_defect() const {
        double m = 0;
        for (int a = 0; a < n_; ++a)
            for (int b = a; b < n_; ++b)
                for (std::size_t k = 0; k < npts(); ++k)
                    m = std::max(m, std::abs(entry(a, b)[k] - std::conj(entry(b, a)[k])));
        return m;
    }
    void check(const MatrixField& o) const {
        if (o.n_ != n_ || !grid_.same_as(o.grid_)) throw ShapeMismatch("matrix fields differ in shape");
    }

private:
    Grid grid_;
    int n_;
    std::vector<cplx> v_;
};

inline double max_abs(const MatrixField& f) {
    double m = 0;
    for (const auto& x : f.raw()) m = std::max(m, std::abs(x));
    return m;
}

} // namespace kvh
