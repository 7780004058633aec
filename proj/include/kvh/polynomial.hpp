#pragma once

#include "kvh/grid.hpp"

#include <array>
#include <string>
#include <vector>

namespace kvh {

// Real polynomial in (q,p) of total degree <= 4. Coefficient lists use the monomial order
// 1, q, p, q^2, qp, p^2, q^3, q^2p, qp^2, p^3, q^4, q^3p, q^2p^2, qp^3, p^4.
class Polynomial {
public:
    static constexpr int max_degree = 4;
    static constexpr int n_terms = 15;

    Polynomial() { c_.fill(0.0); }
    static Polynomial from_list(const std::vector<double>& coeffs);
    static Polynomial constant(double c);
    static Polynomial monomial(int a, int b, double c = 1.0);
    static Polynomial harmonic(double omega = 1.0); // (p^2 + omega^2 q^2)/2

    static int slot(int a, int b); // position of q^a p^b in the list
    double coeff(int a, int b) const { return c_[slot(a, b)]; }
    void set(int a, int b, double v) { c_[slot(a, b)] = v; }
    const std::array<double, n_terms>& coeffs() const { return c_; }

    double operator()(double q, double p) const;
    Polynomial derivative(Axis axis) const;
    bool is_zero() const;
    bool is_constant() const;

    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator*=(double s);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

    std::string to_string() const;

private:
    std::array<double, n_terms> c_;
};

} // namespace kvh
