#include "kvh/polynomial.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kvh {

int Polynomial::slot(int a, int b) {
    if (a < 0 || b < 0 || a + b > max_degree) throw std::out_of_range("monomial degree exceeds 4");
    const int d = a + b;
    return d * (d + 1) / 2 + (d - a);
}

Polynomial Polynomial::from_list(const std::vector<double>& coeffs) {
    if (coeffs.size() > n_terms) throw std::invalid_argument("at most 15 polynomial coefficients");
    Polynomial out;
    for (std::size_t k = 0; k < coeffs.size(); ++k) out.c_[k] = coeffs[k];
    return out;
}

Polynomial Polynomial::constant(double c) {
    Polynomial out;
    out.c_[0] = c;
    return out;
}

Polynomial Polynomial::monomial(int a, int b, double c) {
    Polynomial out;
    out.set(a, b, c);
    return out;
}

Polynomial Polynomial::harmonic(double omega) {
    Polynomial out;
    out.set(2, 0, 0.5 * omega * omega);
    out.set(0, 2, 0.5);
    return out;
}

double Polynomial::operator()(double q, double p) const {
    double qa[max_degree + 1], pb[max_degree + 1];
    qa[0] = pb[0] = 1.0;
    for (int k = 1; k <= max_degree; ++k) {
        qa[k] = qa[k - 1] * q;
        pb[k] = pb[k - 1] * p;
    }
    double s = 0;
    for (int d = 0; d <= max_degree; ++d)
        for (int a = d; a >= 0; --a) {
            double c = c_[slot(a, d - a)];
            if (c != 0.0) s += c * qa[a] * pb[d - a];
        }
    return s;
}

Polynomial Polynomial::derivative(Axis axis) const {
    Polynomial out;
    for (int d = 1; d <= max_degree; ++d)
        for (int a = d; a >= 0; --a) {
            const int b = d - a;
            double c = c_[slot(a, b)];
            if (c == 0.0) continue;
            if (axis == Axis::Q && a > 0) out.c_[slot(a - 1, b)] += a * c;
            if (axis == Axis::P && b > 0) out.c_[slot(a, b - 1)] += b * c;
        }
    return out;
}

bool Polynomial::is_zero() const {
    for (double c : c_)
        if (c != 0.0) return false;
    return true;
}

bool Polynomial::is_constant() const {
    for (int k = 1; k < n_terms; ++k)
        if (c_[k] != 0.0) return false;
    return true;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    for (int k = 0; k < n_terms; ++k) c_[k] += o.c_[k];
    return *this;
}

Polynomial& Polynomial::operator*=(double s) {
    for (auto& c : c_) c *= s;
    return *this;
}

std::string Polynomial::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (int d = 0; d <= max_degree; ++d)
        for (int a = d; a >= 0; --a) {
            double c = c_[slot(a, d - a)];
            if (c == 0.0) continue;
            if (!first) os << " + ";
            first = false;
            os << c;
            if (a) os << "*q^" << a;
            if (d - a) os << "*p^" << d - a;
        }
    return first ? "0" : os.str();
}

} // namespace kvh
