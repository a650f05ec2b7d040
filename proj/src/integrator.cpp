#include "mslin/integrator.hpp"

#include <cmath>

namespace mslin {

std::size_t substep_count(double t, double s, double step) {
    const double span = std::abs(t - s);
    if (span == 0.0) return 0;
    const double raw = span / step;
    auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::max<std::size_t>(n, 1);
}

AffineRk4::AffineRk4(const LinearPart& a, double h) : a_(&a), h_(h), tabulated_(a.autonomous()) {
    const auto d = static_cast<Eigen::Index>(a.dim());
    k1_.resize(d);
    k2_.resize(d);
    k3_.resize(d);
    k4_.resize(d);
    tmp_.resize(d);
    if (!tabulated_) return;
    // The step is linear in (x, q0, qm, q1): expand it once in the coefficient matrices.
    const Matrix A = a.at(0.0);
    const Matrix I = Matrix::Identity(d, d);
    const Matrix hA = h * A;
    const Matrix hA2 = hA * hA;
    const Matrix hA3 = hA2 * hA;
    const Matrix hA4 = hA3 * hA;
    r_ = I + hA + hA2 / 2.0 + hA3 / 6.0 + hA4 / 24.0;
    // k1 = A x + q0; k2 = A(x + h/2 k1) + qm; k3 = A(x + h/2 k2) + qm; k4 = A(x + h k3) + q1
    // Contributions of q0, qm, q1 to x + h/6 (k1 + 2k2 + 2k3 + k4):
    w0_ = (h / 6.0) * (I + hA + hA2 / 2.0 + hA3 / 4.0);
    wm_ = (h / 6.0) * (4.0 * I + 2.0 * hA + hA2 / 2.0);
    w1_ = (h / 6.0) * I;
}

void AffineRk4::step(double tau, Vector& x, const Vector& q0, const Vector& qm, const Vector& q1) const {
    if (tabulated_) {
        tmp_.noalias() = r_ * x;
        tmp_.noalias() += w0_ * q0;
        tmp_.noalias() += wm_ * qm;
        tmp_.noalias() += w1_ * q1;
        x.swap(tmp_);
        return;
    }
    const double h = h_;
    const Matrix A0 = a_->at(tau);
    const Matrix Am = a_->at(tau + 0.5 * h);
    const Matrix A1 = a_->at(tau + h);
    k1_.noalias() = A0 * x;
    k1_ += q0;
    tmp_ = x + (0.5 * h) * k1_;
    k2_.noalias() = Am * tmp_;
    k2_ += qm;
    tmp_ = x + (0.5 * h) * k2_;
    k3_.noalias() = Am * tmp_;
    k3_ += qm;
    tmp_ = x + h * k3_;
    k4_.noalias() = A1 * tmp_;
    k4_ += q1;
    x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

void AffineRk4::step(double tau, Vector& x) const {
    if (tabulated_) {
        tmp_.noalias() = r_ * x;
        x.swap(tmp_);
        return;
    }
    const Vector zero = Vector::Zero(x.size());
    step(tau, x, zero, zero, zero);
}

void AffineRk4::step(double tau, Matrix& m) const {
    if (tabulated_) {
        m = r_ * m;
        return;
    }
    const double h = h_;
    const Matrix A0 = a_->at(tau);
    const Matrix Am = a_->at(tau + 0.5 * h);
    const Matrix A1 = a_->at(tau + h);
    const Matrix K1 = A0 * m;
    const Matrix K2 = Am * (m + (0.5 * h) * K1);
    const Matrix K3 = Am * (m + (0.5 * h) * K2);
    const Matrix K4 = A1 * (m + h * K3);
    m += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
}

NonlinearRk4::NonlinearRk4(const LinearPart& a, const PerturbationPart& f)
    : a_(&a), f_(&f), autonomous_(a.autonomous()) {
    if (autonomous_) a0_ = a.at(0.0);
}

void NonlinearRk4::rhs(double tau, const Vector& x, Vector& out) const {
    f_->evaluate_into(tau, x, fx_);
    if (autonomous_) out.noalias() = a0_ * x;
    else out.noalias() = a_->at(tau) * x;
    out += fx_;
}

void NonlinearRk4::step(double tau, double h, Vector& x) const {
    rhs(tau, x, k1_);
    tmp_ = x + (0.5 * h) * k1_;
    rhs(tau + 0.5 * h, tmp_, k2_);
    tmp_ = x + (0.5 * h) * k2_;
    rhs(tau + 0.5 * h, tmp_, k3_);
    tmp_ = x + h * k3_;
    rhs(tau + h, tmp_, k4_);
    x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

}  // namespace mslin
