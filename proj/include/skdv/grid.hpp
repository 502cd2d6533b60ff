#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace skdv {

using cplx = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<cplx>;

/// Raised for violated preconditions on user-supplied values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

/// FFTW's planner is not reentrant; execution on new arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Uniform periodic grid on [center - length/2, center + length/2) with
/// precomputed wavenumbers and FFTW plans. Immutable after construction;
/// plans are executed through the new-array interface so one Grid can be
/// shared read-only between threads.
class Grid {
 public:
  Grid(std::size_t n, double length, double center) : n_(n), length_(length), center_(center) {
    if (n < 8 || n % 2 != 0) {
      throw InvalidArgument("grid.n must be even and >= 8 (got " + std::to_string(n) + ")");
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw InvalidArgument("grid.length must be positive and finite");
    }
    if (!std::isfinite(center)) throw InvalidArgument("grid.center must be finite");
    dx_ = length_ / static_cast<double>(n_);
    nodes_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      nodes_[j] = center_ - 0.5 * length_ + static_cast<double>(j) * dx_;
    }
    const double k0 = 2.0 * std::numbers::pi / length_;
    wavenumbers_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      wavenumbers_[j] = k0 * static_cast<double>(signed_index(j));
    }
    make_plans();
  }

  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  ~Grid() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(c2c_fwd_);
    fftw_destroy_plan(c2c_bwd_);
    fftw_destroy_plan(r2c_);
    fftw_destroy_plan(c2r_);
  }

  std::size_t size() const { return n_; }
  std::size_t half_size() const { return n_ / 2 + 1; }
  double length() const { return length_; }
  double center() const { return center_; }
  double dx() const { return dx_; }
  double left() const { return center_ - 0.5 * length_; }
  std::span<const double> nodes() const { return nodes_; }
  double x(std::size_t j) const { return nodes_[j]; }

  /// Full-spectrum wavenumbers; index n/2 is the Nyquist mode, stored as -n/2.
  std::span<const double> wavenumbers() const { return wavenumbers_; }

  /// Signed DFT index of slot j: 0..n/2-1, then -n/2..-1.
  long signed_index(std::size_t j) const {
    const auto sj = static_cast<long>(j);
    const auto sn = static_cast<long>(n_);
    return (j < n_ / 2) ? sj : sj - sn;
  }

  bool same_layout(const Grid& other) const {
    return n_ == other.n_ && length_ == other.length_ && center_ == other.center_;
  }

  ComplexField forward(std::span<const cplx> f) const {
    check_size(f.size(), n_);
    ComplexField in(f.begin(), f.end());
    ComplexField out(n_);
    fftw_execute_dft(c2c_fwd_, detail::as_fftw(in.data()), detail::as_fftw(out.data()));
    return out;
  }

  /// Normalized inverse of forward().
  ComplexField inverse(std::span<const cplx> spec) const {
    check_size(spec.size(), n_);
    ComplexField in(spec.begin(), spec.end());
    ComplexField out(n_);
    fftw_execute_dft(c2c_bwd_, detail::as_fftw(in.data()), detail::as_fftw(out.data()));
    const double s = 1.0 / static_cast<double>(n_);
    for (auto& z : out) z *= s;
    return out;
  }

  /// Half spectrum (n/2+1 modes) of a real field.
  ComplexField forward_real(std::span<const double> f) const {
    check_size(f.size(), n_);
    RealField in(f.begin(), f.end());
    ComplexField out(half_size());
    fftw_execute_dft_r2c(r2c_, in.data(), detail::as_fftw(out.data()));
    return out;
  }

  RealField inverse_real(std::span<const cplx> half_spec) const {
    check_size(half_spec.size(), half_size());
    ComplexField in(half_spec.begin(), half_spec.end());
    RealField out(n_);
    fftw_execute_dft_c2r(c2r_, detail::as_fftw(in.data()), out.data());
    const double s = 1.0 / static_cast<double>(n_);
    for (auto& x : out) x *= s;
    return out;
  }

  /// Wavenumber of half-spectrum slot j (0..n/2).
  double half_wavenumber(std::size_t j) const {
    return 2.0 * std::numbers::pi * static_cast<double>(j) / length_;
  }

 private:
  static void check_size(std::size_t got, std::size_t want) {
    if (got != want) {
      throw InvalidArgument("field length " + std::to_string(got) + " does not match grid (" +
                            std::to_string(want) + ")");
    }
  }

  void make_plans() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    ComplexField a(n_), b(n_);
    RealField r(n_);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int ni = static_cast<int>(n_);
    c2c_fwd_ = fftw_plan_dft_1d(ni, detail::as_fftw(a.data()), detail::as_fftw(b.data()),
                                FFTW_FORWARD, flags);
    c2c_bwd_ = fftw_plan_dft_1d(ni, detail::as_fftw(a.data()), detail::as_fftw(b.data()),
                                FFTW_BACKWARD, flags);
    r2c_ = fftw_plan_dft_r2c_1d(ni, r.data(), detail::as_fftw(a.data()), flags);
    c2r_ = fftw_plan_dft_c2r_1d(ni, detail::as_fftw(a.data()), r.data(), flags);
  }

  std::size_t n_;
  double length_;
  double center_;
  double dx_ = 0.0;
  RealField nodes_;
  RealField wavenumbers_;
  fftw_plan c2c_fwd_ = nullptr;
  fftw_plan c2c_bwd_ = nullptr;
  fftw_plan r2c_ = nullptr;
  fftw_plan c2r_ = nullptr;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(std::size_t n, double length, double center) {
  return std::make_shared<const Grid>(n, length, center);
}

namespace detail {

/// (ik)^order; odd orders vanish on the Nyquist mode.
inline cplx derivative_symbol(double k, int order, bool nyquist) {
  if (nyquist && order % 2 == 1) return {0.0, 0.0};
  switch (order) {
    case 1:
      return {0.0, k};
    case 2:
      return {-k * k, 0.0};
    case 3:
      return {0.0, -k * k * k};
    default:
      throw InvalidArgument("derivative order must be 1, 2 or 3 (got " + std::to_string(order) +
                            ")");
  }
}

inline void check_order(int order) {
  if (order < 1 || order > 3) {
    throw InvalidArgument("derivative order must be 1, 2 or 3 (got " + std::to_string(order) +
                          ")");
  }
}

}  // namespace detail

inline RealField spectral_derivative(const Grid& g, std::span<const double> f, int order) {
  detail::check_order(order);
  auto spec = g.forward_real(f);
  const std::size_t nyq = g.size() / 2;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    spec[j] *= detail::derivative_symbol(g.half_wavenumber(j), order, j == nyq);
  }
  return g.inverse_real(spec);
}

inline ComplexField spectral_derivative(const Grid& g, std::span<const cplx> f, int order) {
  detail::check_order(order);
  auto spec = g.forward(f);
  const auto k = g.wavenumbers();
  const std::size_t nyq = g.size() / 2;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    spec[j] *= detail::derivative_symbol(k[j], order, j == nyq);
  }
  return g.inverse(spec);
}

/// Periodic trapezoid rule, dx * sum f_j, with compensated summation.
inline double quadrature(const Grid& g, std::span<const double> f) {
  if (f.size() != g.size()) throw InvalidArgument("quadrature: field length mismatch");
  CompensatedSum s;
  for (double x : f) s.add(x);
  return g.dx() * s.value();
}

inline cplx quadrature(const Grid& g, std::span<const cplx> f) {
  if (f.size() != g.size()) throw InvalidArgument("quadrature: field length mismatch");
  CompensatedSum re, im;
  for (const auto& z : f) {
    re.add(z.real());
    im.add(z.imag());
  }
  return g.dx() * cplx{re.value(), im.value()};
}

/// Zeroes every half-spectrum mode with |index| > keep_fraction * n / 2.
inline void truncate_half_spectrum(const Grid& g, std::span<cplx> half_spec, double keep_fraction) {
  const double cutoff = keep_fraction * static_cast<double>(g.size()) / 2.0;
  for (std::size_t j = 0; j < half_spec.size(); ++j) {
    if (static_cast<double>(j) > cutoff) half_spec[j] = 0.0;
  }
}

inline void truncate_spectrum(const Grid& g, std::span<cplx> spec, double keep_fraction) {
  const double cutoff = keep_fraction * static_cast<double>(g.size()) / 2.0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    if (std::abs(static_cast<double>(g.signed_index(j))) > cutoff) spec[j] = 0.0;
  }
}

/// Sample a callable on the grid nodes.
template <class F>
auto sample(const Grid& g, F&& f) {
  using R = std::decay_t<decltype(f(0.0))>;
  std::vector<R> out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out[j] = f(g.x(j));
  return out;
}

}  // namespace skdv
