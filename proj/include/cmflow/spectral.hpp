#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>

namespace cmflow {

/// First and second derivatives of batches of 2*pi-periodic samples by the discrete
/// Fourier transform. Plans are built once; execution is re-entrant (new-array API).
class PeriodicDifferentiator {
 public:
  PeriodicDifferentiator(int length, int batch) : m_(length), batch_(batch) {
    if (length < 2 || length % 2 != 0)
      throw std::invalid_argument("PeriodicDifferentiator: length must be even and >= 2");
    const std::size_t nreal = static_cast<std::size_t>(m_) * batch_;
    const std::size_t ncplx = static_cast<std::size_t>(m_ / 2 + 1) * batch_;
    Buffer<double> real(nreal);
    Buffer<fftw_complex> cplx(ncplx);
    int dims[1] = {m_};
    forward_ = fftw_plan_many_dft_r2c(1, dims, batch_, real.get(), nullptr, 1, m_, cplx.get(),
                                      nullptr, 1, m_ / 2 + 1, FFTW_ESTIMATE);
    backward_ = fftw_plan_many_dft_c2r(1, dims, batch_, cplx.get(), nullptr, 1, m_ / 2 + 1,
                                       real.get(), nullptr, 1, m_, FFTW_ESTIMATE);
    if (forward_ == nullptr || backward_ == nullptr)
      throw std::runtime_error("PeriodicDifferentiator: FFTW planning failed");
  }

  PeriodicDifferentiator(const PeriodicDifferentiator&) = delete;
  PeriodicDifferentiator& operator=(const PeriodicDifferentiator&) = delete;

  ~PeriodicDifferentiator() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  int length() const { return m_; }
  int batch() const { return batch_; }

  /// values: batch rows of `length` samples on s_j = 2*pi*j/length. Either output may be empty.
  void differentiate(std::span<const double> values, std::span<double> d1,
                     std::span<double> d2) const {
    const std::size_t nreal = static_cast<std::size_t>(m_) * batch_;
    const std::size_t half = static_cast<std::size_t>(m_ / 2 + 1);
    if (values.size() != nreal || (!d1.empty() && d1.size() != nreal) ||
        (!d2.empty() && d2.size() != nreal))
      throw std::invalid_argument("PeriodicDifferentiator: size mismatch");

    Buffer<double> real(nreal);
    Buffer<fftw_complex> spec(half * batch_);
    Buffer<fftw_complex> work(half * batch_);
    // Removing the first sample makes constant rows transform to exact zeros.
    for (int r = 0; r < batch_; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * m_;
      for (int j = 0; j < m_; ++j) real.get()[off + j] = values[off + j] - values[off];
    }
    fftw_execute_dft_r2c(forward_, real.get(), spec.get());

    const double scale = 1.0 / m_;
    auto apply = [&](std::span<double> out, int order) {
      for (int r = 0; r < batch_; ++r) {
        for (std::size_t j = 0; j < half; ++j) {
          const std::size_t idx = r * half + j;
          const std::complex<double> c(spec.get()[idx][0], spec.get()[idx][1]);
          std::complex<double> d;
          const double w = static_cast<double>(j);
          if (order == 1)
            d = (static_cast<int>(j) == m_ / 2) ? 0.0 : std::complex<double>(0.0, w) * c;
          else
            d = -w * w * c;
          work.get()[idx][0] = d.real() * scale;
          work.get()[idx][1] = d.imag() * scale;
        }
      }
      fftw_execute_dft_c2r(backward_, work.get(), real.get());
      for (std::size_t i = 0; i < nreal; ++i) out[i] = real.get()[i];
    };
    if (!d1.empty()) apply(d1, 1);
    if (!d2.empty()) apply(d2, 2);
  }

 private:
  template <class T>
  class Buffer {
   public:
    explicit Buffer(std::size_t n) : ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * (n ? n : 1)))) {
      if (ptr_ == nullptr) throw std::bad_alloc();
    }
    ~Buffer() { fftw_free(ptr_); }
    Buffer(const Buffer&) = delete;
    Buffer& operator=(const Buffer&) = delete;
    T* get() const { return ptr_; }

   private:
    T* ptr_;
  };

  int m_;
  int batch_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace cmflow
