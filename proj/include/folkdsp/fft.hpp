#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace folkdsp {

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 complex FFT of a fixed size. Twiddles and the
/// bit-reversal permutation are computed once per plan.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n), twiddles_(n / 2), reversed_(n) {
        if (!is_power_of_two(n)) throw std::invalid_argument("FftPlan: size must be a power of two");
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddles_[k] = {std::cos(angle), std::sin(angle)};
        }
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            reversed_[i] = r;
        }
    }

    std::size_t size() const noexcept { return n_; }

    void forward(std::vector<std::complex<double>>& x) const {
        if (x.size() != n_) throw std::invalid_argument("FftPlan::forward: wrong buffer size");
        for (std::size_t i = 0; i < n_; ++i)
            if (i < reversed_[i]) std::swap(x[i], x[reversed_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const auto t = twiddles_[j * stride] * x[start + j + half];
                    x[start + j + half] = x[start + j] - t;
                    x[start + j] += t;
                }
            }
        }
    }

private:
    std::size_t n_;
    std::vector<std::complex<double>> twiddles_;
    std::vector<std::size_t> reversed_;
};

}  // namespace folkdsp
