#include "carmwf/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace carmwf {
namespace {

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
// Plans are cached per transform size and reused with the new-array API.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan forward(std::size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = fwd_.find(n);
        if (it != fwd_.end()) return it->second;
        std::vector<double> in(n);
        std::vector<std::complex<double>> out(n / 2 + 1);
        fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                           reinterpret_cast<fftw_complex*>(out.data()),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fftw: failed to create r2c plan");
        fwd_.emplace(n, p);
        return p;
    }

    fftw_plan backward(std::size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = bwd_.find(n);
        if (it != bwd_.end()) return it->second;
        std::vector<std::complex<double>> in(n / 2 + 1);
        std::vector<double> out(n);
        fftw_plan p = fftw_plan_dft_c2r_1d(static_cast<int>(n),
                                           reinterpret_cast<fftw_complex*>(in.data()),
                                           out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fftw: failed to create c2r plan");
        bwd_.emplace(n, p);
        return p;
    }

private:
    std::mutex mutex_;
    std::unordered_map<std::size_t, fftw_plan> fwd_;
    std::unordered_map<std::size_t, fftw_plan> bwd_;
};

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n) {
    if (n == 0) throw std::invalid_argument("rfft: n must be positive");
    std::vector<double> in(n, 0.0);
    const std::size_t copy = std::min(n, x.size());
    std::memcpy(in.data(), x.data(), copy * sizeof(double));
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_execute_dft_r2c(PlanCache::instance().forward(n), in.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n) {
    if (n == 0) throw std::invalid_argument("irfft: n must be positive");
    if (spectrum.size() != n / 2 + 1) {
        throw std::invalid_argument("irfft: spectrum must have n/2+1 bins");
    }
    // c2r destroys its input, so work on a copy.
    std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
    std::vector<double> out(n);
    fftw_execute_dft_c2r(PlanCache::instance().backward(n),
                         reinterpret_cast<fftw_complex*>(in.data()), out.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= scale;
    return out;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace carmwf
