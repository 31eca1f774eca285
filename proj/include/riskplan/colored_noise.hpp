#pragma once

#include <Eigen/Dense>

#include "riskplan/rng.hpp"

namespace riskplan {

/// Temporally correlated Gaussian noise with power spectral density
/// proportional to f^-beta, synthesized in the frequency domain and brought
/// to the time domain with an inverse real FFT. beta = 0 is white noise;
/// larger beta concentrates power at low frequencies, producing smoother
/// sequences. Every column of the output is standardized to zero mean and
/// unit population standard deviation, so beta changes only the correlation
/// structure, not the marginal scale.
///
/// Holds one FFT plan per instance; not thread-safe, not copyable.
class ColoredNoiseGenerator {
public:
    explicit ColoredNoiseGenerator(int horizon);
    ~ColoredNoiseGenerator();

    ColoredNoiseGenerator(const ColoredNoiseGenerator&) = delete;
    ColoredNoiseGenerator& operator=(const ColoredNoiseGenerator&) = delete;

    int horizon() const { return horizon_; }

    /// One sequence, horizon x dims. For horizon 1 standardization is
    /// undefined, so a plain standard normal draw per dim is returned.
    Eigen::MatrixXd sample(double beta, int dims, Rng& rng);

private:
    int horizon_;
    double* time_buf_ = nullptr;      // fftw_alloc_real(horizon)
    void* freq_buf_ = nullptr;        // fftw_complex[horizon/2 + 1]
    void* plan_ = nullptr;            // fftw_plan, c2r
};

/// Convenience wrapper constructing a throwaway generator.
Eigen::MatrixXd colored_noise(double beta, int horizon, int dims, Rng& rng);

}  // namespace riskplan
