#pragma once

#include <armadillo>
#include <complex>
#include <cstdint>
#include <random>

namespace mimo {

// What a substream is consumed for. Separate purposes get statistically
// independent streams, so e.g. rescaling the CSI error variance never
// changes the channel realizations drawn in the same trial.
enum class rng_purpose : std::uint64_t {
    channel = 1,
    csi_error = 2,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d4ecbda2577b3fULL;
    return x ^ (x >> 31);
}

} // namespace detail

// Counter-based substream factory: one master seed, independent streams per
// (trial, user, purpose). Trials can run in parallel without sharing state.
class trial_rng {
  public:
    trial_rng(std::uint64_t master_seed, std::uint64_t trial)
        : master_(master_seed), trial_(trial) {}

    std::mt19937_64 stream(std::uint64_t user, rng_purpose purpose) const {
        std::uint64_t s = detail::splitmix64(master_);
        s = detail::splitmix64(s ^ (trial_ * 0x9e3779b97f4a7c15ULL));
        s = detail::splitmix64(s ^ (user * 0xc2b2ae3d27d4eb4fULL));
        s = detail::splitmix64(s ^ static_cast<std::uint64_t>(purpose));
        return std::mt19937_64(s);
    }

    std::uint64_t trial() const { return trial_; }

  private:
    std::uint64_t master_;
    std::uint64_t trial_;
};

// Standard circular complex Gaussian: CN(0,1) per entry
// (real and imaginary parts each N(0, 1/2)).
inline arma::cx_mat randn_circular(std::mt19937_64 &eng, arma::uword rows, arma::uword cols) {
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));
    arma::cx_mat out(rows, cols);
    for (arma::uword r = 0; r < rows; ++r)
        for (arma::uword c = 0; c < cols; ++c)
            out(r, c) = std::complex<double>(gauss(eng), gauss(eng));
    return out;
}

} // namespace mimo
